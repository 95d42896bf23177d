"""Command-line entry point: data generation, both training stages, synthesis and evaluation.

Every command takes ``--seed`` and ``--config`` (a JSON file whose sections
override the built-in defaults) and writes a ``manifest.json`` next to its
outputs. Exit status is 0 on success, 2 for bad usage or data, and 3 when
an internal consistency check fails.
"""

import argparse
import dataclasses
import hashlib
import json
import logging
import os
import sys
import time

import numpy as np

from .cau import SongRecord, corpus_bleu, load_catalog, read_corpus, write_corpus
from .errors import DanceSynthError, ParameterError, ValidationError
from .evaluation import (clip_fid, format_table, geodesic_report, junction_crops, load_autoencoder, save_autoencoder,
                         train_autoencoder, window_sweep)
from .inpainter import (Inpainter, InpainterConfig, InpainterHyper, load_inpainter, load_training_state,
                        save_inpainter, save_training_state, stitch, train_inpainter)
from .motion import forward_kinematics, load_clip, save_clip, write_keypoints
from .music import (SyntheticConfig, beat_times, generate_motion_set, generate_synthetic_corpus, load_feature_pack,
                    load_motion_set, save_corpus, save_motion_set)
from .nncore import OptimizerState, PlateauScheduler, load_checkpoint, save_checkpoint
from .predictor import (PredictorConfig, PredictorHyper, generate, load_predictor, save_predictor,
                        train_predictor)

log = logging.getLogger("dancesynth")

EXIT_OK, EXIT_USAGE, EXIT_INTERNAL = 0, 2, 3


class UsageError(DanceSynthError):
    """Arguments do not fit the requested command or mode."""


class InvariantError(Exception):
    """An output failed an internal consistency check."""


@dataclasses.dataclass
class AutoencoderHyper:
    epochs: int = 200
    batch: int = 32
    lr: float = 1e-3


@dataclasses.dataclass
class RunConfig:
    seed: int = 0
    motion_clips: int = 16
    windows: tuple = (16, 32, 64, 128)
    data: SyntheticConfig = dataclasses.field(default_factory=SyntheticConfig)
    predictor: PredictorHyper = dataclasses.field(default_factory=PredictorHyper)
    inpainter: InpainterConfig = dataclasses.field(default_factory=InpainterConfig)
    inpaint_train: InpainterHyper = dataclasses.field(default_factory=InpainterHyper)
    autoencoder: AutoencoderHyper = dataclasses.field(default_factory=AutoencoderHyper)

    SECTIONS = ("data", "predictor", "inpainter", "inpaint_train", "autoencoder")

    def to_json(self):
        out = {"seed": self.seed, "motion_clips": self.motion_clips, "windows": list(self.windows)}
        for name in self.SECTIONS:
            section = dataclasses.asdict(getattr(self, name))
            out[name] = {k: list(v) if isinstance(v, tuple) else v for k, v in section.items()}
        return out

    @classmethod
    def from_json(cls, data):
        cfg = cls()
        for key, value in data.items():
            if key in cls.SECTIONS:
                if not isinstance(value, dict):
                    raise ParameterError(f"config section {key!r} must be an object")
                current = getattr(cfg, key)
                known = {f.name for f in dataclasses.fields(current)}
                for k in value:
                    if k not in known:
                        raise ParameterError(f"unknown config key {key}.{k}")
                merged = {**dataclasses.asdict(current), **{k: tuple(v) if isinstance(v, list) else v
                                                              for k, v in value.items()}}
                setattr(cfg, key, type(current)(**merged))
            elif key in ("seed", "motion_clips"):
                setattr(cfg, key, int(value))
            elif key == "windows":
                setattr(cfg, key, tuple(int(w) for w in value))
            else:
                raise ParameterError(f"unknown config key {key}")
        return cfg


def load_run_config(path=None, seed=None):
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: not valid JSON ({exc})") from None
        cfg = RunConfig.from_json(data)
    else:
        cfg = RunConfig()
    if seed is not None:
        cfg.seed = seed
    cfg.data.validate()
    return cfg


# ---------------------------------------------------------------------------
# file helpers

def _write_json(path, data):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(data, fh, sort_keys=True, indent=1)
        fh.write("\n")


def store_hash(path):
    """SHA-256 over every file under ``path`` (names and bytes, sorted)."""
    h = hashlib.sha256()
    if os.path.isfile(path):
        with open(path, "rb") as fh:
            h.update(fh.read())
        return h.hexdigest()
    for root, dirs, files in os.walk(path):
        dirs.sort()
        for name in sorted(files):
            full = os.path.join(root, name)
            h.update(os.path.relpath(full, path).replace(os.sep, "/").encode() + b"\0")
            with open(full, "rb") as fh:
                h.update(fh.read())
    return h.hexdigest()


def _require_dir(path, what):
    if not path or not os.path.isdir(path):
        raise UsageError(f"{what} {path!r} does not exist")
    return path


def _checkpoint_path(path):
    """Accept a training run directory or the checkpoint store itself."""
    if os.path.isdir(os.path.join(path, "checkpoint")):
        return os.path.join(path, "checkpoint")
    if os.path.isfile(os.path.join(path, "manifest.txt")):
        return path
    raise UsageError(f"no checkpoint found at {path!r}")


def _checkpoint_kind(path):
    return load_checkpoint(path)[2].get("kind")


class _LogFile:
    """Append-only JSON-lines epoch log."""

    def __init__(self, path, previous=()):
        self.path = path
        existing = read_log(path) if os.path.isfile(path) else []
        with open(path, "a", encoding="utf-8", newline="\n") as fh:
            for entry in list(previous)[len(existing):]:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")

    def __call__(self, entry):
        with open(self.path, "a", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")
        log.info("epoch %d loss %.6g", entry["epoch"], entry["loss"])


def read_log(path):
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _corpus_songs(root):
    corpus = os.path.join(_require_dir(root, "corpus directory"), "corpus.txt")
    records = read_corpus(corpus)
    return [(load_feature_pack(os.path.join(root, r.pack_path)), r.sequence) for r in records], records


# ---------------------------------------------------------------------------
# commands

def cmd_gen_data(args, cfg):
    if not args.out:
        raise UsageError("gen-data needs --out")
    corpus = generate_synthetic_corpus(cfg.seed, cfg.data)
    save_corpus(args.out, corpus, cfg.seed, cfg.data)
    motion = generate_motion_set(cfg.seed + 1, corpus.catalog, cfg.motion_clips)
    save_motion_set(os.path.join(args.out, "motion"), motion)
    _write_json(os.path.join(args.out, "manifest.json"),
                {"command": "gen-data", "seed": cfg.seed, "config": cfg.to_json(), "n_songs": len(corpus.songs),
                 "vocab_size": corpus.catalog.vocab_size, "motion_clips": len(motion.clips)})
    print(f"wrote {len(corpus.songs)} songs, {corpus.catalog.vocab_size}-token catalog and "
          f"{len(motion.clips)} motion clips to {args.out}")


def cmd_train_cau(args, cfg):
    if not args.out or not args.music:
        raise UsageError("train-cau needs --music CORPUS_DIR and --out RUN_DIR")
    songs, _ = _corpus_songs(args.music)
    catalog = load_catalog(args.catalog or os.path.join(args.music, "catalog.txt"))
    hyper = dataclasses.replace(cfg.predictor, seed=cfg.seed)
    os.makedirs(args.out, exist_ok=True)
    model = optimizer = scheduler = best = None
    previous = []
    if args.checkpoint:
        run = args.checkpoint[0]
        model, _, _ = load_predictor(_checkpoint_path(run))
        last, optim, meta = load_checkpoint(os.path.join(run, "resume"))
        optimizer = OptimizerState.from_meta(meta["optimizer"], optim)
        scheduler = PlateauScheduler.from_meta(meta["scheduler"])
        previous = read_log(os.path.join(run, "train.log"))
        best = model.params.state()
        model.params.load_state(last)
    remaining = max(0, hyper.epochs - len(previous))
    logger = _LogFile(os.path.join(args.out, "train.log"), previous)
    result = train_predictor(songs, catalog, PredictorConfig(catalog.vocab_size),
                             dataclasses.replace(hyper, epochs=remaining),
                             model=model, optimizer=optimizer, scheduler=scheduler, start_epoch=len(previous),
                             log=previous, callback=logger, best_params=best)
    save_predictor(os.path.join(args.out, "checkpoint"), result.model,
                   {"seed": cfg.seed, "epochs": len(result.log), "best_loss": result.best_loss})
    save_checkpoint(os.path.join(args.out, "resume"), result.last_state, {"kind": "predictor-train"},
                    result.optimizer, result.scheduler)
    _write_json(os.path.join(args.out, "manifest.json"),
                {"command": "train-cau", "seed": cfg.seed, "config": cfg.to_json(), "epochs": len(result.log),
                 "best_loss": result.best_loss, "corpus": store_hash(os.path.join(args.music, "corpus.txt")),
                 "checkpoint": store_hash(os.path.join(args.out, "checkpoint"))})
    print(f"predictor: {len(result.log)} epochs, best teacher-forced NLL {result.best_loss:.6g}")


def _inpainter_config(args, cfg):
    c = cfg.inpainter
    if args.window is not None:
        c = dataclasses.replace(c, window=args.window)
    return c


def cmd_train_inpaint(args, cfg):
    if not args.out or not args.music:
        raise UsageError("train-inpaint needs --music CORPUS_DIR and --out RUN_DIR")
    motion = load_motion_set(os.path.join(_require_dir(args.music, "corpus directory"), "motion"))
    hyper = dataclasses.replace(cfg.inpaint_train, seed=cfg.seed)
    os.makedirs(args.out, exist_ok=True)
    n_joints = motion.clips[0].n_joints
    resume, previous = None, []
    if args.checkpoint:
        run = args.checkpoint[0]
        model, _ = load_inpainter(_checkpoint_path(run))
        resume = load_training_state(os.path.join(run, "resume"))
        previous = read_log(os.path.join(run, "train.log"))
    else:
        model = Inpainter(_inpainter_config(args, cfg), n_joints, cfg.seed)
    logger = _LogFile(os.path.join(args.out, "train.log"), previous)
    for name in model.branches:
        done = len(resume[name].log) if resume and name in resume else 0
        train_inpainter(motion.clips, model.config, dataclasses.replace(hyper, epochs=max(0, hyper.epochs - done)),
                        n_joints, model, logger, branches=(name,), resume=resume, junctions=motion.junctions)
    save_inpainter(os.path.join(args.out, "checkpoint"), model, {"seed": cfg.seed})
    save_training_state(os.path.join(args.out, "resume"), model.states)
    best = {name: min(e["eval"] for e in st.log) if st.log else None for name, st in model.states.items()}
    _write_json(os.path.join(args.out, "manifest.json"),
                {"command": "train-inpaint", "seed": cfg.seed, "config": cfg.to_json(),
                 "window": model.config.window, "best_loss": best,
                 "motion": store_hash(os.path.join(args.music, "motion")),
                 "checkpoint": store_hash(os.path.join(args.out, "checkpoint"))})
    print("inpainter: " + ", ".join(f"{k} best loss {v:.6g}" for k, v in best.items() if v is not None))


def cmd_train_ae(args, cfg):
    if not args.out or not args.music:
        raise UsageError("train-ae needs --music CORPUS_DIR and --out RUN_DIR")
    motion = load_motion_set(os.path.join(_require_dir(args.music, "corpus directory"), "motion"))
    h = cfg.autoencoder
    os.makedirs(args.out, exist_ok=True)
    model = optimizer = last = None
    previous = []
    if args.checkpoint:
        run = args.checkpoint[0]
        model, _ = load_autoencoder(_checkpoint_path(run))
        last, optim, meta = load_checkpoint(os.path.join(run, "resume"))
        optimizer = OptimizerState.from_meta(meta["optimizer"], optim)
        previous = read_log(os.path.join(run, "train.log"))
    logger = _LogFile(os.path.join(args.out, "train.log"), previous)
    result = train_autoencoder(motion.clips, None, max(0, h.epochs - len(previous)), h.batch, h.lr, cfg.seed, logger,
                               model, optimizer, previous, last)
    save_autoencoder(os.path.join(args.out, "checkpoint"), result.model, {"seed": cfg.seed})
    save_checkpoint(os.path.join(args.out, "resume"), result.last_state, {"kind": "autoencoder-train"},
                    result.optimizer)
    best = min(e["loss"] for e in result.log) if result.log else None
    _write_json(os.path.join(args.out, "manifest.json"),
                {"command": "train-ae", "seed": cfg.seed, "config": cfg.to_json(), "epochs": len(result.log),
                 "best_loss": best, "checkpoint": store_hash(os.path.join(args.out, "checkpoint"))})
    print(f"autoencoder: {len(result.log)} epochs, best reconstruction loss {best}")


def _check_motion(clip):
    if len(clip) == 0:
        return
    data = clip.data
    if not np.all(np.isfinite(data)):
        raise InvariantError("synthesized motion has non-finite values")
    norms = np.linalg.norm(data[:, 3:].reshape(len(data), -1, 4), axis=-1)
    if np.max(np.abs(norms - 1.0)) > 1e-9:
        raise InvariantError("synthesized motion has non-unit quaternions")


def cmd_synthesize(args, cfg):
    if not args.music or not args.out or not args.catalog:
        raise UsageError("synthesize needs --music PACK_DIR, --catalog FILE and --out DIR")
    if not args.checkpoint:
        raise UsageError("synthesize needs --checkpoint for the predictor and the inpainter")
    stores = {}
    for path in args.checkpoint:
        store = _checkpoint_path(path)
        stores[_checkpoint_kind(store)] = store
    missing = {"predictor", "inpainter"} - set(stores)
    if missing:
        raise UsageError(f"missing checkpoint(s): {sorted(missing)}")
    catalog = load_catalog(args.catalog)
    pack = load_feature_pack(_require_dir(args.music, "feature pack"))
    predictor, _, _ = load_predictor(stores["predictor"])
    inpainter, _ = load_inpainter(stores["inpainter"])
    grid = beat_times(pack)
    t0 = time.perf_counter()
    seq = generate(pack, predictor, catalog, grid)
    t1 = time.perf_counter()
    motion, junctions = stitch(seq, catalog, grid, inpainter, return_junctions=True)
    t2 = time.perf_counter()
    _check_motion(motion)
    os.makedirs(args.out, exist_ok=True)
    save_clip(os.path.join(args.out, "motion"), motion)
    write_keypoints(os.path.join(args.out, "keypoints.txt"),
                    forward_kinematics(motion) if len(motion) else np.zeros((0, motion.n_joints + 1, 3)),
                    motion.fps)
    name = os.path.basename(os.path.normpath(args.music))
    write_corpus(os.path.join(args.out, "sequence.txt"), [SongRecord(name, "-", seq)])
    _write_json(os.path.join(args.out, "manifest.json"),
                {"command": "synthesize", "seed": cfg.seed, "config": cfg.to_json(),
                 "checkpoints": {k: store_hash(v) for k, v in sorted(stores.items())},
                 "catalog": store_hash(args.catalog), "music": store_hash(args.music),
                 "tokens": list(seq.tokens), "frames": len(motion),
                 "junctions": [int(j) for j in junctions]})
    print("token  name          beats      start_s    end_s")
    for tok, (a, b) in zip(seq.tokens, seq.spans):
        start = grid.beat(a) if len(grid) else 0.0
        end = grid.beat(b) if len(grid) else 0.0
        print(f"{tok:5d}  {catalog.token(tok).name:12s}  {a:4d}-{b:<4d}  {start:8.3f}  {end:8.3f}")
    print(f"{len(motion)} frames at {motion.fps} fps; predict {t1 - t0:.2f}s, stitch {t2 - t1:.2f}s")


def _clip_set(path):
    """A single clip store or a directory of clip stores."""
    if os.path.isfile(os.path.join(path, "manifest.txt")):
        return [load_clip(path)]
    if not os.path.isdir(path):
        raise UsageError(f"{path!r} is neither a clip nor a directory of clips")
    names = sorted(n for n in os.listdir(path) if os.path.isfile(os.path.join(path, n, "manifest.txt")))
    if not names:
        raise UsageError(f"no clips under {path!r}")
    return [load_clip(os.path.join(path, n)) for n in names]


def cmd_evaluate(args, cfg):
    mode, inputs = args.mode, args.inputs
    if mode is None:
        raise UsageError("evaluate needs --mode bleu|geodesic|fid|sweep")
    if mode in ("bleu", "geodesic", "fid") and len(inputs) != 2:
        raise UsageError(f"--mode {mode} takes two inputs (generated, reference), got {len(inputs)}")
    if mode == "sweep" and (inputs or not args.music):
        raise UsageError("--mode sweep takes --music CORPUS_DIR and no positional inputs")
    if mode == "bleu":
        cand, ref = read_corpus(inputs[0]), read_corpus(inputs[1])
        if len(cand) != len(ref):
            raise UsageError(f"{len(cand)} generated vs {len(ref)} reference sequences")
        score = corpus_bleu([c.sequence.tokens for c in cand], [r.sequence.tokens for r in ref])
        report = f"mode\tbleu\nsequences\t{len(cand)}\nbleu4\t{score:.9g}\n"
    elif mode == "geodesic":
        gen, ref = load_clip(inputs[0]), load_clip(inputs[1])
        if len(gen) != len(ref):
            raise UsageError(f"clip lengths differ: {len(gen)} vs {len(ref)}")
        mask = None
        if args.window:
            start = len(gen) // 2 - args.window // 2
            mask = np.arange(start, start + args.window)
        score = geodesic_report(gen, ref, mask)
        report = f"mode\tgeodesic\nframes\t{len(gen) if mask is None else len(mask)}\ngeodesic\t{score:.9g}\n"
    elif mode == "fid":
        if not args.checkpoint:
            raise UsageError("--mode fid needs --checkpoint for the motion autoencoder")
        ae, _ = load_autoencoder(_checkpoint_path(args.checkpoint[0]))
        score = clip_fid(_clip_set(inputs[0]), _clip_set(inputs[1]), ae)
        report = f"mode\tfid\nfid\t{score:.9g}\n"
    elif mode == "sweep":
        motion = load_motion_set(os.path.join(_require_dir(args.music, "corpus directory"), "motion"))
        if args.checkpoint:
            ae, _ = load_autoencoder(_checkpoint_path(args.checkpoint[0]))
        else:
            h = cfg.autoencoder
            ae = train_autoencoder(motion.clips, None, h.epochs, h.batch, h.lr, cfg.seed).model
        crops = junction_crops(motion, cfg.inpainter.clip_len)
        windows = (args.window,) if args.window else cfg.windows
        hyper = dataclasses.replace(cfg.inpaint_train, seed=cfg.seed)

        def train(w):
            log.info("training window %d", w)
            model = Inpainter(dataclasses.replace(cfg.inpainter, window=w), motion.clips[0].n_joints, cfg.seed)
            return train_inpainter(motion.clips, model.config, hyper, model=model, branches=("joint", "merged"),
                                   junctions=motion.junctions)
        report = format_table(window_sweep(crops, train, windows, ae))
    else:
        raise UsageError(f"unknown mode {mode!r}")
    if args.out:
        os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(report)
    print(report, end="")


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train-cau": cmd_train_cau,
    "train-inpaint": cmd_train_inpaint,
    "train-ae": cmd_train_ae,
    "synthesize": cmd_synthesize,
    "evaluate": cmd_evaluate,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="dancesynth", description="Music-driven dance synthesis")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--out", help="output directory (report file for evaluate)")
        p.add_argument("--checkpoint", action="append",
                       help="checkpoint or run directory; repeat for several (resume for train-*)")
        p.add_argument("--catalog", help="catalog file")
        p.add_argument("--music", help="corpus directory, or a feature pack for synthesize")
        p.add_argument("--window", type=int, default=None, help="mask window in frames")
        p.add_argument("--mode", choices=("bleu", "geodesic", "fid", "sweep"), help="evaluate: metric")
        if name == "evaluate":
            p.add_argument("inputs", nargs="*", help="generated and reference inputs")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if not logging.getLogger().handlers:
        logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if not hasattr(args, "inputs"):
        args.inputs = []
    try:
        cfg = load_run_config(args.config, args.seed)
        COMMANDS[args.command](args, cfg)
    except (DanceSynthError, OSError) as exc:
        print(f"dancesynth {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantError as exc:
        print(f"dancesynth {args.command}: internal check failed: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception:  # noqa: BLE001 - anything unexpected is an internal failure
        log.exception("unexpected failure")
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
