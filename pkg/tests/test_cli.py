import json
import os

import numpy as np
import pytest

from dancesynth.cau import EOD, read_corpus
from dancesynth.cli import RunConfig, main, read_log, store_hash
from dancesynth.errors import ParameterError
from dancesynth.evaluation import parse_table
from dancesynth.inpainter import Inpainter, InpainterConfig, save_inpainter
from dancesynth.motion import load_clip, save_clip
from dancesynth.predictor import CauPredictor, PredictorConfig, save_predictor

TINY = {
    "seed": 3,
    "motion_clips": 3,
    "windows": [4, 8, 12, 16],
    "data": {"n_songs": 2, "song_beats": [6, 8], "n_performances": 3},
    "predictor": {"epochs": 4, "lr": 3e-3},
    "inpainter": {"clip_len": 32, "window": 8, "embed_dim": 4, "hidden": 2, "levels": 2, "codec_layers": 2,
                  "codec_width": 4},
    "inpaint_train": {"epochs": 4, "batch": 4, "steps_per_epoch": 2, "lr": 1e-2, "patience": 0},
    "autoencoder": {"epochs": 4, "batch": 16, "lr": 3e-3},
}


def _config(tmp, **overrides):
    data = json.loads(json.dumps(TINY))
    for key, value in overrides.items():
        section, _, field = key.partition("__")
        if field:
            data[section][field] = value
        else:
            data[section] = value
    path = os.path.join(tmp, f"config{len(os.listdir(tmp))}.json")
    with open(path, "w") as fh:
        json.dump(data, fh)
    return path


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = _config(str(root))
    assert main(["gen-data", "--config", cfg, "--out", str(root / "data")]) == 0
    return root, cfg


# configuration ---------------------------------------------------------------------

def test_defaults_match_reference_hyperparameters():
    cfg = RunConfig()
    p = cfg.predictor
    assert (p.epochs, p.lr, p.patience, p.factor) == (1000, 1e-3, 8, 0.9)
    h = cfg.inpaint_train
    assert (h.epochs, h.lr, h.batch, h.patience, h.factor) == (400, 1e-3, 48, 5, 0.7)
    assert (cfg.inpainter.window, cfg.inpainter.clip_len) == (64, 192)
    assert RunConfig.from_json(cfg.to_json()) == cfg
    with pytest.raises(ParameterError, match="data.bogus"):
        RunConfig.from_json({"data": {"bogus": 1}})


# gen-data --------------------------------------------------------------------------

def test_gen_data_default_and_byte_identical(tmp_path):
    assert main(["gen-data", "--seed", "5", "--out", str(tmp_path / "a")]) == 0
    assert main(["gen-data", "--seed", "5", "--out", str(tmp_path / "b")]) == 0
    manifest = json.load(open(tmp_path / "a" / "manifest.json"))
    assert manifest["n_songs"] == 8 and manifest["vocab_size"] == 8 and manifest["seed"] == 5
    assert len(read_corpus(str(tmp_path / "a" / "corpus.txt"))) == 8
    assert store_hash(str(tmp_path / "a")) == store_hash(str(tmp_path / "b"))


def test_gen_data_invalid_tempo_names_the_field(tmp_path, capsys):
    cfg = _config(str(tmp_path), data__tempo_range=[200.0, 100.0])
    assert main(["gen-data", "--config", cfg, "--out", str(tmp_path / "x")]) == 2
    assert "tempo_range" in capsys.readouterr().err
    assert not os.path.exists(tmp_path / "x")


def test_usage_errors_exit_two(tmp_path, capsys):
    assert main(["gen-data"]) == 2
    assert main(["train-cau", "--music", str(tmp_path / "none"), "--out", str(tmp_path / "r")]) == 2
    assert "none" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["gen-data", "--config", str(bad), "--out", str(tmp_path / "y")]) == 2


# training --------------------------------------------------------------------------

def _losses(run):
    """Loss per (branch, epoch); inpainter branches interleave in a resumed log."""
    log = read_log(os.path.join(run, "train.log"))
    return sorted((e.get("branch", ""), e["epoch"], e["loss"]) for e in log)


@pytest.mark.parametrize("command, key", [("train-cau", "predictor"), ("train-inpaint", "inpaint_train"),
                                          ("train-ae", "autoencoder")])
def test_training_logs_and_resume(work, tmp_path, command, key):
    root, cfg = work
    data = str(root / "data")
    full, part, resumed = str(tmp_path / "full"), str(tmp_path / "part"), str(tmp_path / "resumed")
    assert main([command, "--config", cfg, "--music", data, "--out", full]) == 0
    short = _config(str(tmp_path), **{f"{key}__epochs": 2})
    assert main([command, "--config", short, "--music", data, "--out", part]) == 0
    assert main([command, "--config", cfg, "--music", data, "--out", resumed, "--checkpoint", part]) == 0
    log = read_log(os.path.join(full, "train.log"))
    for branch in {e.get("branch") for e in log}:
        bests = [e["best"] for e in log if e.get("branch") == branch]
        assert all(b2 <= b1 for b1, b2 in zip(bests, bests[1:]))
    assert len(_losses(part)) < len(_losses(resumed))
    # the resumed run continues the epoch counter and reproduces the uninterrupted one
    assert _losses(resumed) == _losses(full)
    assert store_hash(os.path.join(resumed, "checkpoint")) == store_hash(os.path.join(full, "checkpoint"))
    manifest = json.load(open(os.path.join(full, "manifest.json")))
    assert manifest["seed"] == 3 and manifest["checkpoint"] == store_hash(os.path.join(full, "checkpoint"))


def test_training_without_data_exits_two(tmp_path):
    assert main(["train-inpaint", "--music", str(tmp_path), "--out", str(tmp_path / "r")]) == 2
    assert main(["train-ae", "--out", str(tmp_path / "r")]) == 2


# synthesize ------------------------------------------------------------------------

def _stub_checkpoints(root, vocab, n_joints):
    pred = CauPredictor(PredictorConfig(vocab))
    for _, p in pred.params.items():
        p.data = np.zeros_like(p.data)
    pred.params["dec.out.bias"].data[EOD] = 50.0
    save_predictor(os.path.join(root, "pred"), pred, {"seed": 0})
    inp = Inpainter(InpainterConfig(**TINY["inpainter"]), n_joints)
    inp.trained = True
    save_inpainter(os.path.join(root, "inp"), inp, {"seed": 0})
    return os.path.join(root, "pred"), os.path.join(root, "inp")


def _first_pack(data):
    rec = read_corpus(os.path.join(data, "corpus.txt"))[0]
    return os.path.join(data, rec.pack_path)


def test_synthesize_with_stub_ends_immediately(work, tmp_path):
    root, cfg = work
    data = str(root / "data")
    pred, inp = _stub_checkpoints(str(tmp_path), 8, 8)
    out = str(tmp_path / "out")
    args = ["synthesize", "--config", cfg, "--music", _first_pack(data), "--catalog", os.path.join(data, "catalog.txt"),
            "--checkpoint", pred, "--checkpoint", inp, "--out", out]
    assert main(args) == 0
    assert len(load_clip(os.path.join(out, "motion"))) == 0
    assert list(read_corpus(os.path.join(out, "sequence.txt"))[0].sequence.tokens) == [EOD]
    manifest = json.load(open(os.path.join(out, "manifest.json")))
    assert manifest["seed"] == 3 and manifest["frames"] == 0 and manifest["tokens"] == [EOD]
    assert manifest["junctions"] == []
    assert manifest["checkpoints"] == {"inpainter": store_hash(inp), "predictor": store_hash(pred)}
    assert "config" in manifest
    assert main(args[:-4] + ["--out", out]) == 2


def test_synthesize_trained_is_deterministic(work, tmp_path):
    root, cfg = work
    data = str(root / "data")
    assert main(["train-cau", "--config", cfg, "--music", data, "--out", str(tmp_path / "cau")]) == 0
    assert main(["train-inpaint", "--config", cfg, "--music", data, "--out", str(tmp_path / "inp")]) == 0
    outs = []
    for k in range(2):
        out = str(tmp_path / f"out{k}")
        assert main(["synthesize", "--config", cfg, "--music", _first_pack(data),
                     "--catalog", os.path.join(data, "catalog.txt"), "--checkpoint", str(tmp_path / "cau"),
                     "--checkpoint", str(tmp_path / "inp"), "--out", out]) == 0
        outs.append(out)
    assert store_hash(outs[0]) == store_hash(outs[1])
    motion = load_clip(os.path.join(outs[0], "motion"))
    if len(motion):
        q = motion.data[:, 3:].reshape(len(motion), -1, 4)
        assert np.allclose(np.linalg.norm(q, axis=-1), 1.0, atol=1e-9)
    assert os.path.isfile(os.path.join(outs[0], "keypoints.txt"))


# evaluate --------------------------------------------------------------------------

def test_evaluate_bleu_and_mismatches(work, tmp_path):
    root, cfg = work
    corpus = str(root / "data" / "corpus.txt")
    report = str(tmp_path / "bleu.tsv")
    assert main(["evaluate", "--mode", "bleu", corpus, corpus, "--out", report]) == 0
    assert "bleu4\t1\n" in open(report).read()
    assert main(["evaluate", "--mode", "bleu", corpus]) == 2
    assert main(["evaluate", corpus, corpus]) == 2
    assert main(["evaluate", "--mode", "sweep", corpus]) == 2
    assert main(["evaluate", "--mode", "fid", corpus, corpus]) == 2


def test_evaluate_geodesic_and_fid(work, tmp_path):
    root, cfg = work
    data = str(root / "data")
    clip = os.path.join(data, "motion", "clip000")
    report = str(tmp_path / "geo.tsv")
    assert main(["evaluate", "--mode", "geodesic", clip, clip, "--window", "8", "--out", report]) == 0
    assert float(open(report).read().split("geodesic\t")[-1]) < 1e-7
    full = load_clip(clip)
    save_clip(str(tmp_path / "short"), full.with_data(full.data[:-1]))
    assert main(["evaluate", "--mode", "geodesic", clip, str(tmp_path / "short")]) == 2
    assert main(["train-ae", "--config", cfg, "--music", data, "--out", str(tmp_path / "ae")]) == 0
    report = str(tmp_path / "fid.tsv")
    motion = os.path.join(data, "motion")
    assert main(["evaluate", "--mode", "fid", "--checkpoint", str(tmp_path / "ae"), motion, motion,
                 "--out", report]) == 0
    assert float(open(report).read().split("fid\t")[-1]) < 1e-6


def test_evaluate_sweep_emits_eight_rows(work, tmp_path):
    root, cfg = work
    report = str(tmp_path / "sweep.tsv")
    assert main(["evaluate", "--mode", "sweep", "--config", cfg, "--music", str(root / "data"), "--out", report]) == 0
    rows = parse_table(open(report).read())
    assert len(rows) == 8 and [r["window"] for r in rows] == [4, 4, 8, 8, 12, 12, 16, 16]
