"""Stage two: regenerate the frames around a junction between two clips.

A fixed-length window of frames, with its centre zeroed, goes through a
per-frame encoder into an embedding space, a 2D U-Net over the resulting
``time x embedding`` plane, and a per-frame decoder back to parameter space.
Joint rotations and the root are handled by two networks of identical shape
with separate weights.

The root network works in a crop-local frame: the crop's first-frame yaw is
rotated to zero and its first displacement zeroed, and both are restored on
the way out.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import blobio
from .cau import EOD, NIL
from .errors import DataError, DimensionError, ParameterError, StateError, ValidationError
from .motion import (ROOT_DIMS, MotionClip, align_beats, align_root_points, concatenate,
                     detect_kinematic_beats, hold_clip, interpolate_gap, joint_rotation_loss, quat, rest_frame,
                     root_point_loss)
from .nncore import (HE_GAIN, Conv2d, ConvTranspose2d, Dense, OptimizerState, ParamSet, PlateauScheduler, adam,
                     load_checkpoint, no_grad, optimizer_step, relu, save_checkpoint)
from .nncore import tensor as T

BRANCHES = ("joint", "root")


@dataclass
class InpainterConfig:
    clip_len: int = 192
    window: int = 64
    embed_dim: int = 84
    hidden: int = 32
    levels: int = 4
    codec_layers: int = 6
    codec_width: int = 84
    variant: str = "full"  # "full", "no_encoder" or "merged"

    def __post_init__(self):
        if not 0 <= self.window < self.clip_len:
            raise ParameterError(f"window {self.window} must lie in [0, clip_len {self.clip_len})")
        if self.clip_len % 2 or self.window % 2:
            raise ParameterError("clip_len and window must be even so the mask splits evenly")
        if self.variant not in ("full", "no_encoder", "merged"):
            raise ParameterError(f"unknown variant {self.variant!r}")
        for name in ("embed_dim", "hidden", "levels", "codec_layers", "codec_width"):
            if getattr(self, name) < 1:
                raise ParameterError(f"{name} must be >= 1")

    @property
    def half(self):
        return self.clip_len // 2

    def mask_range(self):
        start = self.half - self.window // 2
        return start, start + self.window

    def to_json(self):
        return asdict(self)

    @classmethod
    def from_json(cls, data):
        return cls(**data)


@dataclass
class InpainterHyper:
    epochs: int = 400
    lr: float = 1e-3
    batch: int = 48
    patience: int = 5
    factor: float = 0.7
    steps_per_epoch: int | None = None
    seed: int = 0


def mask_clip(data, window, junction=None):
    """Zero ``window`` frames centered on ``junction`` (default: the middle).

    Returns ``(masked copy, frame indices)``.
    """
    data = np.asarray(data, dtype=np.float64)
    n = data.shape[0]
    if window >= n or window < 0:
        raise ParameterError(f"mask window {window} must be smaller than the clip ({n} frames)")
    junction = n // 2 if junction is None else junction
    start = junction - window // 2
    if start < 0 or start + window > n:
        raise ParameterError(f"window {window} around frame {junction} leaves the clip")
    out = data.copy()
    idx = np.arange(start, start + window)
    out[idx] = 0.0
    return out, idx


class InpaintNet:
    """Frame encoder -> U-Net over (time, embedding) -> frame decoder."""

    def __init__(self, params, prefix, n_dims, config, rng, use_codec=True):
        self.n_dims, self.config, self.use_codec = n_dims, config, use_codec
        p, c = params, config
        width = c.embed_dim if use_codec else n_dims
        self.width = width
        if use_codec:
            dims = [n_dims] + [c.codec_width] * (c.codec_layers - 1) + [c.embed_dim]
            self.enc = [Dense(p, f"{prefix}.enc{i}", dims[i], dims[i + 1], rng, HE_GAIN if i else 1.0)
                        for i in range(c.codec_layers)]
            dims = [c.embed_dim] + [c.codec_width] * (c.codec_layers - 1) + [n_dims]
            self.dec = [Dense(p, f"{prefix}.dec{i}", dims[i], dims[i + 1], rng, HE_GAIN if i else 1.0)
                        for i in range(c.codec_layers)]
        h = c.hidden
        self.inc = Conv2d(p, f"{prefix}.unet.in", 1, h, 3, rng, 1, 1, HE_GAIN)
        self.down = [Conv2d(p, f"{prefix}.unet.down{i}", h, h, 3, rng, 2, 1, HE_GAIN) for i in range(c.levels)]
        # a stride-1 conv after each halving widens the reach into the gap
        self.mix = [Conv2d(p, f"{prefix}.unet.mix{i}", h, h, 3, rng, 1, 1, HE_GAIN) for i in range(c.levels)]
        self.up = [ConvTranspose2d(p, f"{prefix}.unet.up{i}", h, h, 2, rng, 2, 0, HE_GAIN) for i in range(c.levels)]
        self.merge = [Conv2d(p, f"{prefix}.unet.merge{i}", 2 * h, h, 3, rng, 1, 1, HE_GAIN) for i in range(c.levels)]
        self.outc = Conv2d(p, f"{prefix}.unet.out", h, 1, 1, rng)
        # the network starts as the identity on its skip input
        last = self.dec[-1] if use_codec else self.outc
        last.weight.data[...] = 0.0

    @staticmethod
    def _mlp(layers, x):
        for i, layer in enumerate(layers):
            x = layer(x)
            if i < len(layers) - 1:
                x = relu(x)
        return x

    def unet(self, plane):
        x = relu(self.inc(plane))
        skips = []
        for down, mix in zip(self.down, self.mix):
            skips.append(x)
            x = relu(mix(relu(down(x))))
        for up, merge, skip in zip(self.up, self.merge, reversed(skips)):
            x = relu(up(x))
            x = x[:, :, : skip.shape[2], : skip.shape[3]]
            x = relu(merge(T.concat([x, skip], axis=1)))
        return self.outc(x)

    def __call__(self, x, skip=None):
        """``(B, N, n_dims)`` masked frames -> ``(B, N, n_dims)`` raw predictions.

        The output is ``skip`` (default ``x``) plus the decoded correction.
        """
        x = T.as_tensor(x)
        if x.shape[-1] != self.n_dims:
            raise DimensionError(f"frames have {x.shape[-1]} values, network expects {self.n_dims}", axis=-1)
        z = self._mlp(self.enc, x) if self.use_codec else x
        b, n = z.shape[0], z.shape[1]
        y = self.unet(z.reshape((b, 1, n, self.width))).reshape((b, n, self.width))
        return (x if skip is None else T.as_tensor(skip)) + (self._mlp(self.dec, y) if self.use_codec else y)


def root_to_local(root):
    """Crop-local root parameters plus the ``(dx0, dz0, yaw0)`` needed to undo it."""
    root = np.array(root, dtype=np.float64)
    yaw0 = quat.yaw(quat.normalize(root[..., 0, 3:7]))
    c, s = np.cos(-yaw0)[..., None], np.sin(-yaw0)[..., None]
    dx, dz = root[..., :, 0].copy(), root[..., :, 2].copy()
    keep = np.stack([dx[..., 0], dz[..., 0], yaw0], axis=-1)
    root[..., :, 0] = c * dx + s * dz
    root[..., :, 2] = -s * dx + c * dz
    root[..., 0, 0] = 0.0
    root[..., 0, 2] = 0.0
    root[..., :, 3:7] = quat.mul(quat.yaw_quat(-yaw0)[..., None, :], root[..., :, 3:7])
    return root, keep


def root_from_local(root, keep):
    root = np.array(root, dtype=np.float64)
    yaw0 = keep[..., 2]
    c, s = np.cos(yaw0)[..., None], np.sin(yaw0)[..., None]
    dx, dz = root[..., :, 0].copy(), root[..., :, 2].copy()
    root[..., :, 0] = c * dx + s * dz
    root[..., :, 2] = -s * dx + c * dz
    root[..., 0, 0] = keep[..., 0]
    root[..., 0, 2] = keep[..., 1]
    root[..., :, 3:7] = quat.mul(quat.yaw_quat(yaw0)[..., None, :], root[..., :, 3:7])
    return root


def _renormalize(data):
    """Unit ``w >= 0`` quaternions in every rotation slot of ``(..., P)`` frames."""
    out = np.array(data, dtype=np.float64)
    q = out[..., 3:].reshape(out.shape[:-1] + (-1, 4))
    norm = np.linalg.norm(q, axis=-1, keepdims=True)
    q = np.where(norm > 1e-12, q / np.maximum(norm, 1e-300), np.array([1.0, 0, 0, 0]))
    out[..., 3:] = quat.canonicalize(q).reshape(out.shape[:-1] + (-1,))
    return out


class Inpainter:
    """Joint and root networks (or one merged network) plus the shared config."""

    def __init__(self, config, n_joints, seed=0):
        self.config, self.n_joints = config, n_joints
        self.trained = False
        self.nets, self.params = {}, {}
        p_j = 4 * n_joints
        specs = {"merged": ROOT_DIMS + p_j} if config.variant == "merged" else {"joint": p_j, "root": ROOT_DIMS}
        for k, (name, dims) in enumerate(specs.items()):
            ps = ParamSet()
            rng = np.random.default_rng([seed, k])
            self.nets[name] = InpaintNet(ps, name, dims, config, rng, use_codec=config.variant != "no_encoder")
            self.params[name] = ps

    @property
    def branches(self):
        return tuple(self.nets)

    def _split(self, frames):
        """Network inputs per branch from full ``(B, N, P)`` frames."""
        root, keep = root_to_local(frames[..., :ROOT_DIMS])
        joints = frames[..., ROOT_DIMS:].copy()
        if "merged" in self.nets:
            return {"merged": np.concatenate([root, joints], axis=-1)}, keep
        return {"joint": joints, "root": root}, keep

    def targets(self, frames):
        return self._split(np.asarray(frames, dtype=np.float64))[0]

    def masked_inputs(self, frames):
        inputs, keep = self._split(np.asarray(frames, dtype=np.float64))
        start, stop = self.config.mask_range()
        for x in inputs.values():
            x[:, start:stop] = 0.0
        return inputs, keep

    def skip_inputs(self, inputs):
        """Masked inputs with the gap interpolated from its edge frames, the networks' skip path."""
        start, stop = self.config.mask_range()
        out = {}
        for name, x in inputs.items():
            # pad to full frame layout so one interpolation serves every branch
            b, n = x.shape[:2]
            ident = np.broadcast_to([1.0, 0.0, 0.0, 0.0], (b, n, 4))
            if name == "joint":
                full = np.concatenate([np.zeros((b, n, 3)), ident, x], axis=-1)
            elif name == "root":
                full = np.concatenate([x, ident], axis=-1)
            else:
                full = x
            full = np.stack([interpolate_gap(f, start, stop) for f in full])
            out[name] = full[..., ROOT_DIMS:] if name == "joint" else full[..., : x.shape[-1]]
        return out

    def predict(self, frames):
        """Inpaint ``(B, N, P)`` or ``(N, P)`` frames; returns unit-quaternion frames."""
        frames = np.asarray(frames, dtype=np.float64)
        single = frames.ndim == 2
        if single:
            frames = frames[None]
        if frames.shape[1] != self.config.clip_len:
            raise DimensionError(f"inpainter takes {self.config.clip_len} frames, got {frames.shape[1]}", axis=1)
        if frames.shape[2] != ROOT_DIMS + 4 * self.n_joints:
            raise DimensionError(f"frames have {frames.shape[2]} values, expected "
                                 f"{ROOT_DIMS + 4 * self.n_joints}", axis=2)
        inputs, keep = self.masked_inputs(frames)
        skips = self.skip_inputs(inputs)
        with no_grad():
            outs = {name: self.nets[name](x, skips[name]).data for name, x in inputs.items()}
        if "merged" in outs:
            root, joints = outs["merged"][..., :ROOT_DIMS], outs["merged"][..., ROOT_DIMS:]
        else:
            root, joints = outs["root"], outs["joint"]
        out = _renormalize(np.concatenate([root_from_local(root, keep), joints], axis=-1))
        return out[0] if single else out

    def branch_loss(self, name, frames):
        """Training loss of one network on ground-truth ``(B, N, P)`` frames (a Tensor).

        Joint rotations use the summed geodesic angle, root parameters the
        summed L1 distance; both are averaged over the batch.
        """
        inputs, _ = self.masked_inputs(frames)
        target = self.targets(frames)[name]
        pred = self.nets[name](inputs[name], self.skip_inputs({name: inputs[name]})[name])
        b = pred.shape[0]
        if name == "joint":
            return joint_rotation_loss(pred, target) / b
        if name == "root":
            return root_point_loss(pred, target) / b
        return (joint_rotation_loss(pred[..., ROOT_DIMS:], target[..., ROOT_DIMS:])
                + root_point_loss(pred[..., :ROOT_DIMS], target[..., :ROOT_DIMS])) / b


@dataclass
class TransitionResult:
    context_prev: np.ndarray
    transition: np.ndarray
    context_next: np.ndarray

    def frames(self):
        return np.concatenate([self.context_prev, self.transition, self.context_next], axis=0)


def _fit_context(data, n, side):
    """Last (``side='prev'``) or first ``n`` frames, reflect-padding a short clip's outer end."""
    if len(data) >= n:
        return data[-n:] if side == "prev" else data[:n]
    mode = "reflect" if len(data) > 1 else "edge"
    widths = ((n - len(data), 0), (0, 0)) if side == "prev" else ((0, n - len(data)), (0, 0))
    return np.pad(data, widths, mode=mode)


def inpaint(pair, model):
    """Transition between two root-aligned clips, with regenerated contexts."""
    if not model.trained:
        raise StateError("inpainter checkpoint is untrained")
    prev, nxt = pair
    half = model.config.half
    joined = concatenate([prev, nxt]).data
    j = len(prev)
    a = _fit_context(joined[:j], half, "prev")
    b = _fit_context(joined[j:], half, "next")
    out = model.predict(np.concatenate([a, b], axis=0))
    start, stop = model.config.mask_range()
    return TransitionResult(out[:start], out[start:stop], out[stop:])


def junction_starts(clips, junctions, length):
    """``(clip, first frame)`` of every ``length``-frame window centred on a junction."""
    half = length // 2
    return [(k, j - half) for k, (clip, js) in enumerate(zip(clips, junctions))
            for j in js if j - half >= 0 and j + half <= len(clip)]


def crop_batch(clips, rng, batch, length, starts=None):
    """``batch`` random ``length``-frame crops of ``(N, P)`` arrays.

    With ``starts`` (from :func:`junction_starts`) every crop is one of those
    windows, so the masked centre falls on a junction between two clips.
    """
    if starts:
        picks = rng.integers(len(starts), size=batch)
        return np.stack([clips[starts[i][0]][starts[i][1]: starts[i][1] + length] for i in picks])
    usable = [c for c in clips if len(c) >= length]
    if not usable:
        raise DataError(f"no clip has the {length} frames needed for a training crop")
    weights = np.array([len(c) - length + 1 for c in usable], dtype=np.float64)
    picks = rng.choice(len(usable), size=batch, p=weights / weights.sum())
    out = np.empty((batch, length, usable[0].shape[1]))
    for i, k in enumerate(picks):
        s = int(rng.integers(0, len(usable[k]) - length + 1))
        out[i] = usable[k][s: s + length]
    return out


@dataclass
class BranchState:
    """Optimizer, schedule, epoch log and last parameters of one network's training."""

    optimizer: object
    scheduler: PlateauScheduler
    log: list
    last: dict = field(default_factory=dict, repr=False)


def train_inpainter(clips, config=None, hyper=None, n_joints=None, model=None, callback=None, branches=None,
                    resume=None, junctions=None):
    """Fit each network of an :class:`Inpainter` on crops of ``clips``.

    With ``junctions`` (frame indices per clip) every crop is centred on a
    junction between two source clips; otherwise crops are taken anywhere.
    Networks are trained one after the other with their own Adam state,
    plateau schedule and crop stream. The schedule and the kept best epoch
    follow the loss on a fixed evaluation batch (every junction window, or
    a seeded set of random crops), since the per-epoch training crops
    differ. ``branches`` restricts training to some of the networks.
    ``resume`` maps a branch to a :class:`BranchState` from an earlier run;
    its epoch count continues and, since crops are drawn from a per-epoch
    seed, the result matches an uninterrupted run. ``model.states`` holds
    the final states.
    """
    config = config or (model.config if model else InpainterConfig())
    hyper = hyper or InpainterHyper()
    arrays = [c.data if isinstance(c, MotionClip) else np.asarray(c) for c in clips]
    if not arrays:
        raise DataError("no training clips")
    if n_joints is None:
        n_joints = (arrays[0].shape[1] - ROOT_DIMS) // 4
    model = model or Inpainter(config, n_joints, hyper.seed)
    steps = hyper.steps_per_epoch or max(1, math.ceil(sum(len(a) for a in arrays) / (config.clip_len * hyper.batch)))
    starts = None
    if junctions is not None:
        starts = junction_starts(arrays, junctions, config.clip_len)
        if not starts:
            raise DataError(f"no junction has {config.half} frames of context on both sides")
        eval_frames = np.stack([arrays[k][s: s + config.clip_len] for k, s in starts])
    else:
        eval_frames = crop_batch(arrays, np.random.default_rng([hyper.seed, 999]), 2 * hyper.batch, config.clip_len)
    states = dict(getattr(model, "states", {}))
    for k, name in enumerate(model.branches):
        if branches is not None and name not in branches:
            continue
        params = model.params[name]
        prev = (resume or {}).get(name)
        if prev is None:
            st = BranchState(adam(hyper.lr), PlateauScheduler(hyper.patience, hyper.factor), [], params.state())
            best, best_state = math.inf, params.state()
        else:
            st = prev
            best = min((e["eval"] for e in st.log), default=math.inf)
            best_state = params.state()
            params.load_state(st.last)
        start = len(st.log)
        for epoch in range(start, start + hyper.epochs):
            rng = np.random.default_rng([hyper.seed, 1000 + k, epoch])
            losses = []
            for _ in range(steps):
                frames = crop_batch(arrays, rng, hyper.batch, config.clip_len, starts)
                params.zero_grad()
                loss = model.branch_loss(name, frames)
                loss.backward()
                optimizer_step(st.optimizer, params)
                losses.append(loss.item())
            with no_grad():
                eval_loss = model.branch_loss(name, eval_frames).item()
            if eval_loss < best:
                best, best_state = eval_loss, params.state()
            st.scheduler.step(eval_loss, st.optimizer)
            st.log.append({"branch": name, "epoch": epoch, "loss": float(np.mean(losses)), "eval": eval_loss,
                           "best": best, "lr": st.optimizer.lr})
            if callback:
                callback(st.log[-1])
        st.last = params.state()
        params.load_state(best_state)
        states[name] = st
    model.trained = True
    model.states = states
    return model


def save_inpainter(path, model, meta=None):
    arrays = {}
    for name, ps in model.params.items():
        arrays.update({f"{name}/{k}": v for k, v in ps.state().items()})
    info = {"kind": "inpainter", "config": model.config.to_json(), "n_joints": model.n_joints,
            "trained": model.trained, **(meta or {})}
    save_checkpoint(path, arrays, info)


def load_inpainter(path):
    arrays, _, meta = load_checkpoint(path)
    if meta.get("kind") != "inpainter":
        raise ValidationError(f"{path} is not an inpainter checkpoint")
    model = Inpainter(InpainterConfig.from_json(meta["config"]), meta["n_joints"])
    for name, ps in model.params.items():
        prefix = f"{name}/"
        ps.load_state({k[len(prefix):]: v for k, v in arrays.items() if k.startswith(prefix)})
    model.trained = bool(meta["trained"])
    return model, meta


def save_training_state(path, states):
    """Resume data for :func:`train_inpainter`: per-branch last parameters, Adam slots, schedule, log."""
    arrays, info = {}, {}
    for name, st in sorted(states.items()):
        arrays.update({f"{name}/param/{k}": v for k, v in st.last.items()})
        arrays.update({f"{name}/optim/{k}": v for k, v in st.optimizer.arrays().items()})
        info[name] = {"optimizer": st.optimizer.meta(), "scheduler": st.scheduler.meta(), "log": st.log}
    blobio.write_store(path, "trainstate", arrays, {"kind": "inpainter-train", "branches": info})


def load_training_state(path):
    arrays, meta = blobio.read_store(path, "trainstate")
    states = {}
    for name, info in meta["branches"].items():
        def part(kind):
            prefix = f"{name}/{kind}/"
            return {k[len(prefix):]: v for k, v in arrays.items() if k.startswith(prefix)}
        states[name] = BranchState(OptimizerState.from_meta(info["optimizer"], part("optim")),
                                   PlateauScheduler.from_meta(info["scheduler"]), list(info["log"]),
                                   part("param"))
    return states


# ---------------------------------------------------------------------------
# stitching

def _music_offsets(grid, start_beat, n_beats):
    t0 = grid.beat(start_beat)
    return [grid.beat(start_beat + k) - t0 for k in range(n_beats + 1)]


def prepare_clip(clip, n_beats, grid, start_beat):
    """Warp a unit clip so its beat boundaries land on the song's beats.

    Each detected kinematic beat is paired with the nearest whole beat of the
    clip's nominal tempo, and that with the music beat of the same index
    within the span. The clip end is pinned to the span end so consecutive
    clips tile the song.
    """
    fpb = len(clip) / n_beats
    offsets = _music_offsets(grid, start_beat, n_beats)
    kin_frames, music, last = [], [], 0
    for f in detect_kinematic_beats(clip) if len(clip) >= 3 else []:
        k = int(round(f / fpb))
        if last < k < n_beats:
            kin_frames.append(f)
            music.append(offsets[k])
            last = k
    kin_frames.append(len(clip))
    music.append(offsets[n_beats])
    warped = align_beats(_extend_one(clip), kin_frames, music)
    return warped.with_data(_take(warped.data, int(round(offsets[n_beats] * clip.fps))))


def _extend_one(clip):
    # one extra frame so the clip end (frame N) exists as a warp anchor
    d = np.concatenate([clip.data, clip.data[-1:]], axis=0)
    d[-1, 0] = d[-1, 2] = 0.0
    return clip.with_data(d)


def _take(data, n):
    if len(data) >= n:
        return data[:n]
    pad = np.repeat(data[-1:], n - len(data), axis=0)
    pad[:, 0] = pad[:, 2] = 0.0
    return np.concatenate([data, pad], axis=0)


def stitch(seq, catalog, grid, model, return_junctions=False):
    """Assemble the dance for ``seq``: warp clips onto the beats, then inpaint junctions.

    Wait tokens become held poses (the rest pose at the start). Each
    junction is regenerated in order from a window of the assembled
    timeline, so contexts can reach into neighbouring clips; windows that
    run past either end of the timeline are reflect-padded.
    """
    tokens = [t for t in seq.tokens if t != EOD]
    skeleton, fps = catalog.skeleton, catalog.fps
    if not tokens:
        empty = MotionClip(skeleton, fps, np.zeros((0, ROOT_DIMS + 4 * skeleton.n_joints)))
        return (empty, []) if return_junctions else empty
    if not model.trained:
        raise StateError("inpainter checkpoint is untrained")
    parts = []
    spans = seq.spans[: len(tokens)]
    for tok, (a, b) in zip(tokens, spans):
        n_beats = b - a
        if tok == NIL:
            pose = parts[-1].data[-1] if parts else rest_frame(skeleton)
            offsets = _music_offsets(grid, a, n_beats)
            clip = hold_clip(skeleton, fps, pose, max(1, int(round(offsets[-1] * fps))))
        else:
            clip = prepare_clip(catalog.clip(tok), catalog.beats(tok), grid, a)
        parts.append(align_root_points(parts[-1], clip) if parts else clip)
    timeline = concatenate(parts).data
    junctions = list(np.cumsum([len(p) for p in parts])[:-1])
    half = model.config.half
    for j in junctions:
        lo, hi = j - half, j + half
        pad_lo, pad_hi = max(0, -lo), max(0, hi - len(timeline))
        crop = timeline[max(lo, 0): min(hi, len(timeline))]
        if pad_lo or pad_hi:
            mode = "reflect" if max(pad_lo, pad_hi) < len(crop) else "edge"
            crop = np.pad(crop, ((pad_lo, pad_hi), (0, 0)), mode=mode)
        out = model.predict(crop)
        # keep the crop's own first displacement: it links to the frame before the window
        out[0, 0], out[0, 2] = crop[0, 0], crop[0, 2]
        timeline[max(lo, 0): min(hi, len(timeline))] = out[pad_lo: len(out) - pad_hi]
    result = MotionClip(skeleton, fps, _renormalize(timeline))
    return (result, junctions) if return_junctions else result


__all__ = [
    "BRANCHES", "BranchState", "Inpainter", "InpainterConfig", "InpainterHyper", "InpaintNet", "TransitionResult",
    "crop_batch", "inpaint", "junction_starts", "load_inpainter", "load_training_state", "mask_clip", "prepare_clip",
    "root_from_local", "root_to_local", "save_inpainter", "save_training_state", "stitch", "train_inpainter",
]
