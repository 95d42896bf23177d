"""Metrics: masked-region geodesic error, autoencoder FID, and the blending-window sweep."""

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DataError, DimensionError, ParameterError, ValidationError
from .inpainter import root_to_local
from .motion import ROOT_DIMS, MotionClip, geodesic_distance, interpolate_gap, quat
from .nncore import (Conv1d, ParamSet, adam, conv1d_transpose, load_checkpoint, no_grad, optimizer_step,
                     relu, save_checkpoint, uniform_init)
from .nncore import tensor as T


def _frames(x):
    return x.data if isinstance(x, MotionClip) else np.asarray(x, dtype=np.float64)


def geodesic_report(gen, gt, mask=None):
    """Mean joint geodesic angle over the ``mask`` frames (all frames by default)."""
    a, b = _frames(gen), _frames(gt)
    if a.shape != b.shape:
        raise DimensionError(f"generated {a.shape} vs ground truth {b.shape}", axis=-2)
    idx = np.arange(a.shape[-2]) if mask is None else np.asarray(mask)
    if idx.size == 0:
        raise ParameterError("empty mask")
    qa = quat.normalize(a[..., idx, ROOT_DIMS:].reshape(a.shape[:-2] + (idx.size, -1, 4)))
    qb = quat.normalize(b[..., idx, ROOT_DIMS:].reshape(qa.shape))
    return float(np.mean(geodesic_distance(qa, qb)))


# ---------------------------------------------------------------------------
# motion autoencoder

@dataclass
class AutoencoderConfig:
    n_dims: int
    window: int = 32
    stride: int = 16
    hidden: int = 64
    feature_dim: int = 32

    def __post_init__(self):
        if self.window % 8:
            raise ParameterError(f"window must be a multiple of 8, got {self.window}")
        if self.stride < 1 or self.n_dims < 1:
            raise ParameterError("stride and n_dims must be positive")

    def to_json(self):
        return asdict(self)


class ConvTranspose1d:
    def __init__(self, params, name, c_in, c_out, kernel, rng, stride=1, pad=0, gain=1.0):
        self.weight = params.add(f"{name}.weight", uniform_init(rng, (c_in, c_out, kernel), c_in * kernel, gain))
        self.bias = params.add(f"{name}.bias", np.zeros(c_out))
        self.stride, self.pad = stride, pad

    def __call__(self, x):
        return conv1d_transpose(x, self.weight, self.bias, self.stride, self.pad)


class MotionAutoencoder:
    """Three stride-2 1D convs down to ``feature_dim`` channels and a mirrored decoder.

    A window's feature is the encoder output averaged over time.
    """

    def __init__(self, config, seed=0):
        self.config = config
        rng = np.random.default_rng(seed)
        p = self.params = ParamSet()
        c, h = config, config.hidden
        self.enc = [Conv1d(p, "enc0", c.n_dims, h, 4, rng, 2, 1), Conv1d(p, "enc1", h, h, 4, rng, 2, 1),
                    Conv1d(p, "enc2", h, c.feature_dim, 4, rng, 2, 1)]
        self.dec = [ConvTranspose1d(p, "dec0", c.feature_dim, h, 4, rng, 2, 1),
                    ConvTranspose1d(p, "dec1", h, h, 4, rng, 2, 1),
                    ConvTranspose1d(p, "dec2", h, c.n_dims, 4, rng, 2, 1)]

    def _run(self, layers, x):
        for i, layer in enumerate(layers):
            x = layer(x)
            if i < len(layers) - 1:
                x = relu(x)
        return x

    def encode(self, windows):
        """``(B, window, n_dims)`` frames -> ``(B, feature_dim, window / 8)`` code."""
        x = T.as_tensor(windows)
        if x.shape[1:] != (self.config.window, self.config.n_dims):
            raise DimensionError(f"windows {x.shape[1:]} vs expected {(self.config.window, self.config.n_dims)}")
        return self._run(self.enc, x.transpose((0, 2, 1)))

    def reconstruct(self, windows):
        return self._run(self.dec, self.encode(windows)).transpose((0, 2, 1))

    def loss(self, windows):
        diff = self.reconstruct(windows) - T.as_tensor(windows)
        return (diff * diff).sum() / float(diff.data.size)

    def features(self, windows):
        with no_grad():
            return self.encode(windows).data.mean(axis=-1)


def motion_windows(clips, window=32, stride=16):
    """Stack of ``window``-frame slices (every ``stride`` frames) in crop-local root form."""
    out = []
    for clip in clips:
        data = _frames(clip)
        for s in range(0, len(data) - window + 1, stride):
            w = data[s: s + window].copy()
            w[:, :ROOT_DIMS] = root_to_local(w[:, :ROOT_DIMS])[0]
            out.append(w)
    if not out:
        return np.zeros((0, window, 0))
    return np.stack(out)


@dataclass
class AutoencoderResult:
    model: MotionAutoencoder
    log: list
    optimizer: object
    last_state: dict


def train_autoencoder(clips, config=None, epochs=200, batch=32, lr=1e-3, seed=0, callback=None,
                      model=None, optimizer=None, log=None, last_state=None):
    """Reconstruction training on windows of real clips, keeping the best epoch.

    Window order is drawn from a per-epoch seed; pass the previous
    ``optimizer``, ``log`` and ``last_state`` to continue a run exactly.
    """
    data = [_frames(c) for c in clips]
    if not data:
        raise DataError("no clips to train the autoencoder on")
    config = config or (model.config if model else AutoencoderConfig(data[0].shape[1]))
    wins = motion_windows(data, config.window, config.stride)
    if len(wins) == 0:
        raise DataError(f"no clip has the {config.window} frames needed for one window")
    model = model or MotionAutoencoder(config, seed)
    opt = optimizer or adam(lr)
    log = list(log or [])
    best = min((e["loss"] for e in log), default=math.inf)
    best_state = model.params.state()
    if last_state:
        model.params.load_state(last_state)
    for epoch in range(len(log), len(log) + epochs):
        order = np.random.default_rng([seed, epoch]).permutation(len(wins))
        losses = []
        for s in range(0, len(order), batch):
            model.params.zero_grad()
            loss = model.loss(wins[order[s: s + batch]])
            loss.backward()
            optimizer_step(opt, model.params)
            losses.append(loss.item())
        epoch_loss = float(np.mean(losses))
        if epoch_loss < best:
            best, best_state = epoch_loss, model.params.state()
        log.append({"epoch": epoch, "loss": epoch_loss, "best": best})
        if callback:
            callback(log[-1])
    last = model.params.state()
    model.params.load_state(best_state)
    return AutoencoderResult(model, log, opt, last)


def save_autoencoder(path, model, meta=None):
    save_checkpoint(path, model.params, {"kind": "autoencoder", "config": model.config.to_json(), **(meta or {})})


def load_autoencoder(path):
    params, _, meta = load_checkpoint(path)
    if meta.get("kind") != "autoencoder":
        raise ValidationError(f"{path} is not an autoencoder checkpoint")
    model = MotionAutoencoder(AutoencoderConfig(**meta["config"]))
    model.params.load_state(params)
    return model, meta


def extract_features(clips, model):
    """One feature vector per 32-frame window of every clip, ``(n, feature_dim)``."""
    c = model.config
    wins = motion_windows(clips, c.window, c.stride)
    if len(wins) == 0:
        return np.zeros((0, c.feature_dim))
    return model.features(wins)


# ---------------------------------------------------------------------------
# Frechet distance

@dataclass
class GaussianStats:
    mean: np.ndarray
    cov: np.ndarray


def fit_gaussian(features):
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DataError(f"need at least two feature vectors, got shape {x.shape}")
    return GaussianStats(x.mean(axis=0), np.cov(x, rowvar=False, ddof=1).reshape(x.shape[1], x.shape[1]))


def _psd_sqrt(a):
    w, v = np.linalg.eigh((a + a.T) / 2.0)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def fid(a, b):
    """``|mu_a - mu_b|^2 + tr(S_a + S_b - 2 (S_a S_b)^(1/2))``.

    The trace of the product's square root is taken from the eigenvalues of
    the symmetric ``S_a^(1/2) S_b S_a^(1/2)``, which has the same spectrum;
    negative eigenvalues from round-off are clamped to zero.
    """
    if a.mean.shape != b.mean.shape:
        raise DimensionError(f"feature dims differ: {a.mean.shape} vs {b.mean.shape}")
    ra = _psd_sqrt(a.cov)
    m = ra @ b.cov @ ra
    eig = np.clip(np.linalg.eigvalsh((m + m.T) / 2.0), 0.0, None)
    d = a.mean - b.mean
    value = float(d @ d + np.trace(a.cov) + np.trace(b.cov) - 2.0 * np.sqrt(eig).sum())
    return max(value, 0.0)


def clip_fid(gen, real, model):
    return fid(fit_gaussian(extract_features(gen, model)), fit_gaussian(extract_features(real, model)))


# ---------------------------------------------------------------------------
# junction protocol and window sweep

def junction_crops(motion_set, clip_len=192):
    """``clip_len``-frame windows centred on every junction with full context."""
    half = clip_len // 2
    crops = [clip.data[j - half: j + half] for clip, js in zip(motion_set.clips, motion_set.junctions)
             for j in js if j - half >= 0 and j + half <= len(clip)]
    if not crops:
        raise DataError(f"no junction has {half} frames of context on both sides")
    return np.stack(crops)


def blend_crops(crops, window):
    n = crops.shape[1]
    start = n // 2 - window // 2
    return np.stack([interpolate_gap(c, start, start + window) for c in crops])


def compare_on_crops(crops, model, ae=None):
    """Masked-region geodesic (and FID when ``ae`` is given) for the inpainter and blending."""
    window = model.config.window
    start, stop = model.config.mask_range()
    idx = np.arange(start, stop)
    rows = []
    for method, pred in (("blend", blend_crops(crops, window)), ("inpainter", model.predict(crops))):
        row = {"method": method, "window": window, "geodesic": geodesic_report(pred, crops, idx)}
        row["fid"] = clip_fid(list(pred), list(crops), ae) if ae is not None else math.nan
        rows.append(row)
    return rows


def window_sweep(crops, train, windows=(16, 32, 64, 128), ae=None):
    """Blend vs inpainter at each mask window.

    ``train(window)`` returns a trained inpainter for that window;
    ``crops`` are ground-truth junction windows of the model's clip length.
    Rows are ordered by window, blending first.
    """
    rows = []
    for w in windows:
        model = train(w)
        if model.config.window != w:
            raise ValidationError(f"trainer returned a window-{model.config.window} model for window {w}")
        rows.extend(compare_on_crops(crops, model, ae))
    return rows


def format_table(rows):
    """Tab-separated ``method window geodesic fid`` rows with a header."""
    lines = ["method\twindow\tgeodesic\tfid"]
    for r in rows:
        lines.append(f"{r['method']}\t{r['window']}\t{r['geodesic']:.6g}\t{r['fid']:.6g}")
    return "\n".join(lines) + "\n"


def parse_table(text):
    lines = [ln.split("\t") for ln in text.strip().splitlines()]
    if not lines or lines[0] != ["method", "window", "geodesic", "fid"]:
        raise ValidationError("not a sweep table")
    return [{"method": m, "window": int(w), "geodesic": float(g), "fid": float(f)} for m, w, g, f in lines[1:]]


__all__ = [
    "AutoencoderConfig", "AutoencoderResult", "GaussianStats", "MotionAutoencoder", "blend_crops", "clip_fid",
    "compare_on_crops",
    "extract_features", "fid", "fit_gaussian", "format_table", "geodesic_report", "junction_crops",
    "load_autoencoder", "motion_windows", "parse_table", "save_autoencoder", "train_autoencoder",
    "window_sweep",
]
