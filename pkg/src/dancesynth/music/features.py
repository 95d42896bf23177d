"""Feature packs, encoder windows, and beat grids."""

from dataclasses import dataclass

import numpy as np

from .. import blobio
from ..errors import DataError, ParameterError, ValidationError

TAG = "featurepack"
CHROMA_RATE = 10.0
FINE_RATE = 100.0
N_CHANNELS = 14


@dataclass
class MusicFeaturePack:
    """Chroma ``(12, T_c)`` at 10 Hz, beat and onset activations ``(T,)`` at 100 Hz."""

    chroma: np.ndarray
    beat: np.ndarray
    onset: np.ndarray
    duration: float
    chroma_rate: float = CHROMA_RATE
    beat_rate: float = FINE_RATE
    onset_rate: float = FINE_RATE

    def __post_init__(self):
        self.chroma = np.asarray(self.chroma, dtype=np.float64)
        self.beat = np.asarray(self.beat, dtype=np.float64).reshape(-1)
        self.onset = np.asarray(self.onset, dtype=np.float64).reshape(-1)
        self.duration = float(self.duration)
        self.validate()

    def validate(self):
        if self.chroma.ndim != 2 or self.chroma.shape[0] != 12:
            raise ValidationError(f"chroma must be 12 x T, got {self.chroma.shape}")
        coarse = 1.0 / min(self.chroma_rate, self.beat_rate, self.onset_rate)
        for name, arr, rate in (("chroma", self.chroma, self.chroma_rate), ("beat", self.beat, self.beat_rate),
                                ("onset", self.onset, self.onset_rate)):
            if rate <= 0:
                raise ValidationError(f"{name} rate must be positive")
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name} stream has non-finite values")
            span = arr.shape[-1] / rate
            if abs(span - self.duration) > coarse + 1e-9:
                raise ValidationError(f"{name} stream covers {span:.3f}s but duration is {self.duration:.3f}s")
        for name, arr in (("beat", self.beat), ("onset", self.onset)):
            if arr.size and (arr.min() < 0 or arr.max() > 1):
                raise ValidationError(f"{name} activations must lie in [0, 1]")
        return self


def save_feature_pack(path, pack, meta=None):
    info = {"chroma_rate": pack.chroma_rate, "beat_rate": pack.beat_rate, "onset_rate": pack.onset_rate,
            "duration": pack.duration, **(meta or {})}
    blobio.write_store(path, TAG, {"chroma": pack.chroma, "beat": pack.beat, "onset": pack.onset}, info,
                       blobs={"chroma": "chroma.f64", "beat": "beat.f64", "onset": "onset.f64"})


def load_feature_pack(path):
    arrays, meta = blobio.read_store(path, TAG)
    missing = {"chroma", "beat", "onset"} - set(arrays)
    if missing:
        raise ValidationError(f"{path}: missing streams {sorted(missing)}")
    return MusicFeaturePack(arrays["chroma"], arrays["beat"], arrays["onset"], meta["duration"],
                            meta["chroma_rate"], meta["beat_rate"], meta["onset_rate"])


def _sample(stream, rate, times):
    """Sample-and-hold lookup with zeros outside the stream."""
    idx = np.floor(times * rate + 1e-9).astype(int)
    ok = (idx >= 0) & (idx < stream.shape[-1])
    out = np.zeros(stream.shape[:-1] + times.shape)
    out[..., ok] = stream[..., idx[ok]]
    return out


def window(pack, t, w):
    """All streams on a common 100 Hz grid over ``[t - w, t + w)``, ``(14, 2w*100)``."""
    if w <= 0:
        raise ParameterError(f"half-window must be positive, got {w}")
    width = int(round(2 * w * FINE_RATE))
    start = int(round((t - w) * FINE_RATE))
    times = (start + np.arange(width)) / FINE_RATE
    inside = (times >= 0) & (times < pack.duration)
    out = np.concatenate([_sample(pack.chroma, pack.chroma_rate, times),
                          _sample(pack.beat, pack.beat_rate, times)[None],
                          _sample(pack.onset, pack.onset_rate, times)[None]], axis=0)
    out[:, ~inside] = 0.0
    return out


class BeatGrid:
    """Strictly increasing beat times in seconds."""

    def __init__(self, times):
        self.times = np.asarray(times, dtype=np.float64).reshape(-1)
        if np.any(np.diff(self.times) <= 0):
            raise ValidationError("beat times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    @property
    def interval(self):
        """Median inter-beat interval."""
        if len(self.times) < 2:
            raise DataError("need at least two beats to estimate the beat interval")
        return float(np.median(np.diff(self.times)))

    def beat(self, k):
        """Time of beat ``k``, extrapolated past either end with the median interval."""
        n = len(self.times)
        if n == 0:
            raise DataError("empty beat grid")
        if 0 <= k < n:
            return float(self.times[k])
        if k < 0:
            return float(self.times[0] + k * self.interval)
        return float(self.times[-1] + (k - n + 1) * self.interval)

    def advance(self, t, n_beats, tol=1e-9):
        """The ``n_beats``-th beat strictly after ``t`` (``t`` itself when ``n_beats`` is 0)."""
        if n_beats == 0:
            return float(t)
        if len(self.times) == 0:
            raise DataError("empty beat grid")
        k = int(np.searchsorted(self.times, t + tol, side="right"))
        if k >= len(self.times):
            # past the last detected beat: step along the extrapolated grid
            step = self.interval
            last = float(self.times[-1])
            k = len(self.times) - 1 + int(np.floor((t + tol - last) / step)) + 1
        return self.beat(k + n_beats - 1)

    def index_at(self, t, tol=1e-6):
        """Beat index of time ``t``, which must lie on the (extrapolated) grid."""
        k = int(np.searchsorted(self.times, t - tol, side="left"))
        if k < len(self.times) and abs(self.times[k] - t) <= tol:
            return k
        guess = int(round((t - self.times[-1]) / self.interval)) + len(self.times) - 1
        if abs(self.beat(guess) - t) <= tol:
            return guess
        raise ValidationError(f"time {t} is not on the beat grid")


def beat_times(pack, threshold=0.5, min_separation=0.25):
    """Peaks of the beat activation above ``threshold``, at least ``min_separation`` s apart."""
    a = pack.beat
    if a.size == 0:
        return BeatGrid([])
    left = np.concatenate([[-np.inf], a[:-1]])
    right = np.concatenate([a[1:], [-np.inf]])
    cand = np.flatnonzero((a > threshold) & (a > left) & (a >= right))
    gap = min_separation * pack.beat_rate - 1e-9
    picked = []
    for i in sorted(cand, key=lambda i: (-a[i], i)):
        if all(abs(i - p) >= gap for p in picked):
            picked.append(int(i))
    return BeatGrid(np.sort(picked) / pack.beat_rate)
