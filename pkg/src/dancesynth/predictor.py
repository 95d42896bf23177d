"""Stage one: predict the next action unit from local music and unit history.

A window of music features around the current time is squeezed by five
strided 1D convolutions and a dense layer into a 64-d music code. The
previous token's embedding and that code are fused by a dense ReLU layer,
fed through a GRU cell whose state persists over the song, and projected to
logits over the vocabulary.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .cau import EOD, NIL, SOD, CauSequence
from .errors import DataError, DimensionError, ParameterError, ValidationError
from .music import FINE_RATE, N_CHANNELS, beat_times, window
from .nncore import (HE_GAIN, Conv1d, Dense, Embedding, GRUCell, ParamSet, PlateauScheduler,
                     conv_output_length, load_checkpoint, no_grad, optimizer_step, relu, rmsprop,
                     save_checkpoint, softmax, softmax_nll)
from .nncore import tensor as T


@dataclass
class PredictorConfig:
    vocab_size: int
    channels: tuple = (N_CHANNELS, 32, 32, 64, 64, 64)
    kernel: int = 5
    stride: int = 2
    music_dim: int = 64
    embed_dim: int = 128
    hidden: int = 64
    window_seconds: float = 10.0

    def __post_init__(self):
        self.channels = tuple(int(c) for c in self.channels)
        if self.vocab_size < 4:
            raise ParameterError(f"vocab_size must be >= 4, got {self.vocab_size}")
        if len(self.channels) != 6 or self.channels[0] != N_CHANNELS:
            raise ParameterError(f"need 5 conv layers starting at {N_CHANNELS} channels, got {self.channels}")
        for name in ("kernel", "stride", "music_dim", "embed_dim", "hidden", "window_seconds"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be positive")

    @property
    def half_window(self):
        return self.window_seconds / 2.0

    @property
    def window_frames(self):
        return int(round(self.window_seconds * FINE_RATE))

    @property
    def pad(self):
        return self.kernel // 2

    def conv_length(self):
        n = self.window_frames
        for _ in range(5):
            n = conv_output_length(n, self.kernel, self.stride, self.pad)
        return n

    def to_json(self):
        d = asdict(self)
        d["channels"] = list(self.channels)
        return d

    @classmethod
    def from_json(cls, data):
        return cls(**data)


@dataclass
class PredictorHyper:
    epochs: int = 1000
    lr: float = 1e-3
    patience: int = 8
    factor: float = 0.9
    seed: int = 0
    target_loss: float | None = None


class CauPredictor:
    def __init__(self, config, seed=0):
        self.config = config
        rng = np.random.default_rng(seed)
        p = self.params = ParamSet()
        ch, c = config.channels, config
        self.convs = [Conv1d(p, f"enc.conv{i}", ch[i], ch[i + 1], c.kernel, rng, c.stride, c.pad, HE_GAIN)
                      for i in range(5)]
        self.flat = ch[-1] * c.conv_length()
        self.music = Dense(p, "enc.mlp", self.flat, c.music_dim, rng, HE_GAIN)
        self.embed = Embedding(p, "dec.embed", c.vocab_size, c.embed_dim, rng)
        self.fuse = Dense(p, "dec.fuse", c.embed_dim + c.music_dim, c.hidden, rng)
        self.gru = GRUCell(p, "dec.gru", c.hidden, c.hidden, rng)
        self.out = Dense(p, "dec.out", c.hidden, c.vocab_size, rng)

    def initial_state(self, batch=None):
        shape = (self.config.hidden,) if batch is None else (batch, self.config.hidden)
        return np.zeros(shape)

    def encode(self, windows):
        """Music code(s) for ``(14, W)`` or ``(B, 14, W)`` windows."""
        x = T.as_tensor(windows)
        if x.shape[-2:] != (N_CHANNELS, self.config.window_frames):
            raise DimensionError(f"window shape {x.shape[-2:]} vs expected "
                                 f"{(N_CHANNELS, self.config.window_frames)}", axis=-1)
        for conv in self.convs:
            x = relu(conv(x))
        x = x.reshape(x.shape[:-2] + (self.flat,))
        return self.music(x)

    def logits(self, y_prev, m, h):
        ids = np.asarray(y_prev)
        if np.any(ids < 0) or np.any(ids >= self.config.vocab_size):
            raise ValidationError(f"token id out of range for vocabulary of {self.config.vocab_size}")
        z = relu(self.fuse(T.concat([self.embed(ids), T.as_tensor(m)], axis=-1)))
        h_new = self.gru(z, h)
        return self.out(h_new), h_new

    def decode_step(self, y_prev, m, h):
        """``(distribution over V, new hidden state)`` as arrays."""
        with no_grad():
            logits, h_new = self.logits(y_prev, m, h)
        return softmax(logits), h_new.data


def save_predictor(path, model, meta=None, optimizer=None, scheduler=None):
    info = {"kind": "predictor", "config": model.config.to_json(), **(meta or {})}
    save_checkpoint(path, model.params, info, optimizer, scheduler)


def load_predictor(path):
    """``(model, meta, optimizer_arrays)`` from a predictor checkpoint."""
    params, optim, meta = load_checkpoint(path)
    if meta.get("kind") != "predictor":
        raise ValidationError(f"{path} is not a predictor checkpoint")
    model = CauPredictor(PredictorConfig.from_json(meta["config"]))
    model.params.load_state(params)
    return model, meta, optim


@dataclass
class TeacherBatch:
    """Precomputed teacher-forcing inputs for one song."""

    windows: np.ndarray   # (steps, 14, W)
    inputs: np.ndarray    # previous tokens, starting with SOD
    targets: np.ndarray   # expert tokens followed by EOD
    times: list = field(default_factory=list)


def teacher_batch(pack, sequence, catalog, config, grid=None):
    grid = grid if grid is not None else beat_times(pack)
    if len(grid) == 0:
        raise DataError("song has no detectable beats")
    tokens = [t for t in sequence.tokens if t != EOD]
    targets = tokens + [EOD]
    inputs = [SOD] + tokens
    times, t = [], 0.0
    for tok in targets:
        times.append(t)
        if tok != EOD:
            t = grid.advance(t, catalog.beats(tok))
    wins = np.stack([window(pack, s, config.half_window) for s in times])
    return TeacherBatch(wins, np.array(inputs), np.array(targets), times)


def sequence_nll(model, batch):
    """Summed negative log-likelihood of the expert tokens (a Tensor)."""
    m = model.encode(batch.windows)
    h = model.initial_state()
    total = None
    for i in range(len(batch.targets)):
        logits, h = model.logits(batch.inputs[i], m[i], h)
        nll = softmax_nll(logits, int(batch.targets[i]))
        total = nll if total is None else total + nll
    return total


def evaluate_nll(model, batches):
    """Mean over songs of the summed teacher-forced NLL."""
    with no_grad():
        return float(np.mean([sequence_nll(model, b).item() for b in batches]))


@dataclass
class TrainResult:
    model: CauPredictor
    log: list
    optimizer: object
    scheduler: PlateauScheduler
    best_loss: float
    epoch: int
    last_state: dict = field(default_factory=dict, repr=False)


def train_predictor(songs, catalog, config=None, hyper=None, model=None, optimizer=None, scheduler=None,
                    start_epoch=0, log=None, callback=None, best_params=None):
    """Teacher-forced NLL training with RMSprop and a plateau schedule.

    ``songs`` is a list of ``(pack, sequence)``. One update per song, songs
    visited in a seeded shuffled order; the epoch loss is the mean of the
    per-song losses. Parameters from the best epoch are returned. Training
    stops early once an epoch loss falls below ``hyper.target_loss``.
    Each epoch's song order depends only on the seed and the epoch number,
    so a run resumed from ``last_state`` repeats an uninterrupted one.
    """
    if not songs:
        raise DataError("empty training corpus")
    hyper = hyper or PredictorHyper()
    config = config or (model.config if model else PredictorConfig(catalog.vocab_size))
    if config.vocab_size != catalog.vocab_size:
        raise ValidationError(f"config vocabulary {config.vocab_size} vs catalog {catalog.vocab_size}")
    model = model or CauPredictor(config, hyper.seed)
    optimizer = optimizer or rmsprop(hyper.lr)
    scheduler = scheduler or PlateauScheduler(hyper.patience, hyper.factor)
    batches = [teacher_batch(pack, seq, catalog, config) for pack, seq in songs]
    log = list(log or [])
    best, best_state = math.inf, model.params.state()
    for entry in log:
        best = min(best, entry["loss"])
    if best_params is not None:
        best_state = best_params
    epoch = start_epoch
    for epoch in range(start_epoch, start_epoch + hyper.epochs):
        losses = []
        for i in np.random.default_rng([hyper.seed, epoch]).permutation(len(batches)):
            model.params.zero_grad()
            loss = sequence_nll(model, batches[i])
            loss.backward()
            optimizer_step(optimizer, model.params)
            losses.append(loss.item())
        epoch_loss = float(np.mean(losses))
        if epoch_loss < best:
            best, best_state = epoch_loss, model.params.state()
        scheduler.step(epoch_loss, optimizer)
        log.append({"epoch": epoch, "loss": epoch_loss, "best": best, "lr": optimizer.lr})
        if callback:
            callback(log[-1])
        if hyper.target_loss is not None and epoch_loss < hyper.target_loss:
            epoch += 1
            break
    else:
        epoch = start_epoch + hyper.epochs
    last = model.params.state()
    model.params.load_state(best_state)
    return TrainResult(model, log, optimizer, scheduler, best, epoch, last)


def generate(pack, model, catalog, grid=None, temperature=None, rng=None, trace=None, max_steps=100000):
    """Unit sequence for a song by stepping through it beat by beat.

    Starting at ``t = 0`` with the start-of-dance token and a zero hidden
    state, each step encodes the music window at ``t``, picks the next token
    (argmax, or sampling at ``temperature``), and moves ``t`` forward by the
    token's beat length on the beat grid. Generation stops on the
    end-of-dance token or when ``t`` reaches the end of the music. The
    start token is never emitted since it would not advance time.
    """
    if getattr(model, "config", None) is not None and model.config.vocab_size != catalog.vocab_size:
        raise ValidationError(f"model vocabulary {model.config.vocab_size} vs catalog {catalog.vocab_size}")
    grid = grid if grid is not None else beat_times(pack)
    if len(grid) == 0:
        raise DataError("song has no detectable beats")
    w = model.config.half_window
    t, beat, y = 0.0, 0, SOD
    h = model.initial_state()
    tokens, spans = [], []
    for _ in range(max_steps):
        if t >= pack.duration - 1e-6:
            break
        m = model.encode(window(pack, t, w))
        dist, h = model.decode_step(y, m, h)
        dist = np.array(dist, dtype=np.float64)
        dist[SOD] = 0.0
        if temperature is None:
            y = int(np.argmax(dist))
        else:
            logp = np.log(np.maximum(dist, 1e-300)) / temperature
            p = np.exp(logp - logp.max())
            y = int((rng or np.random.default_rng(0)).choice(len(p), p=p / p.sum()))
        if trace is not None:
            trace.append(t)
        if y == EOD:
            tokens.append(EOD)
            spans.append((beat, beat))
            break
        n = catalog.beats(y)
        if n < 1:
            raise ValidationError(f"token {y} has no beat length")
        tokens.append(y)
        spans.append((beat, beat + n))
        beat += n
        t_next = grid.advance(t, n)
        if not t_next > t:
            raise ValidationError("beat grid failed to advance time")
        t = t_next
    else:
        raise ValidationError(f"generation exceeded {max_steps} steps")
    return CauSequence(tuple(tokens), tuple(spans))


__all__ = [
    "CauPredictor", "NIL", "PredictorConfig", "PredictorHyper", "TeacherBatch", "TrainResult",
    "evaluate_nll", "generate", "load_predictor", "save_predictor", "sequence_nll", "teacher_batch",
    "train_predictor",
]
