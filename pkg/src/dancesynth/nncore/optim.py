"""RMSprop / Adam updates and a reduce-on-plateau learning-rate schedule."""

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ParameterError, StateError

_DEFAULTS = {
    "rmsprop": {"alpha": 0.99, "eps": 1e-8},
    "adam": {"beta1": 0.9, "beta2": 0.999, "eps": 1e-8},
}


@dataclass
class OptimizerState:
    kind: str
    lr: float
    hyper: dict = field(default_factory=dict)
    step: int = 0
    slots: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _DEFAULTS:
            raise ParameterError(f"unknown optimizer kind {self.kind!r}")
        self.hyper = {**_DEFAULTS[self.kind], **self.hyper}

    def arrays(self):
        """Accumulators flattened to ``slot/param`` keys for checkpointing."""
        return {f"{slot}/{name}": arr
                for slot in sorted(self.slots)
                for name, arr in sorted(self.slots[slot].items())}

    def load_arrays(self, arrays):
        self.slots = {}
        for key, arr in arrays.items():
            slot, name = key.split("/", 1)
            self.slots.setdefault(slot, {})[name] = np.array(arr, dtype=np.float64)

    def meta(self):
        return {"kind": self.kind, "lr": self.lr, "hyper": self.hyper, "step": self.step}

    @classmethod
    def from_meta(cls, meta, arrays=None):
        state = cls(meta["kind"], meta["lr"], dict(meta["hyper"]), meta["step"])
        if arrays:
            state.load_arrays(arrays)
        return state


def rmsprop(lr=1e-3, **hyper):
    return OptimizerState("rmsprop", lr, hyper)


def adam(lr=1e-3, **hyper):
    return OptimizerState("adam", lr, hyper)


def optimizer_step(state, params):
    """Update every tensor in ``params`` in place from its ``.grad``.

    Gradients are left untouched; the caller zeroes them.
    """
    items = params.items()
    for name, p in items:
        if p.grad is None:
            raise StateError(f"parameter {name!r} has no gradient")
    state.step += 1
    h = state.hyper
    if state.kind == "rmsprop":
        sq = state.slots.setdefault("square_avg", {})
        for name, p in items:
            v = sq.get(name)
            if v is None:
                v = np.zeros_like(p.data)
            v = h["alpha"] * v + (1.0 - h["alpha"]) * p.grad * p.grad
            sq[name] = v
            p.data = p.data - state.lr * p.grad / (np.sqrt(v) + h["eps"])
    else:
        m_slot = state.slots.setdefault("exp_avg", {})
        v_slot = state.slots.setdefault("exp_avg_sq", {})
        b1, b2 = h["beta1"], h["beta2"]
        c1 = 1.0 - b1 ** state.step
        c2 = 1.0 - b2 ** state.step
        for name, p in items:
            m = m_slot.get(name, np.zeros_like(p.data))
            v = v_slot.get(name, np.zeros_like(p.data))
            m = b1 * m + (1.0 - b1) * p.grad
            v = b2 * v + (1.0 - b2) * p.grad * p.grad
            m_slot[name], v_slot[name] = m, v
            denom = np.sqrt(v) / math.sqrt(c2) + h["eps"]
            p.data = p.data - (state.lr / c1) * m / denom
    return state


@dataclass
class PlateauScheduler:
    """Multiply the learning rate by ``factor`` after ``patience`` stagnant epochs.

    An epoch improves only when its loss is strictly below the best so far.
    """

    patience: int
    factor: float
    best: float = math.inf
    num_bad: int = 0

    def __post_init__(self):
        if not 0.0 < self.factor < 1.0:
            raise ParameterError(f"factor must lie in (0, 1), got {self.factor}")
        if self.patience < 0:
            raise ParameterError(f"patience must be >= 0, got {self.patience}")

    def step(self, epoch_loss, optimizer):
        if not math.isfinite(epoch_loss):
            raise ParameterError(f"non-finite epoch loss {epoch_loss}")
        if epoch_loss < self.best:
            self.best = epoch_loss
            self.num_bad = 0
        else:
            self.num_bad += 1
        if self.num_bad > self.patience:
            optimizer.lr *= self.factor
            self.num_bad = 0
        return optimizer.lr

    def meta(self):
        best = None if math.isinf(self.best) else self.best
        return {"patience": self.patience, "factor": self.factor, "best": best, "num_bad": self.num_bad}

    @classmethod
    def from_meta(cls, meta):
        best = math.inf if meta["best"] is None else meta["best"]
        return cls(meta["patience"], meta["factor"], best, meta["num_bad"])


def plateau_step(sched, epoch_loss, optimizer):
    return sched.step(epoch_loss, optimizer)
