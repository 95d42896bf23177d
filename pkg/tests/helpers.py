"""Independent oracles shared by the test modules."""

import numpy as np

from dancesynth.nncore import Tensor


def numeric_grad(f, arrays, index, h=1e-5):
    """Central differences of scalar ``f(*arrays)`` w.r.t. ``arrays[index]``."""
    base = [np.array(a, dtype=np.float64) for a in arrays]
    x = base[index]
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = x[i]
        x[i] = old + h
        fp = f(*base)
        x[i] = old - h
        fm = f(*base)
        x[i] = old
        grad[i] = (fp - fm) / (2 * h)
    return grad


def rel_err(a, b):
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return float(np.linalg.norm(a - b) / scale)


def gradcheck(build, arrays, h=1e-5):
    """Worst relative error between autodiff and central differences.

    ``build`` maps Tensors to a Tensor; the check contracts the output with a
    fixed random projection so non-scalar outputs are covered too.
    """
    probe = None

    def scalar(*arrs):
        nonlocal probe
        out = build(*[Tensor(a) for a in arrs]).data
        if probe is None:
            probe = np.random.default_rng(99).normal(size=out.shape)
        return float(np.sum(out * probe))

    scalar(*arrays)
    tensors = [Tensor(a, requires_grad=True) for a in arrays]
    out = build(*tensors)
    (out * Tensor(probe)).sum().backward()
    worst = 0.0
    for i, t in enumerate(tensors):
        num = numeric_grad(scalar, arrays, i, h)
        ana = t.grad if t.grad is not None else np.zeros_like(num)
        worst = max(worst, rel_err(ana, num))
    return worst


def conv2d_direct(x, w, b, stride, pad):
    """Brute-force cross-correlation, one output element at a time."""
    C, H, W = x.shape
    O, _, kh, kw = w.shape
    xp = np.zeros((C, H + 2 * pad, W + 2 * pad))
    xp[:, pad:pad + H, pad:pad + W] = x
    ho = (H + 2 * pad - kh) // stride + 1
    wo = (W + 2 * pad - kw) // stride + 1
    out = np.zeros((O, ho, wo))
    for o in range(O):
        for i in range(ho):
            for j in range(wo):
                acc = b[o]
                for c in range(C):
                    for u in range(kh):
                        for v in range(kw):
                            acc += xp[c, i * stride + u, j * stride + v] * w[o, c, u, v]
                out[o, i, j] = acc
    return out


def conv1d_direct(x, w, b, stride, pad):
    C, T = x.shape
    O, _, K = w.shape
    xp = np.zeros((C, T + 2 * pad))
    xp[:, pad:pad + T] = x
    to = (T + 2 * pad - K) // stride + 1
    out = np.zeros((O, to))
    for o in range(O):
        for t in range(to):
            out[o, t] = b[o] + sum(xp[c, t * stride + k] * w[o, c, k] for c in range(C) for k in range(K))
    return out


def conv2d_transpose_direct(x, w, b, stride, pad):
    """Scatter form: every input element stamps its kernel into the output."""
    C, H, W = x.shape
    _, O, kh, kw = w.shape
    full = np.zeros((O, (H - 1) * stride + kh, (W - 1) * stride + kw))
    for c in range(C):
        for i in range(H):
            for j in range(W):
                full[:, i * stride:i * stride + kh, j * stride:j * stride + kw] += x[c, i, j] * w[c]
    out = full[:, pad:full.shape[1] - pad, pad:full.shape[2] - pad]
    return out + b[:, None, None]


def gru_scalar(x, h, w_ih, w_hh, b_ih, b_hh):
    """GRU step written element by element with math-module scalars."""
    import math
    H = len(h)
    D = len(x)

    def sig(v):
        return 1.0 / (1.0 + math.exp(-v))

    out = []
    for k in range(H):
        def gate(g):
            col = g * H + k
            return (sum(x[d] * w_ih[d, col] for d in range(D)) + b_ih[col],
                    sum(h[d] * w_hh[d, col] for d in range(H)) + b_hh[col])
        ir, hr = gate(0)
        iz, hz = gate(1)
        inn, hn = gate(2)
        r = sig(ir + hr)
        z = sig(iz + hz)
        n = math.tanh(inn + r * hn)
        out.append((1 - z) * n + z * h[k])
    return np.array(out)


def bleu_oracle(candidate, reference, eps=1e-9):
    """Sentence BLEU-4 by explicit n-gram enumeration and list counting."""
    cand = [int(t) for t in candidate if t not in (0, 1)]
    ref = [int(t) for t in reference if t not in (0, 1)]
    if not cand:
        return 0.0
    precisions = []
    for n in range(1, 5):
        if n > len(cand):
            break
        c_grams = [cand[i:i + n] for i in range(len(cand) - n + 1)]
        r_grams = [ref[i:i + n] for i in range(len(ref) - n + 1)]
        seen, matched = [], 0
        for g in c_grams:
            if g in seen:
                continue
            seen.append(g)
            matched += min(c_grams.count(g), r_grams.count(g))
        precisions.append((matched if matched else eps) / len(c_grams))
    geo = 1.0
    for p in precisions:
        geo *= p ** (1.0 / len(precisions))
    bp = 1.0 if len(cand) >= len(ref) else np.exp(1.0 - len(ref) / len(cand))
    return float(bp * geo)


def fid_oracle(mu_a, cov_a, mu_b, cov_b):
    """Frechet distance with scipy's general matrix square root."""
    from scipy import linalg
    root = linalg.sqrtm(cov_a @ cov_b)
    return float(np.sum((mu_a - mu_b) ** 2) + np.trace(cov_a) + np.trace(cov_b) - 2.0 * np.trace(root).real)


def gaussian_oracle(x):
    """Mean and unbiased covariance by explicit sums."""
    x = np.asarray(x, dtype=np.float64)
    n, d = x.shape
    mu = [sum(x[i, j] for i in range(n)) / n for j in range(d)]
    cov = np.zeros((d, d))
    for a in range(d):
        for b in range(d):
            cov[a, b] = sum((x[i, a] - mu[a]) * (x[i, b] - mu[b]) for i in range(n)) / (n - 1)
    return np.array(mu), cov
