"""Central-finite-difference gradient verification.

Checks run in float64 so the difference quotient itself is not the
bottleneck; the analytic path under test is the same code that runs in
float32 during training.
"""

import numpy as np

from .tensor import Tape, Tensor, backward


def numeric_grad(f, params, eps=1e-3):
    """Central differences of scalar ``f()`` w.r.t. each tensor in ``params``."""
    grads = []
    for p in params:
        g = np.zeros_like(p.data)
        flat = p.data.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            hi = float(f().data)
            flat[i] = orig - eps
            lo = float(f().data)
            flat[i] = orig
            gflat[i] = (hi - lo) / (2 * eps)
        grads.append(g)
    return grads


def analytic_grad(f, params):
    for p in params:
        p.zero_grad()
    with Tape() as tape:
        loss = f()
    backward(tape, loss)
    return [np.zeros_like(p.data) if p.grad is None else p.grad.copy()
            for p in params]


def max_relative_error(f, params, eps=1e-3, floor=1e-6):
    """Worst-case relative disagreement between analytic and FD gradients."""
    ana = analytic_grad(f, params)
    num = numeric_grad(f, params, eps=eps)
    worst = 0.0
    for a, n in zip(ana, num):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float((np.abs(a - n) / denom).max()))
    return worst


def sampled_max_relative_error(f, params, per_param=25, eps=1e-3, floor=1e-6,
                               seed=0):
    """Like :func:`max_relative_error` but finite-differences only a random
    subset of entries per parameter tensor, so large models stay tractable."""
    rng = np.random.default_rng(seed)
    ana = analytic_grad(f, params)
    worst = 0.0
    for p, a in zip(params, ana):
        flat = p.data.reshape(-1)
        aflat = a.reshape(-1)
        idx = np.arange(flat.size)
        if flat.size > per_param:
            idx = rng.choice(flat.size, size=per_param, replace=False)
        for i in idx:
            orig = flat[i]
            flat[i] = orig + eps
            hi = float(f().data)
            flat[i] = orig - eps
            lo = float(f().data)
            flat[i] = orig
            n = (hi - lo) / (2 * eps)
            err = abs(aflat[i] - n) / max(abs(aflat[i]), abs(n), floor)
            worst = max(worst, float(err))
    return worst


def as_f64(rng, shape, lo=-2.0, hi=2.0, requires_grad=True):
    return Tensor(rng.uniform(lo, hi, size=shape), requires_grad=requires_grad,
                  dtype=np.float64)
