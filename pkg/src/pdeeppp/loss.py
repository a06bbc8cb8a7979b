"""Composite information-maximization training objective.

``loss = lambda * CE - H(marginal) + beta * H(conditional)``

CE is mean cross-entropy against one-hot labels; the marginal term is
the entropy of the batch-average predicted distribution (maximized, so
it enters negated); the conditional term is the mean per-sample
prediction entropy (minimized to sharpen decisions).  Both entropies
are non-negative, and every logarithm clamps its argument at 1e-12.
"""

import numpy as np

from .errors import EmptyInputError
from .tensor import Tensor, log_clamped, mul, mul_const, scale, sub, tmean, tsum


def one_hot(labels, k=2, dtype=np.float32):
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((labels.size, k), dtype=dtype)
    out[np.arange(labels.size), labels] = 1.0
    return out


def _check(probs):
    if probs.shape[0] == 0:
        raise EmptyInputError("loss terms need at least one sample")


def cross_entropy(probs, labels_onehot):
    """Mean negative log-likelihood of the true class."""
    _check(probs)
    n = probs.shape[0]
    picked = mul_const(log_clamped(probs), labels_onehot)
    return scale(tsum(picked), -1.0 / n)


def marginal_entropy(probs):
    """Entropy of the average predicted class distribution."""
    _check(probs)
    n = probs.shape[0]
    avg = scale(tsum(probs, axis=0), 1.0 / n)
    return scale(tsum(mul(avg, log_clamped(avg))), -1.0)


def conditional_entropy(probs):
    """Mean per-sample prediction entropy."""
    _check(probs)
    n = probs.shape[0]
    return scale(tsum(mul(probs, log_clamped(probs))), -1.0 / n)


def tim_loss(probs, labels_onehot, cfg):
    """The composite objective; differentiable through ``probs``."""
    ce = cross_entropy(probs, labels_onehot)
    return sub(scale(ce, cfg.lambda_),
               sub(marginal_entropy(probs),
                   scale(conditional_entropy(probs), cfg.beta)))


def plain_ce_loss(probs, labels_onehot):
    """Ablation objective: standard cross-entropy only (lambda = 1)."""
    return cross_entropy(probs, labels_onehot)
