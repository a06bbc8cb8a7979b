"""Amino-acid tokenization, the learned base embedding, and hybrid fusion.

The fused representation is the weighted sum
``alpha * pretrained + (1 - alpha) * base`` where ``pretrained`` comes
from an embedding file and ``base`` is a learned 22x128 table projected
to the pretrained width (1280).
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractError, EmptyInputError, ShapeError
from .tensor import Tensor, add, gather_rows, matmul, mul_const

CANONICAL = "ACDEFGHIKLMNPQRSTVWY"
UNKNOWN = "X"
PAD = "-"
ALPHABET = CANONICAL + UNKNOWN + PAD

UNKNOWN_INDEX = 20
PAD_INDEX = 21
VOCAB_SIZE = 22

BASE_DIM = 128
EMBED_DIM = 1280

_INDEX = {ch: i for i, ch in enumerate(ALPHABET)}


def tokenize(sequence):
    """Map a sequence to token indices; non-canonical residues become 'X'."""
    if not sequence:
        raise EmptyInputError("cannot tokenize an empty sequence")
    return [_INDEX[c] if c in _INDEX else UNKNOWN_INDEX for c in sequence.upper()]


def detokenize(tokens):
    return "".join(ALPHABET[t] for t in tokens)


@dataclass
class FusionConfig:
    """Weight of the pretrained branch in the hybrid embedding."""

    alpha: float = 0.9

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")


class BaseEmbeddingParams:
    """Learned token table plus projection to the pretrained width.

    The pad row of the table is initialized to zero and receives no
    gradient because pad positions are masked out of every output.
    """

    def __init__(self, rng, base_dim=BASE_DIM, out_dim=EMBED_DIM, dtype=np.float32):
        bound = 1.0 / np.sqrt(base_dim)
        table = rng.uniform(-bound, bound, size=(VOCAB_SIZE, base_dim))
        table[PAD_INDEX] = 0.0
        self.table = Tensor(table, requires_grad=True, dtype=dtype)
        self.projection = Tensor(
            rng.uniform(-bound, bound, size=(base_dim, out_dim)),
            requires_grad=True, dtype=dtype)
        self.projection_bias = Tensor(np.zeros(out_dim), requires_grad=True,
                                      dtype=dtype)

    def named(self, prefix="base_embed"):
        return {
            f"{prefix}.table": self.table,
            f"{prefix}.projection": self.projection,
            f"{prefix}.bias": self.projection_bias,
        }


def base_embed(tokens, params):
    """Per-token learned embedding; pad positions come out as zero rows."""
    tokens = np.asarray(tokens)
    if tokens.ndim == 0 or (tokens.size and tokens.max() >= VOCAB_SIZE):
        raise ContractError("token index out of vocabulary range")
    rows = gather_rows(params.table, tokens)
    out = add(matmul(rows, params.projection), params.projection_bias)
    valid = (tokens != PAD_INDEX).astype(out.dtype)
    return mul_const(out, valid[..., None])


def fuse(pretrained, base, cfg):
    """Weighted sum of the pretrained and learned embeddings."""
    if pretrained.shape != base.shape:
        raise ShapeError(
            f"fusion shapes disagree: pretrained {pretrained.shape} vs base {base.shape}")
    if cfg.alpha == 1.0:
        return mul_const(pretrained, np.ones((), dtype=pretrained.dtype))
    return add(mul_const(pretrained, np.asarray(cfg.alpha, dtype=pretrained.dtype)),
               base * (1.0 - cfg.alpha))
