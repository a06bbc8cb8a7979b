import hashlib

import numpy as np
import pytest

from pdeeppp.config import (ClassifierHeadConfig, OptimConfig, PosCNNConfig,
                            RunConfig, TransLinearConfig)
from pdeeppp.data import SampleRecord

AA = "ACDEFGHIKLMNPQRSTVWY"
MOTIF_FLANKS = (-2, -1, 1, 2)


def is_motif_positive(seq, center):
    return seq[center] == "K" and any(seq[center + o] == "L" for o in MOTIF_FLANKS)


def motif_dataset(n, seed, pos_frac=0.5, length=33, prefix="s"):
    """Windows labeled positive iff 'K' at center flanked by 'L' within +/-2."""
    rng = np.random.default_rng(seed)
    center = length // 2
    n_pos = int(round(n * pos_frac))
    records = []
    i = 0
    while len(records) < n:
        want_pos = len(records) < n_pos
        chars = [AA[j] for j in rng.integers(0, 20, size=length)]
        if want_pos:
            chars[center] = "K"
            off = int(rng.choice(MOTIF_FLANKS))
            chars[center + off] = "L"
        elif is_motif_positive(chars, center):
            chars[center] = "A"
        seq = "".join(chars)
        label = int(is_motif_positive(seq, center))
        if want_pos and not label:
            continue
        records.append(SampleRecord(id=f"{prefix}{i}", sequence=seq, label=label))
        i += 1
    return records


def _stable_id_seed(rec_id):
    return int.from_bytes(hashlib.sha256(rec_id.encode()).digest()[:4], "little")


def fake_embeddings(records, seed=0, dim=1280):
    """Deterministic pseudo-random per-residue embeddings keyed by (seed, id)."""
    out = {}
    for r in records:
        rng = np.random.default_rng([seed, _stable_id_seed(r.id)])
        out[r.id] = rng.uniform(-1, 1, size=(len(r.sequence), dim)).astype(np.float32)
    return out


def toy_config(**overrides):
    """Desk-scale model configuration used across training tests."""
    base = dict(
        model=TransLinearConfig(d_model=16, n_heads=2, n_layers=1, d_ff=32),
        poscnn=PosCNNConfig(pool_len=8),
        head=ClassifierHeadConfig(pooled_len=16),
        optim=OptimConfig(lr=2e-3, batch_size=32, epochs=10),
        alpha=0.5,
        seed=7,
    )
    base.update(overrides)
    return RunConfig(**base)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
