"""Embedding export: the pretrained 650M model or a deterministic stand-in."""

import hashlib
import sys
from dataclasses import dataclass

import numpy as np

from .fasta import parse_fasta
from .writer import DIM, write_embeddings

MODEL_ID = "facebook/esm2_t33_650M_UR50D"
MAX_RESIDUES = 1022  # model context of 1024 minus the two boundary tokens


@dataclass
class ExportJob:
    fasta_path: str
    out_path: str
    model_id: str = MODEL_ID
    batch_size: int = 8
    device: str = "cpu"


class ModelUnavailableError(RuntimeError):
    pass


def _warn(message):
    print(f"warning: {message}", file=sys.stderr)


def _stable_seed(rec_id):
    return int.from_bytes(hashlib.sha256(rec_id.encode()).digest()[:4], "little")


def fake_export(fasta_path, out_path, seed=0):
    """Deterministic pseudo-random embeddings keyed by (seed, id); no model.

    Values are uniform in [-1, 1]; the same seed always reproduces the
    same file bytes.
    """
    matrices = {}
    for rec_id, seq in parse_fasta(fasta_path):
        rng = np.random.default_rng([seed, _stable_seed(rec_id)])
        matrices[rec_id] = rng.uniform(-1.0, 1.0,
                                       size=(len(seq), DIM)).astype(np.float32)
    write_embeddings(out_path, matrices)
    return list(matrices)


def _load_model(model_id, device):
    try:
        import torch
        from transformers import AutoModel, AutoTokenizer
    except ImportError as exc:
        raise ModelUnavailableError(
            "torch and transformers are required for real export; install "
            "them with 'pip install torch transformers' or use --fake"
        ) from exc
    try:
        tokenizer = AutoTokenizer.from_pretrained(model_id)
        model = AutoModel.from_pretrained(model_id)
    except Exception as exc:
        raise ModelUnavailableError(
            f"could not obtain model weights for {model_id!r}: {exc}. "
            "Check network access or pre-populate the local model cache; "
            "for development the --fake flag needs no download."
        ) from exc
    model.to(device)
    model.eval()
    return torch, tokenizer, model


def export(job):
    """Final-layer per-residue representations, boundary tokens stripped.

    Sequences longer than the model context are skipped with a warning
    naming the id.  Returns the list of exported ids.
    """
    torch, tokenizer, model = _load_model(job.model_id, job.device)
    records = [(rec_id, seq) for rec_id, seq in parse_fasta(job.fasta_path)]
    kept = []
    for rec_id, seq in records:
        if len(seq) > MAX_RESIDUES:
            _warn(f"skipping {rec_id!r}: {len(seq)} residues exceeds the "
                  f"model maximum of {MAX_RESIDUES}")
            continue
        kept.append((rec_id, seq))
    matrices = {}
    with torch.no_grad():
        for start in range(0, len(kept), job.batch_size):
            chunk = kept[start:start + job.batch_size]
            encoded = tokenizer([seq for _, seq in chunk], return_tensors="pt",
                                padding=True)
            encoded = {k: v.to(job.device) for k, v in encoded.items()}
            hidden = model(**encoded).last_hidden_state
            for row, (rec_id, seq) in enumerate(chunk):
                # row layout is [BOS, residues..., EOS, padding...]
                vecs = hidden[row, 1:1 + len(seq)].cpu().numpy()
                matrices[rec_id] = np.ascontiguousarray(vecs, dtype=np.float32)
    write_embeddings(job.out_path, matrices)
    return list(matrices)
