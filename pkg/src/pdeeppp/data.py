"""Dataset ingestion, windowing, splitting, batching, and the embedding file.

Two dataset formats are supported:

* csv with header ``id,sequence,label`` and an optional 0-based ``site``
  column for modification-site tasks;
* fasta with headers ``>id|label`` or ``>id|label|site=N``.

The binary embedding container ("PDPPEMB1") stores one L x 1280 float32
matrix per sequence id, little-endian, with a trailing modulo-2^32 byte
checksum over everything before the checksum field.
"""

import csv
import io
import struct
from dataclasses import dataclass, field

import numpy as np

from .embedding import PAD, tokenize
from .errors import AlignmentError, ContractError, DataError, ParseError

EMB_MAGIC = b"PDPPEMB1"
EMB_VERSION = 1
EMB_DIM = 1280


@dataclass
class SampleRecord:
    id: str
    sequence: str
    label: int
    task_kind: str = "bp"  # "bp" (whole peptide) or "ptm" (windowed site)
    site: int | None = None
    tokens: list = field(default_factory=list)

    def __post_init__(self):
        if not self.tokens:
            self.tokens = tokenize(self.sequence)


@dataclass
class WindowSpec:
    flank: int = 16

    @property
    def window_len(self):
        return 2 * self.flank + 1

    @property
    def center(self):
        return self.flank


@dataclass
class SplitPlan:
    train_frac: float = 0.8
    test_frac: float = 0.2
    val_frac_of_train: float = 0.1
    seed: int = 0


# ---------------------------------------------------------------------------
# parsing


def _parse_label(raw, where):
    if raw not in ("0", "1"):
        raise ParseError(f"{where}: label must be 0 or 1, got {raw!r}")
    return int(raw)


def _check_duplicates(records):
    seen = set()
    for rec in records:
        if rec.id in seen:
            raise DataError(f"duplicate record id {rec.id!r}")
        seen.add(rec.id)


def parse_csv(path):
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:3] != ["id", "sequence", "label"]:
            raise ParseError(f"{path}:1: expected header id,sequence,label[,site]")
        has_site = len(header) > 3 and header[3] == "site"
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 3:
                raise ParseError(f"{path}:{lineno}: expected at least 3 columns")
            site = None
            kind = "bp"
            if has_site and len(row) > 3 and row[3] != "":
                site = int(row[3])
                kind = "ptm"
            records.append(SampleRecord(id=row[0], sequence=row[1],
                                        label=_parse_label(row[2], f"{path}:{lineno}"),
                                        task_kind=kind, site=site))
    _check_duplicates(records)
    return records


def parse_fasta(path):
    records = []
    with open(path, encoding="utf-8") as fh:
        header = None
        header_line = 0
        seq_parts = []

        def flush():
            if header is None:
                return
            fields = header.split("|")
            if len(fields) < 2:
                raise ParseError(f"{path}:{header_line}: expected '>id|label'")
            site = None
            kind = "bp"
            for extra in fields[2:]:
                if extra.startswith("site="):
                    site = int(extra[5:])
                    kind = "ptm"
                else:
                    raise ParseError(f"{path}:{header_line}: unknown field {extra!r}")
            seq = "".join(seq_parts)
            if not seq:
                raise ParseError(f"{path}:{header_line}: record has no sequence")
            records.append(SampleRecord(
                id=fields[0], sequence=seq,
                label=_parse_label(fields[1], f"{path}:{header_line}"),
                task_kind=kind, site=site))

        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith(">"):
                flush()
                header = line[1:]
                header_line = lineno
                seq_parts = []
            elif header is None:
                raise ParseError(f"{path}:{lineno}: sequence before any header")
            else:
                seq_parts.append(line)
        flush()
    _check_duplicates(records)
    return records


def parse_dataset(path, fmt):
    if fmt == "csv":
        return parse_csv(path)
    if fmt == "fasta":
        return parse_fasta(path)
    raise DataError(f"unknown dataset format {fmt!r}")


def write_csv(path, records):
    has_site = any(r.site is not None for r in records)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "sequence", "label"] + (["site"] if has_site else []))
        for r in records:
            row = [r.id, r.sequence, str(r.label)]
            if has_site:
                row.append("" if r.site is None else str(r.site))
            writer.writerow(row)


def write_fasta(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            tag = f">{r.id}|{r.label}"
            if r.site is not None:
                tag += f"|site={r.site}"
            fh.write(f"{tag}\n{r.sequence}\n")


def parse_sequences_csv(path):
    """Lenient reader for prediction inputs: ``id,sequence`` with optional label."""
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ["id", "sequence"]:
            raise ParseError(f"{path}:1: expected header id,sequence[,label]")
        has_label = len(header) > 2 and header[2] == "label"
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            label = _parse_label(row[2], f"{path}:{lineno}") if has_label else 0
            records.append(SampleRecord(id=row[0], sequence=row[1], label=label))
    _check_duplicates(records)
    return records


# ---------------------------------------------------------------------------
# windows and splits


def extract_window(sequence, site_index, spec):
    """Residues ``[site - flank, site + flank]`` with '-' padding past the ends."""
    if not 0 <= site_index < len(sequence):
        raise ContractError(
            f"site {site_index} outside sequence of length {len(sequence)}")
    chars = []
    for pos in range(site_index - spec.flank, site_index + spec.flank + 1):
        chars.append(sequence[pos] if 0 <= pos < len(sequence) else PAD)
    return "".join(chars)


def window_id(protein_id, site):
    return f"{protein_id}@{site}"


def windowize(records, spec):
    """Turn site-annotated records into fixed-width window records.

    Window ids encode the source protein and site ("pid@site") so window
    features can later be sliced out of the full-protein embedding.
    """
    out = []
    for r in records:
        if r.site is None:
            raise DataError(f"record {r.id!r} has no site annotation")
        window = extract_window(r.sequence, r.site, spec)
        out.append(SampleRecord(id=window_id(r.id, r.site), sequence=window,
                                label=r.label, task_kind="ptm", site=r.site))
    return out


def slice_window_embedding(full, site, flank):
    """Window-coordinate slice of a full-protein embedding, zero rows past the ends."""
    out = np.zeros((2 * flank + 1, full.shape[1]), dtype=full.dtype)
    lo = max(0, site - flank)
    hi = min(full.shape[0], site + flank + 1)
    out[lo - (site - flank):hi - (site - flank)] = full[lo:hi]
    return out


def resolve_embeddings(records, embeddings, flank):
    """Map record ids to matrices, slicing "pid@site" windows from full proteins."""
    out = {}
    for r in records:
        if r.id in embeddings:
            out[r.id] = embeddings[r.id]
            continue
        if "@" in r.id:
            pid, _, site_text = r.id.rpartition("@")
            if pid in embeddings and site_text.isdigit():
                out[r.id] = slice_window_embedding(embeddings[pid],
                                                   int(site_text), flank)
                continue
        raise AlignmentError(f"no embedding for id {r.id!r}")
    return out


def split(records, plan):
    """Label-stratified, seeded split into train/val/test."""
    if len(records) < 10:
        raise ContractError(f"need at least 10 records to split, got {len(records)}")
    rng = np.random.default_rng(plan.seed)
    by_label = {}
    for r in records:
        by_label.setdefault(r.label, []).append(r)
    train, val, test = [], [], []
    for label in sorted(by_label):
        group = list(by_label[label])
        order = rng.permutation(len(group))
        group = [group[i] for i in order]
        n_test = round(plan.test_frac * len(group))
        test.extend(group[:n_test])
        remainder = group[n_test:]
        n_val = round(plan.val_frac_of_train * len(remainder))
        val.extend(remainder[:n_val])
        train.extend(remainder[n_val:])
    return {"train": train, "val": val, "test": test}


# ---------------------------------------------------------------------------
# embedding file


def write_embeddings(path, matrices):
    """Write ``{id: (L, 1280) float32 array}`` to a PDPPEMB1 file."""
    buf = io.BytesIO()
    buf.write(EMB_MAGIC)
    buf.write(struct.pack("<H", EMB_VERSION))
    buf.write(struct.pack("<I", len(matrices)))
    for rec_id, mat in matrices.items():
        mat = np.ascontiguousarray(mat, dtype="<f4")
        if mat.ndim != 2 or mat.shape[1] != EMB_DIM:
            raise DataError(
                f"embedding for {rec_id!r} must be (L, {EMB_DIM}), got {mat.shape}")
        id_bytes = rec_id.encode("utf-8")
        buf.write(struct.pack("<H", len(id_bytes)))
        buf.write(id_bytes)
        buf.write(struct.pack("<II", mat.shape[0], EMB_DIM))
        buf.write(mat.tobytes())
    payload = buf.getvalue()
    checksum = int(np.frombuffer(payload, dtype=np.uint8).sum(dtype=np.uint64) % (2 ** 32))
    with open(path, "wb") as fh:
        fh.write(payload)
        fh.write(struct.pack("<I", checksum))


def read_embeddings(path):
    """Read a PDPPEMB1 file back into an ordered ``{id: matrix}`` dict."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(EMB_MAGIC) + 10 or not blob.startswith(EMB_MAGIC):
        raise ParseError(f"{path}: not a PDPPEMB1 file")
    payload, checksum = blob[:-4], struct.unpack("<I", blob[-4:])[0]
    expect = int(np.frombuffer(payload, dtype=np.uint8).sum(dtype=np.uint64) % (2 ** 32))
    if checksum != expect:
        raise DataError(f"{path}: checksum mismatch ({checksum} != {expect})")
    off = len(EMB_MAGIC)
    version, count = struct.unpack_from("<HI", payload, off)
    off += 6
    if version != EMB_VERSION:
        raise DataError(f"{path}: unsupported format version {version}")
    out = {}
    for _ in range(count):
        (id_len,) = struct.unpack_from("<H", payload, off)
        off += 2
        rec_id = payload[off:off + id_len].decode("utf-8")
        off += id_len
        length, dim = struct.unpack_from("<II", payload, off)
        off += 8
        if dim != EMB_DIM:
            raise DataError(f"{path}: record {rec_id!r} has dimension {dim}")
        n = length * dim * 4
        mat = np.frombuffer(payload, dtype="<f4", count=length * dim,
                            offset=off).reshape(length, dim)
        off += n
        if rec_id in out:
            raise DataError(f"{path}: duplicate id {rec_id!r}")
        out[rec_id] = mat.copy()
    return out


# ---------------------------------------------------------------------------
# batching


@dataclass
class Batch:
    """Padded token/feature arrays for one forward pass."""

    tokens: np.ndarray      # (B, L) int64, pad index on padding
    features: np.ndarray    # (B, L, 1280) float32, zero rows on padding
    lengths: np.ndarray     # (B,) int64 valid prefix lengths
    mask: np.ndarray        # (B, L) bool, False on pad positions
    labels: np.ndarray      # (B,) int64
    ids: list


def pad_batch(records, embeddings, pad_index=21):
    """Pad records to a common length and align them with their embeddings."""
    if not records:
        raise ContractError("cannot build an empty batch")
    max_len = max(len(r.tokens) for r in records)
    b = len(records)
    tokens = np.full((b, max_len), pad_index, dtype=np.int64)
    features = np.zeros((b, max_len, EMB_DIM), dtype=np.float32)
    lengths = np.zeros(b, dtype=np.int64)
    mask = np.zeros((b, max_len), dtype=bool)
    labels = np.zeros(b, dtype=np.int64)
    for i, r in enumerate(records):
        if r.id not in embeddings:
            raise AlignmentError(f"no embedding for id {r.id!r}")
        mat = embeddings[r.id]
        if mat.shape[0] != len(r.tokens):
            raise AlignmentError(
                f"embedding length {mat.shape[0]} != sequence length "
                f"{len(r.tokens)} for id {r.id!r}")
        n = len(r.tokens)
        tokens[i, :n] = r.tokens
        features[i, :n] = mat
        lengths[i] = n
        row_mask = np.asarray(r.tokens) != pad_index
        mask[i, :n] = row_mask
        features[i, :n][~row_mask] = 0.0  # window pads carry no signal
        labels[i] = r.label
    return Batch(tokens=tokens, features=features, lengths=lengths,
                 mask=mask, labels=labels, ids=[r.id for r in records])
