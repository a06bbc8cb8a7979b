"""PDPPEMB1 binary writer.

Layout, little-endian: 8-byte magic "PDPPEMB1", format version (u16),
record count (u32); per record: id length (u16), utf-8 id bytes, row
count L (u32), dimension D (u32, always 1280), L*D float32 values;
finally a u32 checksum equal to the sum of every preceding byte
modulo 2**32.
"""

import io
import struct

import numpy as np

MAGIC = b"PDPPEMB1"
VERSION = 1
DIM = 1280


def write_embeddings(path, matrices):
    """Write ``{id: (L, 1280) float32 array}`` preserving insertion order."""
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<H", VERSION))
    buf.write(struct.pack("<I", len(matrices)))
    for rec_id, mat in matrices.items():
        mat = np.ascontiguousarray(mat, dtype="<f4")
        if mat.ndim != 2 or mat.shape[1] != DIM:
            raise ValueError(
                f"embedding for {rec_id!r} must be (L, {DIM}), got {mat.shape}")
        id_bytes = rec_id.encode("utf-8")
        buf.write(struct.pack("<H", len(id_bytes)))
        buf.write(id_bytes)
        buf.write(struct.pack("<II", mat.shape[0], DIM))
        buf.write(mat.tobytes())
    payload = buf.getvalue()
    checksum = int(np.frombuffer(payload, dtype=np.uint8)
                   .sum(dtype=np.uint64) % (2 ** 32))
    with open(path, "wb") as fh:
        fh.write(payload)
        fh.write(struct.pack("<I", checksum))
