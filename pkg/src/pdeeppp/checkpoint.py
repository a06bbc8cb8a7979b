"""Binary checkpoint container ("PDPPCKPT").

Layout, all little-endian: magic (8 bytes) - format version (u16) -
config JSON block (u32 length + bytes, sorted keys) - epoch (u32) -
optimizer step (u64) - RNG state JSON block - parameter count (u32) -
per parameter: name (u16 length + utf-8), ndim (u8), dims (u32 each),
float32 value payload, then float32 first- and second-moment payloads
of identical shape.  Save -> load -> save is byte-identical.
"""

import io
import json
import os
import struct
from dataclasses import dataclass

import numpy as np

from .config import config_from_json, config_to_json
from .errors import DataError

CKPT_MAGIC = b"PDPPCKPT"
CKPT_VERSION = 1


@dataclass
class Checkpoint:
    config: object
    params: dict        # name -> float32 ndarray
    adam_m: dict
    adam_v: dict
    step: int
    epoch: int
    rng_state: dict


def _write_block(buf, data):
    buf.write(struct.pack("<I", len(data)))
    buf.write(data)


def _read_block(payload, off):
    (n,) = struct.unpack_from("<I", payload, off)
    off += 4
    return payload[off:off + n], off + n


def _write_array(buf, arr):
    arr = np.ascontiguousarray(arr, dtype="<f4")
    buf.write(struct.pack("<B", arr.ndim))
    for dim in arr.shape:
        buf.write(struct.pack("<I", dim))
    buf.write(arr.tobytes())


def _read_array(payload, off):
    (ndim,) = struct.unpack_from("<B", payload, off)
    off += 1
    shape = struct.unpack_from(f"<{ndim}I", payload, off)
    off += 4 * ndim
    count = int(np.prod(shape)) if ndim else 1
    arr = np.frombuffer(payload, dtype="<f4", count=count, offset=off)
    return arr.reshape(shape).copy(), off + 4 * count


def save_checkpoint(path, ckpt):
    buf = io.BytesIO()
    buf.write(CKPT_MAGIC)
    buf.write(struct.pack("<H", CKPT_VERSION))
    _write_block(buf, config_to_json(ckpt.config).encode("utf-8"))
    buf.write(struct.pack("<I", ckpt.epoch))
    buf.write(struct.pack("<Q", ckpt.step))
    _write_block(buf, json.dumps(ckpt.rng_state, sort_keys=True,
                                 separators=(",", ":")).encode("utf-8"))
    names = sorted(ckpt.params)
    buf.write(struct.pack("<I", len(names)))
    for name in names:
        nb = name.encode("utf-8")
        buf.write(struct.pack("<H", len(nb)))
        buf.write(nb)
        _write_array(buf, ckpt.params[name])
        _write_array(buf, ckpt.adam_m[name])
        _write_array(buf, ckpt.adam_v[name])
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(buf.getvalue())
    os.replace(tmp, path)


def load_checkpoint(path):
    with open(path, "rb") as fh:
        payload = fh.read()
    if not payload.startswith(CKPT_MAGIC):
        raise DataError(f"{path}: not a PDPPCKPT file")
    off = len(CKPT_MAGIC)
    (version,) = struct.unpack_from("<H", payload, off)
    off += 2
    if version != CKPT_VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {version}")
    cfg_json, off = _read_block(payload, off)
    (epoch,) = struct.unpack_from("<I", payload, off)
    off += 4
    (step,) = struct.unpack_from("<Q", payload, off)
    off += 8
    rng_json, off = _read_block(payload, off)
    (count,) = struct.unpack_from("<I", payload, off)
    off += 4
    params, adam_m, adam_v = {}, {}, {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", payload, off)
        off += 2
        name = payload[off:off + name_len].decode("utf-8")
        off += name_len
        params[name], off = _read_array(payload, off)
        adam_m[name], off = _read_array(payload, off)
        adam_v[name], off = _read_array(payload, off)
    return Checkpoint(config=config_from_json(cfg_json.decode("utf-8")),
                      params=params, adam_m=adam_m, adam_v=adam_v,
                      step=step, epoch=epoch,
                      rng_state=json.loads(rng_json.decode("utf-8")))
