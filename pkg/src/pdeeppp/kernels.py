"""Kernel backend selection.

The compiled extension is used for contiguous float32 inputs when it
built successfully; everything else (and ``PDEEPPP_KERNELS=numpy``)
goes through the pure-numpy fallback.  Both backends implement the same
arithmetic, so results agree to float rounding.
"""

import os

import numpy as np

from . import kernels_numpy as _np_impl

try:
    from . import _ckernels as _c_impl
except ImportError:  # extension not built on this platform
    _c_impl = None

if os.environ.get("PDEEPPP_KERNELS", "").lower() == "numpy":
    _c_impl = None

BACKEND = "cython" if _c_impl is not None else "numpy"


def _use_compiled(*arrays):
    if _c_impl is None:
        return False
    return all(a.dtype == np.float32 and a.flags["C_CONTIGUOUS"] for a in arrays)


def conv1d_same(x, w, bias):
    if _use_compiled(x, w, bias):
        return _c_impl.conv1d_same(x, w, bias)
    return _np_impl.conv1d_same(x, w, bias)


def conv1d_same_backward(g, x, w):
    if _use_compiled(g, x, w):
        return _c_impl.conv1d_same_backward(g, x, w)
    return _np_impl.conv1d_same_backward(g, x, w)


def avg_pool_masked(x, lengths, mask, out_len):
    if _use_compiled(x):
        return _c_impl.avg_pool_masked(
            x, np.ascontiguousarray(lengths, dtype=np.int64),
            np.ascontiguousarray(mask, dtype=np.uint8), out_len)
    return _np_impl.avg_pool_masked(x, lengths, mask, out_len)


def avg_pool_masked_backward(g, lengths, mask, length):
    if _use_compiled(g):
        return _c_impl.avg_pool_masked_backward(
            g, np.ascontiguousarray(lengths, dtype=np.int64),
            np.ascontiguousarray(mask, dtype=np.uint8), length)
    return _np_impl.avg_pool_masked_backward(g, lengths, mask, length)
