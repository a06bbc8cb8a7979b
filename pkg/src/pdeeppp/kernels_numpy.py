"""Pure-numpy reference kernels.

These are the fallback implementations for the hot inner loops
(kernel-3 same-padded 1-D convolution and masked adaptive average
pooling).  The compiled extension in ``_ckernels`` mirrors these
signatures exactly; :mod:`pdeeppp.kernels` picks one at import time.

Layouts: activations are ``(B, C, L)``, convolution weights are
``(C_out, C_in, 3)``, pooling masks are ``(B, L)`` uint8.
"""

import numpy as np

KW = 3  # kernel width; same-padding of one position on each side


def conv1d_same(x, w, bias):
    b, c_in, length = x.shape
    c_out = w.shape[0]
    xp = np.zeros((b, c_in, length + 2), dtype=x.dtype)
    xp[:, :, 1:-1] = x
    y = np.broadcast_to(bias[None, :, None], (b, c_out, length)).astype(x.dtype).copy()
    for k in range(KW):
        y += np.einsum("bcl,oc->bol", xp[:, :, k:k + length], w[:, :, k])
    return y


def conv1d_same_backward(g, x, w):
    b, c_in, length = x.shape
    xp = np.zeros((b, c_in, length + 2), dtype=x.dtype)
    xp[:, :, 1:-1] = x
    dxp = np.zeros_like(xp)
    dw = np.zeros_like(w)
    for k in range(KW):
        dxp[:, :, k:k + length] += np.einsum("bol,oc->bcl", g, w[:, :, k])
        dw[:, :, k] = np.einsum("bol,bcl->oc", g, xp[:, :, k:k + length])
    db = g.sum(axis=(0, 2), dtype=np.float64).astype(w.dtype)
    return dxp[:, :, 1:-1], dw, db


def avg_pool_masked(x, lengths, mask, out_len):
    """Adaptive average pooling over the first ``lengths[i]`` positions.

    Bin ``j`` of sample ``i`` covers ``[floor(j*Li/out_len),
    floor((j+1)*Li/out_len))``; only mask-true positions contribute to a
    bin mean, and a bin with no valid position yields zero.
    """
    b, c, _ = x.shape
    y = np.zeros((b, c, out_len), dtype=x.dtype)
    for i in range(b):
        li = int(lengths[i])
        for j in range(out_len):
            lo = (j * li) // out_len
            hi = ((j + 1) * li) // out_len
            m = mask[i, lo:hi].astype(bool)
            n = int(m.sum())
            if n:
                y[i, :, j] = x[i, :, lo:hi][:, m].sum(axis=1, dtype=np.float64) / n
    return y


def avg_pool_masked_backward(g, lengths, mask, length):
    b, c, out_len = g.shape
    dx = np.zeros((b, c, length), dtype=g.dtype)
    for i in range(b):
        li = int(lengths[i])
        for j in range(out_len):
            lo = (j * li) // out_len
            hi = ((j + 1) * li) // out_len
            m = mask[i, lo:hi].astype(bool)
            n = int(m.sum())
            if n:
                dx[i, :, lo:hi][:, m] += g[i, :, j:j + 1] / n
    return dx
