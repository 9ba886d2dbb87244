"""Modular-arithmetic kernels for the protocol executors.

All kernels operate on int64 arrays with entries in [0, p) and reduce
every product before accumulating, so they are overflow-safe for any
modulus p < 2**31.5 (p**2 must fit in int64). Each kernel has a numba
version and a pure-numpy version with identical semantics; the public
names bind to whichever backend _backend selected.
"""

import numpy as np

from ._backend import JIT_OPTIONS, USE_NUMBA, njit

# ---------------------------------------------------------------- numpy


def conv2d_mod_numpy(x, w, b, stride, pad, p):
    """2D convolution mod p. x: (ci,h,w), w: (co,ci,kh,kw), b: (co,)."""
    ci, h, ww = x.shape
    co, _, kh, kw = w.shape
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (ww + 2 * pad - kw) // stride + 1
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad))) if pad else x
    acc = np.zeros((co, oh, ow), dtype=np.int64)
    for ky in range(kh):
        for kx in range(kw):
            patch = xp[:, ky : ky + oh * stride : stride, kx : kx + ow * stride : stride]
            # products < p**2 fit in int64; reduced before the channel sum
            prod = (w[:, :, ky, kx, None, None] * patch[None, :, :, :]) % p
            acc += prod.sum(axis=1)
    return (acc + b[:, None, None]) % p


def matvec_mod_numpy(w, x, b, p):
    """Matrix-vector product mod p. w: (o,i), x: (i,), b: (o,)."""
    prod = (w * x[None, :]) % p
    return (prod.sum(axis=1) + b) % p


def sumpool_mod_numpy(x, window, stride, p):
    """Window-sum pooling mod p. x: (c,h,w)."""
    c, h, ww = x.shape
    oh = (h - window) // stride + 1
    ow = (ww - window) // stride + 1
    acc = np.zeros((c, oh, ow), dtype=np.int64)
    for ky in range(window):
        for kx in range(window):
            acc += x[:, ky : ky + oh * stride : stride, kx : kx + ow * stride : stride]
    return acc % p


def relu_remask_mod_numpy(a, b, r, p):
    """ReLU gadget on flat share arrays: relu(signed(a+b)) - r, mod p.

    Values above (p-1)//2 decode as negative. Output is the re-masked
    share handed to the next linear layer.
    """
    x = (a + b) % p
    half = (p - 1) // 2
    signed = np.where(x > half, x - p, x)
    y = np.maximum(signed, 0)
    return (y - r) % p


# ---------------------------------------------------------------- numba


@njit(**JIT_OPTIONS)
def conv2d_mod_numba(x, w, b, stride, pad, p):  # pragma: no cover - jitted
    ci, h, ww = x.shape
    co, _, kh, kw = w.shape
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (ww + 2 * pad - kw) // stride + 1
    out = np.empty((co, oh, ow), dtype=np.int64)
    for oc in range(co):
        for oy in range(oh):
            for ox in range(ow):
                acc = b[oc]
                for ic in range(ci):
                    for ky in range(kh):
                        iy = oy * stride - pad + ky
                        if iy < 0 or iy >= h:
                            continue
                        for kx in range(kw):
                            ix = ox * stride - pad + kx
                            if ix < 0 or ix >= ww:
                                continue
                            # acc stays below (ci*kh*kw+1)*p, no overflow
                            acc += (w[oc, ic, ky, kx] * x[ic, iy, ix]) % p
                out[oc, oy, ox] = acc % p
    return out


@njit(**JIT_OPTIONS)
def matvec_mod_numba(w, x, b, p):  # pragma: no cover - jitted
    o, i = w.shape
    out = np.empty(o, dtype=np.int64)
    for row in range(o):
        acc = b[row]
        for col in range(i):
            acc += (w[row, col] * x[col]) % p
        out[row] = acc % p
    return out


@njit(**JIT_OPTIONS)
def sumpool_mod_numba(x, window, stride, p):  # pragma: no cover - jitted
    c, h, ww = x.shape
    oh = (h - window) // stride + 1
    ow = (ww - window) // stride + 1
    out = np.empty((c, oh, ow), dtype=np.int64)
    for ch in range(c):
        for oy in range(oh):
            for ox in range(ow):
                acc = 0
                for ky in range(window):
                    for kx in range(window):
                        acc += x[ch, oy * stride + ky, ox * stride + kx]
                out[ch, oy, ox] = acc % p
    return out


@njit(**JIT_OPTIONS)
def relu_remask_mod_numba(a, b, r, p):  # pragma: no cover - jitted
    n = a.shape[0]
    half = (p - 1) // 2
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        x = (a[i] + b[i]) % p
        if x > half:
            x -= p
        if x < 0:
            x = 0
        out[i] = (x - r[i]) % p
    return out


if USE_NUMBA:
    conv2d_mod = conv2d_mod_numba
    matvec_mod = matvec_mod_numba
    sumpool_mod = sumpool_mod_numba
    relu_remask_mod = relu_remask_mod_numba
else:
    conv2d_mod = conv2d_mod_numpy
    matvec_mod = matvec_mod_numpy
    sumpool_mod = sumpool_mod_numpy
    relu_remask_mod = relu_remask_mod_numpy
