"""Hot loops with a numba implementation and a pure-numpy fallback.

Set ``QG_NUMBA=0`` in the environment before import to force the numpy path.
Both paths are kept bit-compatible up to floating point summation order.
"""
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and os.environ.get("QG_NUMBA", "1") != "0"


# ---------------------------------------------------------------------------
# shell maxima: out[m] = max |c| over modes with shell index m


def _shell_max_numpy(absc, shell, nshell):
    out = np.zeros(nshell)
    np.maximum.at(out, shell.ravel(), absc.ravel())
    return out


def _shell_max_loop(absc, shell, nshell):
    out = np.zeros(nshell)
    a = absc.ravel()
    s = shell.ravel()
    for i in range(a.size):
        m = s[i]
        if a[i] > out[m]:
            out[m] = a[i]
    return out


# ---------------------------------------------------------------------------
# exact weighted convolution on the retained band
#
# out[k] = sum_{p+q=k} f[p] g[q] exp(a (|k|_1 - |p|_1 - |q|_1))
# with |k_i| <= kmax on every axis; inputs are lists of nonzero modes.


def _wconv_loop(p1, p2, fv, q1, q2, gv, n, kmax, a):
    out = np.zeros((n, n), dtype=np.complex128)
    for i in range(p1.size):
        a1 = p1[i]
        a2 = p2[i]
        fa = fv[i]
        la = abs(a1) + abs(a2)
        for j in range(q1.size):
            k1 = a1 + q1[j]
            k2 = a2 + q2[j]
            if k1 > kmax or k1 < -kmax or k2 > kmax or k2 < -kmax:
                continue
            w = a * (abs(k1) + abs(k2) - la - abs(q1[j]) - abs(q2[j]))
            out[k1 % n, k2 % n] += fa * gv[j] * np.exp(w)
    return out


def _wconv_numpy(p1, p2, fv, q1, q2, gv, n, kmax, a, chunk=256):
    out = np.zeros((n, n), dtype=np.complex128)
    l1q = np.abs(q1) + np.abs(q2)
    for s in range(0, p1.size, chunk):
        a1 = p1[s:s + chunk, None]
        a2 = p2[s:s + chunk, None]
        k1 = a1 + q1[None, :]
        k2 = a2 + q2[None, :]
        keep = (np.abs(k1) <= kmax) & (np.abs(k2) <= kmax)
        w = a * (np.abs(k1) + np.abs(k2) - (np.abs(a1) + np.abs(a2)) - l1q[None, :])
        vals = fv[s:s + chunk, None] * gv[None, :] * np.exp(np.where(keep, w, 0.0))
        np.add.at(out, (k1[keep] % n, k2[keep] % n), vals[keep])
    return out


# ---------------------------------------------------------------------------
# max over a lattice block of the pair exponent |k+l|_1 - |k|_1 - |l|_1


def _pair_exponent_max_loop(K):
    best = -(10 ** 9)
    for k1 in range(-K, K + 1):
        for k2 in range(-K, K + 1):
            for l1 in range(-K, K + 1):
                for l2 in range(-K, K + 1):
                    e = (abs(k1 + l1) + abs(k2 + l2)
                         - abs(k1) - abs(k2) - abs(l1) - abs(l2))
                    if e > best:
                        best = e
    return best


def _pair_exponent_max_numpy(K):
    r = np.arange(-K, K + 1)
    k1, k2, l1, l2 = np.meshgrid(r, r, r, r, indexing="ij", sparse=True)
    e = (np.abs(k1 + l1) + np.abs(k2 + l2)
         - np.abs(k1) - np.abs(k2) - np.abs(l1) - np.abs(l2))
    return int(e.max())


if USE_NUMBA:
    _jit = numba.njit(cache=True, nogil=True)
    shell_max = _jit(_shell_max_loop)
    weighted_convolution = _jit(_wconv_loop)
    pair_exponent_max = _jit(_pair_exponent_max_loop)
else:
    shell_max = _shell_max_numpy
    weighted_convolution = _wconv_numpy
    pair_exponent_max = _pair_exponent_max_numpy

BACKEND = "numba" if USE_NUMBA else "numpy"

# plain-python/numpy references, always available for benchmarks and tests
numpy_kernels = {
    "shell_max": _shell_max_numpy,
    "weighted_convolution": _wconv_numpy,
    "pair_exponent_max": _pair_exponent_max_numpy,
}
