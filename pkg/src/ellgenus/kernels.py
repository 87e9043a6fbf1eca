"""Compiled inner loops with a pure-numpy fallback.

Set ``ELLGENUS_DISABLE_NUMBA=1`` to force the numpy path (useful for
debugging and for platforms without numba).  Both paths return identical
integer arrays; callers check the overflow bound before using either.
"""
from __future__ import annotations

import os

import numpy as np

INT64_LIMIT = 2 ** 62

_DISABLED = os.environ.get("ELLGENUS_DISABLE_NUMBA", "").strip() not in ("", "0", "false", "False")

try:
    if _DISABLED:
        raise ImportError("numba disabled by environment")
    from numba import njit
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


def _conv2d_trunc_numpy(a: np.ndarray, b: np.ndarray, qmax: int) -> np.ndarray:
    qa, ya = a.shape
    qb, yb = b.shape
    out = np.zeros((qmax + 1, ya + yb - 1), dtype=np.int64)
    for i in range(min(qa, qmax + 1)):
        row = a[i]
        if not row.any():
            continue
        for j in range(min(qb, qmax + 1 - i)):
            brow = b[j]
            if brow.any():
                out[i + j] += np.convolve(row, brow)
    return out


if HAVE_NUMBA:
    @njit(cache=True)
    def _conv2d_trunc_numba(a, b, qmax):
        qa, ya = a.shape
        qb, yb = b.shape
        out = np.zeros((qmax + 1, ya + yb - 1), dtype=np.int64)
        for i in range(min(qa, qmax + 1)):
            for j in range(min(qb, qmax + 1 - i)):
                for k in range(ya):
                    av = a[i, k]
                    if av == 0:
                        continue
                    for m in range(yb):
                        bv = b[j, m]
                        if bv != 0:
                            out[i + j, k + m] += av * bv
        return out
else:
    _conv2d_trunc_numba = None


def fits_int64(a: np.ndarray, b: np.ndarray) -> bool:
    """True when every entry of the product is bounded by |a|_1 |b|_1 < 2^62."""
    na = int(np.abs(a).sum(dtype=object)) if a.size else 0
    nb = int(np.abs(b).sum(dtype=object)) if b.size else 0
    return na * nb < INT64_LIMIT


def conv2d_trunc(a: np.ndarray, b: np.ndarray, qmax: int) -> np.ndarray:
    """Truncated product of two dense (q, y) integer arrays.

    Row index is the q-exponent, column index the y-offset.  Rows of the
    result beyond ``qmax`` are dropped.  The caller must check
    :func:`fits_int64` first.
    """
    a = np.ascontiguousarray(a, dtype=np.int64)
    b = np.ascontiguousarray(b, dtype=np.int64)
    if HAVE_NUMBA:
        return _conv2d_trunc_numba(a, b, int(qmax))
    return _conv2d_trunc_numpy(a, b, int(qmax))


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"


def theta_products(z: complex, tau: complex, nmax: int) -> complex:
    """Product part ``prod_{n=1}^{nmax} (1-q^n)(1-yq^n)(1-y^{-1}q^n)`` at numeric (z, tau)."""
    q = np.exp(2j * np.pi * tau)
    y = np.exp(2j * np.pi * z)
    n = np.arange(1, nmax + 1)
    qn = q ** n
    return complex(np.prod((1 - qn) * (1 - y * qn) * (1 - qn / y)))
