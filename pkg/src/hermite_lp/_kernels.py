"""Compiled inner loops.

Every kernel works point-by-point, so any partition of the points over
threads gives bit-identical output.
"""

import math
import os

import numba
import numpy as np

if "NUMBA_THREADING_LAYER" not in os.environ:
    # the bundled TBB is too old; workqueue is always available
    numba.config.THREADING_LAYER = "workqueue"

_LOG2E = 1.4426950408889634
_LOG2_PI_QUARTER = -0.25 * math.log2(math.pi)
_BIG = 2.0 ** 400
_SMALL = 2.0 ** -400


@numba.njit(cache=True, nogil=True)
def _start(x):
    # pi^{-1/4} e^{-x^2/2} as mantissa, exponent
    l2 = -0.5 * x * x * _LOG2E + _LOG2_PI_QUARTER
    e = math.floor(l2)
    return 2.0 ** (l2 - e), np.int64(e)


@numba.njit(cache=True, nogil=True, parallel=True)
def hermite_rows(xs, rows, kmax, up, down, out_m, out_e):
    """Record normalised Hermite values for the requested degrees.

    ``up[k] = sqrt(2/(k+1))`` and ``down[k] = sqrt(k/(k+1))``; ``rows`` is
    sorted ascending and ``rows[-1] == kmax``.  Values are written as
    mantissa/exponent pairs into ``out_m``/``out_e`` (shape rows x points).
    """
    npts = xs.shape[0]
    nrows = rows.shape[0]
    for j in numba.prange(npts):
        x = xs[j]
        cur, e = _start(x)
        prev = 0.0
        r = 0
        k = 0
        while r < nrows and rows[r] == 0:
            out_m[r, j] = cur
            out_e[r, j] = e
            r += 1
        while k < kmax:
            nxt = x * up[k] * cur - down[k] * prev
            prev = cur
            cur = nxt
            k += 1
            a = abs(cur)
            if a > _BIG or (a < _SMALL and abs(prev) < _SMALL and a > 0.0):
                s = math.frexp(a)[1]
                cur = math.ldexp(cur, -s)
                prev = math.ldexp(prev, -s)
                e += s
            while r < nrows and rows[r] == k:
                out_m[r, j] = cur
                out_e[r, j] = e
                r += 1


@numba.njit(cache=True, nogil=True, parallel=True)
def mode_sum(tables, row_index, coeffs, out):
    """out[p] = sum_m coeffs[m] * prod_i tables[i, row_index[m, i], p].

    The sum over m is an ordered pairwise tree, identical for every point
    regardless of scheduling.
    """
    naxes, _, npts = tables.shape
    nterms = coeffs.shape[0]
    for p in numba.prange(npts):
        buf = np.empty(max(nterms, 1))
        for m in range(nterms):
            t = coeffs[m]
            for i in range(naxes):
                t *= tables[i, row_index[m, i], p]
            buf[m] = t
        length = nterms
        while length > 1:
            half = length // 2
            for q in range(half):
                buf[q] = buf[2 * q] + buf[2 * q + 1]
            if length % 2:
                buf[half] = buf[length - 1]
                length = half + 1
            else:
                length = half
        out[p] = buf[0] if nterms > 0 else 0.0


def recurrence_coefficients(kmax: int):
    k = np.arange(max(kmax, 1), dtype=float)
    return np.sqrt(2.0 / (k + 1.0)), np.sqrt(k / (k + 1.0))
