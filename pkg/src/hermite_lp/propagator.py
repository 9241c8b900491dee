"""Mehler generating function, the oscillatory propagator kernel and the
truncated propagator e^{itH} on sampled 1D functions.

The generating function is

    sum_k w^k hhat_k(x) hhat_k(y)
        = (pi (1 - w^2))^{-1/2} exp((2 x y w - (x^2 + y^2)(1 + w^2)/2) / (1 - w^2)),

for |w| < 1.  With eigenvalues 2k + 1, the kernel of e^{itH} is e^{it} times
its boundary value at w = e^{2it}, whose modulus is (2 pi |sin 2t|)^{-1/2}.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .hermite import DomainError, hermite_table
from .quadrature import QuadratureGrid

W_MARGIN = 1e-6
RADIAL_DELTAS = (1e-3, 5e-4, 2.5e-4)
TAIL_TOLERANCE = 1e-6


class SingularityError(DomainError):
    """Kernel evaluated at a time where it is a distribution, not a function."""


class AccuracyWarning(UserWarning):
    pass


@dataclass(frozen=True)
class MehlerPoint:
    w: complex
    x: float
    y: float
    value: complex

    def __post_init__(self):
        if not abs(self.w) < 1:
            raise DomainError("w must lie in the open unit disk")


def mehler_generating(w: complex, x: float, y: float) -> complex:
    """Closed form of sum_k w^k hhat_k(x) hhat_k(y), principal branch."""
    w = complex(w)
    if abs(w) > 1 - W_MARGIN:
        raise DomainError(f"|w| = {abs(w)} exceeds 1 - {W_MARGIN:g}")
    one_m = 1 - w * w
    # Re(1 - w^2) > 0 on the disk, so the principal root is continuous there
    expo = (2 * x * y * w - (x * x + y * y) * (1 + w * w) / 2) / one_m
    return complex(np.exp(expo) / np.sqrt(math.pi * one_m))


def mehler_point(w: complex, x: float, y: float) -> MehlerPoint:
    return MehlerPoint(complex(w), float(x), float(y), mehler_generating(w, x, y))


def mehler_partial_sum(w: complex, x: float, y: float, terms: int) -> complex:
    """sum_{k < terms} w^k hhat_k(x) hhat_k(y) from the recurrence."""
    _, t = hermite_table(np.arange(terms), np.array([x, y], dtype=float))
    powers = complex(w) ** np.arange(terms)
    return complex(np.sum(powers * t[:, 0] * t[:, 1]))


# ---------------------------------------------------------------------------
# dispersive magnitude
# ---------------------------------------------------------------------------

def _check_time(t: float) -> None:
    q = t / (math.pi / 2)
    if abs(q - round(q)) < 1e-12 * max(1.0, abs(q)):
        raise SingularityError(f"t = {t} is a multiple of pi/2; the kernel is singular there")


def dispersive_kernel_magnitude(t: float, n: int = 1) -> float:
    """(2 pi |sin 2t|)^{-n/2}: modulus of the kernel of e^{itH} on R^n."""
    _check_time(t)
    if n < 1:
        raise DomainError("dimension must be positive")
    return (2 * math.pi * abs(math.sin(2 * t))) ** (-n / 2)


def sin_t_form(t: float, n: int = 1) -> float:
    """(2 pi |sin t|)^{-n/2}, the |sin t| normalisation, reported for comparison only."""
    _check_time(t)
    return (2 * math.pi * abs(math.sin(t))) ** (-n / 2)


def radial_limit_magnitude(t: float, x: float, y: float, deltas: Sequence[float] = RADIAL_DELTAS) -> float:
    """lim_{rho -> 1} |mehler_generating(rho e^{2it}, x, y)|, by polynomial
    (Richardson) extrapolation in delta = 1 - rho."""
    _check_time(t)
    d = np.asarray(deltas, dtype=float)
    z = np.exp(2j * t)
    vals = np.array([abs(mehler_generating((1 - di) * z, x, y)) for di in d])
    # interpolating polynomial in delta, evaluated at 0
    coef = np.polyfit(d, vals, len(d) - 1)
    return float(coef[-1])


def measured_magnitude(t: float, n: int = 1, points: int = 5, seed: int = 0, box: float = 2.0) -> np.ndarray:
    """Radial-limit magnitudes (n-fold products of 1D limits) at random (x, y)."""
    rng = np.random.default_rng(seed)
    xs = rng.uniform(-box, box, size=(points, n))
    ys = rng.uniform(-box, box, size=(points, n))
    out = np.ones(points)
    for i in range(points):
        for a in range(n):
            out[i] *= radial_limit_magnitude(t, xs[i, a], ys[i, a])
    return out


@dataclass(frozen=True)
class KernelRow:
    t: float
    predicted: float
    measured: float
    sin_t_form: float

    @property
    def relerr(self) -> float:
        return abs(self.measured - self.predicted) / self.predicted


def kernel_magnitude_table(ts: Sequence[float], n: int = 1, points: int = 5, seed: int = 0) -> list[KernelRow]:
    """One row per t; ``measured`` is the sample with the largest deviation."""
    rows = []
    for t in ts:
        pred = dispersive_kernel_magnitude(t, n)
        m = measured_magnitude(t, n, points, seed)
        worst = m[np.argmax(np.abs(m - pred))]
        rows.append(KernelRow(float(t), pred, float(worst), sin_t_form(t, n)))
    return rows


def write_kernel_csv(path, rows: Sequence[KernelRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "predicted", "measured", "relerr"])
        for r in rows:
            w.writerow([f"{r.t:.17g}", f"{r.predicted:.17g}", f"{r.measured:.17g}", f"{r.relerr:.17g}"])


# ---------------------------------------------------------------------------
# truncated propagator
# ---------------------------------------------------------------------------

@dataclass
class SampledFunction:
    """Values of a (complex) function at quadrature nodes, with the weights."""

    x: np.ndarray
    weights: np.ndarray
    values: np.ndarray

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(self.weights * np.abs(self.values) ** 2)))

    def inner(self, other: "SampledFunction") -> complex:
        return complex(np.sum(self.weights * np.conj(self.values) * other.values))


def sample_function(f: Callable, K_trunc: int, extent: float = 10.0, nodes_per_wavelength: float = 8.0,
                    order: int = 6) -> SampledFunction:
    """Sample ``f`` on a grid that integrates products of hhat_k, k <= K_trunc."""
    lam = math.sqrt(2 * K_trunc + 1)
    grid = QuadratureGrid.symmetric(lam + extent, lam, nodes_per_wavelength, order)
    x, w = grid.nodes_weights()
    return SampledFunction(x, w, np.asarray(f(x), dtype=complex))


def hermite_coefficients(u0: SampledFunction, K_trunc: int) -> tuple[np.ndarray, np.ndarray]:
    """(<u0, hhat_k>)_{k <= K_trunc} by quadrature, and the hhat table used."""
    if K_trunc < 0:
        raise DomainError("K_trunc must be nonnegative")
    _, table = hermite_table(np.arange(K_trunc + 1), u0.x)
    coeffs = table @ (u0.weights * u0.values)
    return coeffs, table


def spectral_tail(u0: SampledFunction, coeffs: np.ndarray) -> float:
    """||u0 - Pi_K u0|| from Parseval."""
    rest = u0.l2_norm() ** 2 - float(np.sum(np.abs(coeffs) ** 2))
    return math.sqrt(max(rest, 0.0))


def propagator_apply(u0: SampledFunction, t: float, K_trunc: int) -> SampledFunction:
    """sum_{k <= K_trunc} e^{it(2k+1)} <u0, hhat_k> hhat_k on the nodes of u0."""
    coeffs, table = hermite_coefficients(u0, K_trunc)
    tail = spectral_tail(u0, coeffs)
    if tail > TAIL_TOLERANCE:
        warnings.warn(f"spectral tail {tail:.3g} exceeds {TAIL_TOLERANCE:g}; raise K_trunc", AccuracyWarning,
                      stacklevel=2)
    phases = np.exp(1j * t * (2 * np.arange(K_trunc + 1) + 1))
    return SampledFunction(u0.x, u0.weights, (phases * coeffs) @ table)
