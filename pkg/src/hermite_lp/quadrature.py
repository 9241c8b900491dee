"""Composite Gauss-Legendre rules adapted to the local oscillation of
eigenfunctions with eigenvalue lam^2.

Panel edges are equispaced in the accumulated phase

    Phi(x) = int_0^x sqrt(|lam^2 - t^2| + lam^{2/3}) dt,

so every panel spans at most ``1/nodes_per_wavelength`` of a local
wavelength.  The lam^{2/3} floor keeps the Airy scale lam^{-1/3} resolved
near the turning point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=32)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def local_wavenumber(lam: float, x):
    x = np.asarray(x, dtype=float)
    return np.sqrt(np.abs(lam * lam - x * x) + lam ** (2.0 / 3.0))


def _antideriv_inside(a2: float, x):
    # int_0^x sqrt(a2 - t^2) dt, |x| <= sqrt(a2)
    a = math.sqrt(a2)
    u = np.clip(x / a, -1.0, 1.0)
    return 0.5 * (x * np.sqrt(np.maximum(a2 - x * x, 0.0)) + a2 * np.arcsin(u))


def _antideriv_outside(b2: float, x):
    # int sqrt(t^2 - b2) dt (any antiderivative), x >= sqrt(b2)
    r = np.sqrt(np.maximum(x * x - b2, 0.0))
    return 0.5 * (x * r - b2 * np.log(x + r))


def accumulated_phase(lam: float, x):
    """Phi(x) for x >= 0 (closed form, continuous and increasing)."""
    x = np.asarray(x, dtype=float)
    c = lam ** (2.0 / 3.0)
    a2 = lam * lam + c
    b2 = lam * lam - c
    inside = _antideriv_inside(a2, np.minimum(x, lam))
    # continue past lam with the exterior branch, glued at x = lam
    xo = np.maximum(x, lam)
    outside = _antideriv_outside(b2, xo) - _antideriv_outside(b2, lam)
    return inside + outside


def _invert_phase(lam: float, targets: np.ndarray, lo: float, hi: float) -> np.ndarray:
    a = np.full_like(targets, lo)
    b = np.full_like(targets, hi)
    for _ in range(64):
        mid = 0.5 * (a + b)
        below = accumulated_phase(lam, mid) < targets
        a = np.where(below, mid, a)
        b = np.where(below, b, mid)
    return 0.5 * (a + b)


def panel_edges(a: float, b: float, lam: float, nodes_per_wavelength: float = 8.0,
                breakpoints=()) -> np.ndarray:
    """Panel edges on [a, b] (0 <= a < b) equispaced in accumulated phase.

    Extra ``breakpoints`` inside (a, b) are inserted as edges so that no
    panel straddles them.
    """
    if not 0 <= a < b:
        raise ValueError(f"bad interval [{a}, {b}]")
    if nodes_per_wavelength < 1:
        raise ValueError("nodes_per_wavelength must be >= 1")
    cuts = sorted({a, b, *(float(t) for t in breakpoints if a < t < b)})
    step = 0.9 * 2.0 * math.pi / nodes_per_wavelength
    pieces = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        p_lo, p_hi = accumulated_phase(lam, [lo, hi])
        m = max(1, int(math.ceil((p_hi - p_lo) / step)))
        targets = np.linspace(p_lo, p_hi, m + 1)
        edges = _invert_phase(lam, targets[1:-1], lo, hi)
        pieces.append(np.concatenate([[lo], edges]))
    pieces.append(np.array([b]))
    return np.concatenate(pieces)


@dataclass
class QuadratureGrid:
    """Composite Gauss-Legendre rule: panels ``[edges[i], edges[i+1]]``,
    ``order`` nodes each."""

    edges: np.ndarray
    order: int = 6
    nodes_per_wavelength: float = 8.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def for_interval(cls, a: float, b: float, lam: float, nodes_per_wavelength: float = 8.0,
                     order: int = 6, breakpoints=()) -> "QuadratureGrid":
        return cls(panel_edges(a, b, lam, nodes_per_wavelength, breakpoints), order, nodes_per_wavelength)

    @classmethod
    def symmetric(cls, half_width: float, lam: float, nodes_per_wavelength: float = 8.0,
                  order: int = 6) -> "QuadratureGrid":
        """Grid on [-half_width, half_width], mirror-symmetric about 0."""
        right = panel_edges(0.0, half_width, lam, nodes_per_wavelength)
        return cls(np.concatenate([-right[:0:-1], right]), order, nodes_per_wavelength)

    @property
    def panels(self) -> list[tuple[tuple[float, float], int]]:
        return [((float(l), float(r)), self.order) for l, r in zip(self.edges[:-1], self.edges[1:])]

    @property
    def n_panels(self) -> int:
        return len(self.edges) - 1

    def nodes_weights(self) -> tuple[np.ndarray, np.ndarray]:
        if "nw" not in self._cache:
            t, w = gauss_legendre(self.order)
            left = self.edges[:-1, None]
            half = 0.5 * np.diff(self.edges)[:, None]
            nodes = left + half * (t[None, :] + 1.0)
            weights = half * w[None, :]
            self._cache["nw"] = (nodes.ravel(), weights.ravel())
        return self._cache["nw"]

    def panel_of_nodes(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_panels), self.order)

    def mirrored(self) -> "QuadratureGrid":
        return QuadratureGrid(-self.edges[::-1].copy(), self.order, self.nodes_per_wavelength)

    def max_width_ratio(self, lam: float) -> float:
        """max over panels of width / (wavelength / nodes_per_wavelength),
        with the wavelength 2 pi / sqrt(|lam^2 - x^2| + 1) at the panel centre."""
        centres = 0.5 * (self.edges[:-1] + self.edges[1:])
        widths = np.diff(self.edges)
        allowed = 2 * math.pi / np.sqrt(np.abs(lam * lam - centres ** 2) + 1.0) / self.nodes_per_wavelength
        return float(np.max(widths / allowed))


def lp_from_samples(values, weights, p: float) -> float:
    """(sum w |f|^p)^{1/p}; p = inf gives the sample maximum."""
    a = np.abs(np.asarray(values, dtype=float))
    if math.isinf(p):
        return float(np.max(a, initial=0.0))
    w = np.asarray(weights, dtype=float)
    # scale out the maximum to avoid under/overflow of |f|^p
    top = float(np.max(a, initial=0.0))
    if top == 0.0:
        return 0.0
    total = float(np.sum(w * (a / top) ** p))
    return top * total ** (1.0 / p)
