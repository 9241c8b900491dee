"""Dyadic geometry around the sphere |x| = lam and the weighted norms built on it.

Regions (all radial, possibly overlapping):

* ``Int(j)``: lam (1 - 4^{-(j-1)}) <= |x| <= lam (1 - 4^{-(j+1)}), 0 <= j, 2^j <= lam^{2/3}
* ``Bd``:     ||x| - lam| <= lam^{-1/3}
* ``Ext``:    |x| > lam + lam^{-1/3} / 2
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Literal

import numpy as np

from .quadrature import QuadratureGrid, lp_from_samples, panel_edges

INF = math.inf


@dataclass(frozen=True)
class SpectralScale:
    """Dimension ``n``, degree ``N`` and lam = sqrt(n + 2N)."""

    n: int
    N: int

    def __post_init__(self):
        if self.n < 1 or self.N < 0:
            raise ValueError(f"invalid scale n={self.n}, N={self.N}")

    @property
    def lam(self) -> float:
        return math.sqrt(self.n + 2 * self.N)

    @property
    def eigenvalue(self) -> int:
        return self.n + 2 * self.N

    @property
    def airy_width(self) -> float:
        return self.lam ** (-1.0 / 3.0)

    @property
    def lam_two_thirds(self) -> float:
        return self.lam ** (2.0 / 3.0)

    @property
    def j_max(self) -> int:
        # largest j with 2^j <= lam^{2/3}; guard against log rounding at exact powers
        j = int(math.floor((2.0 / 3.0) * math.log2(self.lam)))
        while 2 ** (j + 1) <= self.lam_two_thirds * (1 + 1e-12):
            j += 1
        while j > 0 and 2 ** j > self.lam_two_thirds * (1 + 1e-12):
            j -= 1
        return j


@dataclass(frozen=True, order=True)
class RegionLabel:
    kind: Literal["int", "bd", "ext"]
    j: int = -1

    def __str__(self) -> str:
        return f"Int({self.j})" if self.kind == "int" else ("Bd" if self.kind == "bd" else "Ext")

    @classmethod
    def parse(cls, text: str) -> "RegionLabel":
        t = text.strip()
        if t == "Bd":
            return BD
        if t == "Ext":
            return EXT
        if t.startswith("Int(") and t.endswith(")"):
            return Int(int(t[4:-1]))
        raise ValueError(f"unknown region label {text!r}")


def Int(j: int) -> RegionLabel:
    if j < 0:
        raise ValueError("Int(j) needs j >= 0")
    return RegionLabel("int", int(j))


BD = RegionLabel("bd")
EXT = RegionLabel("ext")


def valid_labels(scale: SpectralScale, j_min: int = 0) -> list[RegionLabel]:
    return [Int(j) for j in range(j_min, scale.j_max + 1)] + [BD, EXT]


def norm_family(scale: SpectralScale) -> list[RegionLabel]:
    """Regions entering the l^q_lam L^p norm (interior blocks start at j = 1)."""
    return valid_labels(scale, j_min=1)


def radial_interval(label: RegionLabel, scale: SpectralScale) -> tuple[float, float]:
    lam = scale.lam
    if label.kind == "int":
        if label.j > scale.j_max:
            raise ValueError(f"{label} is not a valid region for lam={lam:.6g}")
        inner = lam * (1.0 - 4.0 ** (-(label.j - 1)))
        return max(inner, 0.0), lam * (1.0 - 4.0 ** (-(label.j + 1)))
    if label.kind == "bd":
        w = scale.airy_width
        return max(lam - w, 0.0), lam + w
    return lam + 0.5 * scale.airy_width, INF


def region_membership(x_norm: float, scale: SpectralScale) -> frozenset[RegionLabel]:
    if x_norm < 0:
        raise ValueError("x_norm must be nonnegative")
    out = set()
    for label in valid_labels(scale):
        lo, hi = radial_interval(label, scale)
        if label.kind == "ext":
            if x_norm > lo:
                out.add(label)
        elif lo <= x_norm <= hi:
            out.add(label)
    return frozenset(out)


def region_table(scale: SpectralScale) -> list[tuple[str, float, float]]:
    return [(str(lab), *radial_interval(lab, scale)) for lab in valid_labels(scale)]


def write_region_csv(path, scale: SpectralScale) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j_or_kind", "inner_radius", "outer_radius"])
        for name, lo, hi in region_table(scale):
            w.writerow([name, f"{lo:.17g}", f"{hi:.17g}"])


# ---------------------------------------------------------------------------
# the variable y and the exponent rho
# ---------------------------------------------------------------------------

def y_of(x_normsq, scale: SpectralScale):
    lam = scale.lam
    y = (lam * lam - np.asarray(x_normsq, dtype=float)) / scale.lam_two_thirds
    return float(y) if np.ndim(y) == 0 else y


def bracket_plus(y):
    return 1.0 + np.maximum(y, 0.0)


def bracket_minus(y):
    return 1.0 + np.maximum(-np.asarray(y), 0.0)


def _inv(p: float) -> float:
    return 0.0 if math.isinf(p) else 1.0 / p


def rho(p: float, n: int) -> float:
    """Sharp growth exponent of ||phi||_{L^p} / ||phi||_{L^2} in lam."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not p >= 2:
        raise ValueError(f"rho is defined for p >= 2, got {p}")
    d = 0.5 - _inv(p)
    if n == 1:
        return -d if p < 4 else -1.0 / 3.0 + d / 3.0
    first_kink = 2.0 * (n + 3) / (n + 1)
    second_kink = INF if n == 2 else 2.0 * n / (n - 2)
    if p < first_kink:
        return -d
    if p <= second_kink and not (math.isinf(p) and n > 2):
        return -1.0 / 3.0 + n * d / 3.0
    return -1.0 + n * d


def rho_kinks(n: int) -> tuple[float, ...]:
    if n == 1:
        return (4.0,)
    return (2.0 * (n + 3) / (n + 1), INF if n == 2 else 2.0 * n / (n - 2))


@dataclass(frozen=True)
class WeightedNormSpec:
    """lam^{lambda_power} || <y>_+^{alpha_plus} <y>_-^{alpha_minus} f ||_{l^q L^p}."""

    p: float
    q: float
    alpha_plus: float
    alpha_minus: float
    lambda_power: float

    @classmethod
    def from_theorem(cls, p: float, n: int, part: Literal["a", "b"], decay_power: float = 4.0,
                     q: float = INF) -> "WeightedNormSpec":
        crit = INF if n == 1 else 2.0 * (n + 1) / (n - 1)
        d = 0.5 - _inv(p)
        lp = 1.0 / 3.0 - n * d / 3.0
        if part == "a":
            if not 2 <= p <= crit:
                raise ValueError(f"part a needs 2 <= p <= {crit}")
            return cls(p, q, -0.25 + (n + 3) * d / 4.0, 1.0 - n * d / 2.0, lp)
        if part == "b":
            if not p >= crit:
                raise ValueError(f"part b needs p >= {crit}")
            return cls(p, q, 0.5 - n * d / 2.0, decay_power, lp)
        raise ValueError("part must be 'a' or 'b'")

    def weight(self, x_normsq, scale: SpectralScale):
        y = y_of(x_normsq, scale)
        return bracket_plus(y) ** self.alpha_plus * bracket_minus(y) ** self.alpha_minus


# ---------------------------------------------------------------------------
# L^p norms over regions
# ---------------------------------------------------------------------------

@dataclass
class NormResult:
    value: float
    stderr: float = 0.0
    grid_sup: bool = False
    nodes: int = 0

    def __float__(self) -> float:
        return float(self.value)


DEFAULT_EXT_EXTENT = 10.0


def _outer(label: RegionLabel, scale: SpectralScale, ext_extent: float) -> tuple[float, float]:
    lo, hi = radial_interval(label, scale)
    if math.isinf(hi):
        hi = scale.lam + max(ext_extent, 2 * scale.airy_width)
    return lo, hi


def _refine_sup(g: Callable, x0: float, lo: float, hi: float, best: float) -> float:
    from scipy.optimize import minimize_scalar

    if hi <= lo:
        return best
    res = minimize_scalar(lambda t: -abs(float(g(np.array([t]))[0])), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12 * max(1.0, abs(x0))})
    return max(best, -float(res.fun))


@dataclass
class RadialGrid1D:
    """One quadrature over [0, x_max] whose panels never straddle a region edge.

    Lets many (region, p, weight) combinations share a single evaluation of
    the field.
    """

    scale: SpectralScale
    grid: QuadratureGrid
    labels: list
    ext_extent: float = DEFAULT_EXT_EXTENT
    _label_masks: dict = field(default_factory=dict, repr=False)

    @classmethod
    def build(cls, scale: SpectralScale, labels: Iterable[RegionLabel] | None = None,
              nodes_per_wavelength: float = 8.0, order: int = 6,
              ext_extent: float = DEFAULT_EXT_EXTENT) -> "RadialGrid1D":
        labels = list(valid_labels(scale) if labels is None else labels)
        cuts = set()
        hi_all = 0.0
        for lab in labels:
            lo, hi = _outer(lab, scale, ext_extent)
            cuts.update((lo, hi))
            hi_all = max(hi_all, hi)
        edges = panel_edges(0.0, hi_all, scale.lam, nodes_per_wavelength, sorted(cuts))
        return cls(scale, QuadratureGrid(edges, order, nodes_per_wavelength), labels, ext_extent)

    def nodes_weights(self):
        return self.grid.nodes_weights()

    def node_mask(self, label: RegionLabel) -> np.ndarray:
        if label not in self._label_masks:
            lo, hi = _outer(label, self.scale, self.ext_extent)
            left, right = self.grid.edges[:-1], self.grid.edges[1:]
            tol = 1e-12 * max(1.0, hi)
            inside = (left >= lo - tol) & (right <= hi + tol)
            self._label_masks[label] = np.repeat(inside, self.grid.order)
        return self._label_masks[label]


def region_norms_1d(f, scale: SpectralScale, labels: Iterable[RegionLabel], ps: Iterable[float],
                    weight: Callable | None = None, parity: str | None = None,
                    nodes_per_wavelength: float = 8.0, order: int = 6,
                    ext_extent: float = DEFAULT_EXT_EXTENT, refine_sup: bool = True,
                    samples=None) -> dict:
    """L^p norms of ``weight * f`` on each region for each exponent.

    ``f`` is a vectorised callable of x (1D).  ``parity`` in {"even", "odd"}
    tells that |f| is even, so only x >= 0 is evaluated.  Returns a dict
    keyed by (label, p) with NormResult values.
    """
    if scale.n != 1:
        raise ValueError("region_norms_1d is for n = 1; use tensor or Monte Carlo norms")
    labels = list(labels)
    ps = list(ps)
    rg = RadialGrid1D.build(scale, labels, nodes_per_wavelength, order, ext_extent)
    x, w = rg.nodes_weights()

    def g(t):
        t = np.asarray(t, dtype=float)
        v = np.asarray(f(t), dtype=float)
        if weight is not None:
            v = v * weight(t * t)
        return v

    if samples is not None:
        pos = np.asarray(samples, dtype=float)
        if weight is not None:
            pos = pos * weight(x * x)
    else:
        pos = g(x)
    neg = None if parity in ("even", "odd") else g(-x)
    out = {}
    for lab in labels:
        mask = rg.node_mask(lab)
        for p in ps:
            if math.isinf(p):
                a_pos = np.abs(pos[mask])
                val = float(np.max(a_pos, initial=0.0))
                best_x = x[mask][np.argmax(a_pos)] if a_pos.size else 0.0
                side = 1.0
                if neg is not None:
                    a_neg = np.abs(neg[mask])
                    if a_neg.size and a_neg.max() > val:
                        val = float(a_neg.max())
                        best_x = x[mask][np.argmax(a_neg)]
                        side = -1.0
                if refine_sup and samples is None and a_pos.size:
                    lo, hi = _outer(lab, scale, ext_extent)
                    idx = np.searchsorted(rg.grid.edges, best_x)
                    a = max(lo, rg.grid.edges[max(idx - 2, 0)])
                    b = min(hi, rg.grid.edges[min(idx + 1, rg.grid.n_panels)])
                    val = _refine_sup(lambda t: g(side * t), best_x, a, b, val)
                out[(lab, p)] = NormResult(val, 0.0, True, int(mask.sum()))
            else:
                vals = pos[mask]
                other = vals if neg is None else neg[mask]
                vals = np.concatenate([vals, other])
                ww = np.concatenate([w[mask], w[mask]])
                out[(lab, p)] = NormResult(lp_from_samples(vals, ww, p), 0.0, False, int(mask.sum()))
    return out


def whole_line_norms(f, lam: float, ps: Iterable[float], parity: str | None = None, x_max: float | None = None,
                     nodes_per_wavelength: float = 8.0, order: int = 6, refine_sup: bool = True) -> dict:
    """||f||_{L^p(R)} for each p, resolving oscillations at eigenvalue lam^2."""
    x_max = lam + DEFAULT_EXT_EXTENT if x_max is None else x_max
    grid = QuadratureGrid.for_interval(0.0, x_max, lam, nodes_per_wavelength, order)
    x, w = grid.nodes_weights()
    pos = np.asarray(f(x), dtype=float)
    if parity in ("even", "odd"):
        vals, ww = np.concatenate([pos, pos]), np.concatenate([w, w])
    else:
        vals, ww = np.concatenate([pos, np.asarray(f(-x), dtype=float)]), np.concatenate([w, w])
    out = {}
    for p in ps:
        if math.isinf(p):
            i = int(np.argmax(np.abs(vals)))
            val = float(abs(vals[i]))
            if refine_sup:
                xi = x[i % x.size]
                side = 1.0 if i < x.size else -1.0
                idx = np.searchsorted(grid.edges, xi)
                a = grid.edges[max(idx - 2, 0)]
                b = grid.edges[min(idx + 1, grid.n_panels)]
                val = _refine_sup(lambda t: np.asarray(f(side * np.asarray(t)), dtype=float), xi, a, b, val)
            out[p] = val
        else:
            out[p] = lp_from_samples(vals, ww, p)
    return out


def lp_norm_region(f, label: RegionLabel, p: float, scale: SpectralScale, grid: dict | None = None,
                   parity: str | None = None, **mc) -> NormResult:
    """||f||_{L^p(region)}.

    n = 1: deterministic composite Gauss-Legendre (``grid`` may carry
    ``nodes_per_wavelength`` / ``order`` / ``ext_extent``).  n >= 2: ``f`` is
    a callable on (npts, n) arrays and the norm is a stratified Monte Carlo
    estimate with standard error; keyword arguments go to
    :func:`mc_lp_norm`.
    """
    if scale.n == 1:
        opts = dict(grid or {})
        res = region_norms_1d(f, scale, [label], [p], parity=parity, **opts)
        return res[(label, p)]
    return mc_lp_norm(f, label, p, scale, **mc)


@dataclass
class WeightedNormResult:
    value: float
    per_region: dict
    spec: WeightedNormSpec

    def __float__(self) -> float:
        return float(self.value)

    def worst_region(self) -> RegionLabel:
        return max(self.per_region, key=lambda k: self.per_region[k])


def combine_lq(values: Iterable[float], q: float) -> float:
    vals = np.asarray(list(values), dtype=float)
    if math.isinf(q):
        return float(np.max(vals, initial=0.0))
    return float(np.sum(vals ** q) ** (1.0 / q))


def weighted_norm(f, spec: WeightedNormSpec, scale: SpectralScale, labels=None, parity: str | None = None,
                  grid: dict | None = None, **mc) -> WeightedNormResult:
    labels = norm_family(scale) if labels is None else list(labels)
    pref = scale.lam ** spec.lambda_power

    def wfun(r2):
        return spec.weight(r2, scale)

    if scale.n == 1:
        norms = region_norms_1d(f, scale, labels, [spec.p], weight=wfun, parity=parity, **(grid or {}))
        per = {lab: pref * norms[(lab, spec.p)].value for lab in labels}
    else:
        per = {}
        for lab in labels:
            g = (lambda pts, _f=f: np.asarray(_f(pts)) * wfun(np.sum(pts * pts, axis=1)))
            per[lab] = pref * mc_lp_norm(g, lab, spec.p, scale, **mc).value
    return WeightedNormResult(combine_lq(per.values(), spec.q), per, spec)


# ---------------------------------------------------------------------------
# n >= 2: tensor grids and stratified Monte Carlo
# ---------------------------------------------------------------------------

def tensor_lp_norm(values: np.ndarray, axes: list[np.ndarray], axis_weights: list[np.ndarray],
                   label: RegionLabel, p: float, scale: SpectralScale,
                   ext_extent: float = DEFAULT_EXT_EXTENT) -> NormResult:
    """Masked tensor-product quadrature (Riemann-type at the curved edges)."""
    mesh = np.meshgrid(*axes, indexing="ij")
    r = np.sqrt(sum(m * m for m in mesh))
    lo, hi = _outer(label, scale, ext_extent)
    mask = (r >= lo) & (r <= hi) if label.kind != "ext" else (r > lo) & (r <= hi)
    wmesh = np.ones_like(r)
    for i, wa in enumerate(axis_weights):
        shape = [1] * len(axes)
        shape[i] = -1
        wmesh = wmesh * np.reshape(wa, shape)
    vals = np.asarray(values)[mask]
    return NormResult(lp_from_samples(vals, wmesh[mask], p), 0.0, math.isinf(p), int(mask.sum()))


def _ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def mc_lp_norm(f, label: RegionLabel, p: float, scale: SpectralScale, samples: int = 20000,
               strata: int = 64, seed: int = 0, ext_extent: float = DEFAULT_EXT_EXTENT,
               center=None, radius_interval: tuple[float, float] | None = None) -> NormResult:
    """Stratified Monte Carlo L^p norm over a radial shell in R^n.

    Strata are equal-volume radial shells; within each the radius is
    sampled by inverse CDF and the direction uniformly.  Returns the norm
    and its delta-method standard error.
    """
    n = scale.n
    rng = np.random.default_rng(seed)
    lo, hi = radial_interval_or(label, scale, ext_extent) if radius_interval is None else radius_interval
    vol = _ball_volume(n) * (hi ** n - lo ** n)
    per = max(2, samples // strata)
    edges = np.linspace(0.0, 1.0, strata + 1)
    u = (edges[:-1, None] + rng.random((strata, per)) * (edges[1] - edges[0])).ravel()
    r = (lo ** n + u * (hi ** n - lo ** n)) ** (1.0 / n)
    d = rng.standard_normal((u.size, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    pts = r[:, None] * d
    if center is not None:
        pts = pts + np.asarray(center, dtype=float)[None, :]
    vals = np.abs(np.asarray(f(pts), dtype=float))
    if math.isinf(p):
        return NormResult(float(vals.max(initial=0.0)), 0.0, True, vals.size)
    top = float(vals.max(initial=0.0))
    if top == 0.0:
        return NormResult(0.0, 0.0, False, vals.size)
    g = ((vals / top) ** p).reshape(strata, per)
    means = g.mean(axis=1)
    var = g.var(axis=1, ddof=1) / per
    integral = vol * means.mean()
    se_int = vol * math.sqrt(var.sum()) / strata
    norm = top * integral ** (1.0 / p)
    se = norm * se_int / (p * integral) if integral > 0 else 0.0
    return NormResult(norm, se, False, vals.size)


def radial_interval_or(label: RegionLabel, scale: SpectralScale, ext_extent: float) -> tuple[float, float]:
    return _outer(label, scale, ext_extent)
