"""Exact eigenfunctions of H = -Delta + |x|^2 built as finite sums of tensor
Hermite products, engineered to concentrate on tubes or small balls.

Every sum uses multi-indices of one total degree N, so it is an
eigenfunction with eigenvalue n + 2N.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import _kernels
from .hermite import hermite_second_derivs, hermite_table, s_minus
from .quadrature import QuadratureGrid, gauss_legendre, lp_from_samples
from .regions import Int, SpectralScale, radial_interval


class ConstructionError(RuntimeError):
    pass


class ResourceError(MemoryError):
    pass


DEFAULT_MEMORY_CAP = 1 << 30  # bytes


@dataclass(frozen=True, order=True)
class MultiIndex:
    alpha: tuple

    def __post_init__(self):
        a = tuple(int(v) for v in self.alpha)
        if any(v < 0 for v in a):
            raise ValueError(f"negative entry in {a}")
        object.__setattr__(self, "alpha", a)

    @property
    def order(self) -> int:
        return sum(self.alpha)

    @property
    def n(self) -> int:
        return len(self.alpha)

    def __iter__(self):
        return iter(self.alpha)


@dataclass
class ModeSum:
    """sum_m c_m prod_i hhat_{alpha_i^m}(x_i)."""

    scale: SpectralScale
    indices: list
    coefficients: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.indices = [a if isinstance(a, MultiIndex) else MultiIndex(tuple(a)) for a in self.indices]
        self.coefficients = np.asarray(self.coefficients, dtype=float).reshape(-1)
        if len(self.indices) != self.coefficients.size:
            raise ValueError("one coefficient per index")
        seen = set()
        for a in self.indices:
            if a.n != self.scale.n:
                raise ValueError(f"index {a.alpha} has wrong dimension for n={self.scale.n}")
            if a.order != self.scale.N:
                raise ValueError(f"index {a.alpha} has |alpha| != N={self.scale.N}")
            if a in seen:
                raise ValueError(f"repeated index {a.alpha}")
            seen.add(a)

    def __len__(self) -> int:
        return len(self.indices)

    @property
    def eigenvalue(self) -> int:
        return self.scale.eigenvalue

    def l2_norm(self) -> float:
        """Exact L^2 norm by orthonormality."""
        return float(np.sqrt(np.sum(self.coefficients ** 2)))

    def index_array(self) -> np.ndarray:
        if not self.indices:
            return np.zeros((0, self.scale.n), dtype=np.int64)
        return np.array([a.alpha for a in self.indices], dtype=np.int64)

    def to_json(self) -> str:
        return json.dumps({"n": self.scale.n, "N": self.scale.N,
                           "indices": [list(a.alpha) for a in self.indices],
                           "coefficients": [float(c) for c in self.coefficients]}, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ModeSum":
        d = json.loads(text)
        return cls(SpectralScale(d["n"], d["N"]), [tuple(a) for a in d["indices"]], d["coefficients"])


def _transverse_sign(alpha_rest) -> float:
    # hhat_{2m}(0) has sign (-1)^m; this makes every transverse factor positive at 0
    return float((-1) ** (sum(int(a) // 2 for a in alpha_rest) % 2))


def _even_compositions(total: int, parts: int, lower: float) -> Iterator[tuple]:
    """Tuples of ``parts`` even integers > lower summing to ``total``."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    first = 2 * (int(math.floor(lower / 2)) + 1) if lower >= 0 else 0
    if parts == 1:
        if total >= first and total % 2 == 0:
            yield (total,)
        return
    for a in range(first, total + 1, 2):
        rest_min = (parts - 1) * first
        if total - a < rest_min:
            break
        for tail in _even_compositions(total - a, parts - 1, lower):
            yield (a,) + tail


# ---------------------------------------------------------------------------
# constructions
# ---------------------------------------------------------------------------

def tube_d0(scale: SpectralScale) -> ModeSum:
    """hhat_N(x_1) exp(-|x'|^2/2), concentrated in |x'| < 1."""
    n = scale.n
    alpha = (scale.N,) + (0,) * (n - 1)
    # hhat_0 = pi^{-1/4} e^{-t^2/2}, so each transverse Gaussian costs pi^{1/4}
    coef = math.pi ** ((n - 1) / 4.0)
    return ModeSum(scale, [alpha], [coef], {"construction": "tube_d0"})


def point_d0_indices(n: int, N: int) -> list[tuple]:
    return list(_even_compositions(N, n, N / (4.0 * n)))


def point_d0(scale: SpectralScale) -> ModeSum:
    """Sum over all even alpha with |alpha| = N and alpha_i > N/(4n)."""
    n, N = scale.n, scale.N
    if n < 2:
        raise ValueError("point concentration needs n >= 2")
    if N % 2:
        raise ValueError("point_d0 needs N even")
    idx = point_d0_indices(n, N)
    if not idx:
        raise ConstructionError(f"no admissible index for n={n}, N={N}")
    return ModeSum(scale, idx, np.ones(len(idx)), {"construction": "point_d0"})


def default_radius(scale: SpectralScale, j: int) -> float:
    """Midpoint radius of Int(j)."""
    lo, hi = radial_interval(Int(j), scale)
    return 0.5 * (lo + hi)


def _point_dj_I(n: int, N: int, N0: int, threshold: float) -> list[tuple]:
    out = []
    for total in range(0, N0, 2):
        for rest in _even_compositions(total, n - 1, threshold):
            out.append((N - total,) + rest)
    return out


def point_dj(scale: SpectralScale, j: int, r_seed: float | None = None, transverse: str = "N0",
             scan_points: int = 41) -> tuple[ModeSum, float]:
    """Sum concentrating in B(r e_1, c 2^j / lam), r e_1 in Int(j).

    Index set: alpha' even, alpha_1 > N - N0, alpha'_i > N0/(4n) (or N/(4n)
    with ``transverse="N"``), kept when hhat_{alpha_1}(r) exceeds
    (lam^2 - r^2)^{-1/2}/4.  ``r`` is scanned over r_seed +- 2^j/lam to
    maximise the kept count.
    """
    n, N, lam = scale.n, scale.N, scale.lam
    if n < 2:
        raise ValueError("point concentration needs n >= 2")
    if N % 2:
        raise ValueError("point_dj needs N even")
    lo, hi = radial_interval(Int(j), scale)
    r_seed = default_radius(scale, j) if r_seed is None else float(r_seed)
    if not lo <= r_seed <= hi:
        raise ValueError(f"r_seed={r_seed} is not in Int({j}) = [{lo}, {hi}]")
    half = 2.0 ** j / lam
    if scan_points <= 1:
        rs = np.array([r_seed])
    else:
        rs = np.linspace(max(lo, r_seed - half), min(hi, r_seed + half), scan_points)

    best = None
    cache = {}
    for r in rs:
        N0 = int(round((lam * lam - r * r) / 2.0))
        if N0 not in cache:
            thr = N0 / (4.0 * n) if transverse == "N0" else N / (4.0 * n)
            cache[N0] = _point_dj_I(n, N, N0, thr)
        I = cache[N0]
        if not I:
            continue
        first = np.array(sorted({a[0] for a in I}), dtype=np.int64)
        rows, tab = hermite_table(first, [r])
        val = dict(zip(rows.tolist(), tab[:, 0]))
        bound = 0.25 / math.sqrt(lam * lam - r * r)
        J = [a for a in I if val[a[0]] > bound]
        if best is None or len(J) > len(best[3]):
            best = (len(J), float(r), I, J, N0)
    if best is None:
        raise ConstructionError(f"empty index set for Int({j})")
    _, r_used, I, J, N0 = best
    if 8 * len(J) < len(I):
        raise ConstructionError(f"|J|={len(J)} < |I|/8 with |I|={len(I)}")
    coefs = [_transverse_sign(a[1:]) for a in J]
    meta = {"construction": "point_dj", "j": j, "r": r_used, "N0": N0, "I_size": len(I)}
    return ModeSum(scale, J, coefs, meta), r_used


def cross_phase_derivative(mu: float, x):
    """d/dmu d/dx of s^-_{lam(mu)}(x) with lam(mu)^2 = 2 mu^2 - 1 (mu^2 = 1 + k)."""
    lam2 = 2.0 * mu * mu - 1.0
    return 2.0 * mu / np.sqrt(lam2 - np.asarray(x, dtype=float) ** 2)


def degree_phase(k: int, x: float) -> float:
    """Phase of hhat_k at x in the leading model, s^-(x) - k pi/2, mod 2 pi."""
    lam_k = math.sqrt(2 * k + 1)
    return float((s_minus(lam_k, x) - 0.5 * math.pi * k) % (2.0 * math.pi))


def tube_dj(scale: SpectralScale, j: int, c: float = 0.25, bins: int = 8) -> ModeSum:
    """Sum concentrating in {x in Int(j); |x'| <= 2^{-j/2}} with coherent phases.

    alpha' ranges over even vectors with |alpha'_i - 2^j| <= c 2^j.  The
    first-axis phases at the midpoint of Int(j) are binned and the fullest
    bin is kept.
    """
    n, N = scale.n, scale.N
    if n < 2:
        raise ValueError("tube concentration needs n >= 2")
    if not 0 < c <= 0.25:
        raise ValueError("c must lie in (0, 1/4]")
    if bins < 4:
        raise ValueError("bins must be >= 4")
    lo, hi = radial_interval(Int(j), scale)
    centre = 2 ** j
    window = [a for a in range(0, N + 1, 2) if abs(a - centre) <= c * centre]
    if not window:
        raise ValueError(f"no even transverse degree within {c}*2^{j} of 2^{j}")
    I = []
    for rest in _cartesian(window, n - 1):
        s = sum(rest)
        if s <= N:
            I.append((N - s,) + rest)
    if not I:
        raise ValueError("transverse degrees exceed N")
    r_ref = 0.5 * (lo + hi)
    phases = {}
    for a in I:
        k = a[0]
        if k not in phases:
            if r_ref >= math.sqrt(2 * k + 1):
                raise ConstructionError(f"reference point {r_ref} is beyond the turning point of degree {k}")
            phases[k] = degree_phase(k, r_ref)
    which = {k: min(int(ph / (2 * math.pi) * bins), bins - 1) for k, ph in phases.items()}
    counts = np.zeros(bins, dtype=int)
    for a in I:
        counts[which[a[0]]] += 1
    keep = int(np.argmax(counts))
    J = [a for a in I if which[a[0]] == keep]
    coefs = [_transverse_sign(a[1:]) for a in J]
    meta = {"construction": "tube_dj", "j": j, "c": c, "bins": bins, "r_ref": r_ref, "I_size": len(I)}
    return ModeSum(scale, J, coefs, meta)


def _cartesian(values: Sequence[int], reps: int) -> Iterator[tuple]:
    if reps == 0:
        yield ()
        return
    for v in values:
        for tail in _cartesian(values, reps - 1):
            yield (v,) + tail


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

@dataclass
class TensorGrid:
    axes: list
    weights: list | None = None

    @property
    def shape(self) -> tuple:
        return tuple(len(a) for a in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def weight_mesh(self) -> np.ndarray:
        w = np.ones(self.shape)
        for i, wa in enumerate(self.weights):
            shape = [1] * len(self.axes)
            shape[i] = -1
            w = w * np.reshape(wa, shape)
        return w


def _axis_tables(v: ModeSum, coords: list, second: bool = False):
    idx = v.index_array()
    tabs, row_index, htabs = [], np.zeros_like(idx), []
    for i, xs in enumerate(coords):
        rows, t = hermite_table(idx[:, i], xs)
        tabs.append(t)
        row_index[:, i] = np.searchsorted(rows, idx[:, i])
        if second:
            # (-d^2/dx^2 + x^2) hhat_k per row, second derivative from the ladder identity
            h = np.empty_like(t)
            for r, k in enumerate(rows):
                h[r] = -hermite_second_derivs(int(k), xs) + xs * xs * t[r]
            htabs.append(h)
    return tabs, row_index, htabs


def _estimate_bytes(v: ModeSum, npts: int, axis_pts: Sequence[int]) -> int:
    idx = v.index_array()
    rows = [len(np.unique(idx[:, i])) for i in range(v.scale.n)] if len(v) else [0]
    return 8 * (sum(r * m for r, m in zip(rows, axis_pts)) + npts)


def _combine(tabs, row_index, coeffs, gather, chunk: int) -> np.ndarray:
    """Run the mode-sum kernel chunk by chunk; ``gather(i, sl)`` gives the
    column indices of axis ``i`` for the flat points in slice ``sl``."""
    n = len(tabs)
    maxrows = max(t.shape[0] for t in tabs)
    total = gather(None, None)
    out = np.empty(total)
    for start in range(0, total, chunk):
        sl = slice(start, min(start + chunk, total))
        m = sl.stop - sl.start
        stack = np.zeros((n, maxrows, m))
        for i in range(n):
            cols = gather(i, sl)
            stack[i, :tabs[i].shape[0]] = tabs[i][:, cols]
        _kernels.mode_sum(stack, row_index, coeffs, out[sl])
    return out


def evaluate_mode_sum(v: ModeSum, grid, memory_cap: int = DEFAULT_MEMORY_CAP, chunk: int = 8192) -> np.ndarray:
    """Values of ``v`` on a TensorGrid (returned with the grid's shape) or
    on a point cloud of shape (npts, n)."""
    return _evaluate(v, grid, memory_cap, chunk, second=False)[0]


def _evaluate(v: ModeSum, grid, memory_cap: int, chunk: int, second: bool):
    n = v.scale.n
    if isinstance(grid, TensorGrid):
        if len(grid.axes) != n:
            raise ValueError("grid dimension does not match the mode sum")
        coords = [np.asarray(a, dtype=float) for a in grid.axes]
        npts, shape = grid.size, grid.shape
        need = _estimate_bytes(v, npts, [len(c) for c in coords])
        unravel = None
    else:
        pts = np.asarray(grid, dtype=float)
        if pts.ndim == 1 and n == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[1] != n:
            raise ValueError(f"points must have shape (npts, {n})")
        coords = [pts[:, i] for i in range(n)]
        npts, shape = pts.shape[0], (pts.shape[0],)
        need = _estimate_bytes(v, npts, [npts] * n)
    if second:
        need *= 2
    if need > memory_cap:
        raise ResourceError(f"evaluation needs ~{need / 2**20:.0f} MiB, cap is {memory_cap / 2**20:.0f} MiB")
    if len(v) == 0:
        z = np.zeros(shape)
        return z, (z.copy() if second else None)

    tabs, row_index, htabs = _axis_tables(v, coords, second)

    if isinstance(grid, TensorGrid):
        def gather(i, sl):
            if i is None:
                return npts
            flat = np.arange(sl.start, sl.stop)
            return np.unravel_index(flat, shape)[i]
    else:
        def gather(i, sl):
            if i is None:
                return npts
            return np.arange(sl.start, sl.stop)

    coeffs = np.ascontiguousarray(v.coefficients)
    vals = _combine(tabs, row_index, coeffs, gather, chunk).reshape(shape)
    hv = None
    if second:
        hv = np.zeros(npts)
        for i in range(n):
            mixed = list(tabs)
            mixed[i] = htabs[i]
            hv = hv + _combine(mixed, row_index, coeffs, gather, chunk)
        hv = hv.reshape(shape)
    return vals, hv


def apply_H_residual(v: ModeSum, grid, memory_cap: int = DEFAULT_MEMORY_CAP) -> float:
    """max |(-Delta + |x|^2 - (n + 2N)) v| over the grid."""
    if len(v) == 0:
        return 0.0
    vals, hv = _evaluate(v, grid, memory_cap, 8192, second=True)
    return float(np.max(np.abs(hv - v.eigenvalue * vals)))


def write_field_csv(path, points: np.ndarray, values: np.ndarray) -> None:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{i + 1}" for i in range(pts.shape[1])] + ["value"])
        for row, val in zip(pts, np.ravel(values)):
            w.writerow([f"{c:.17g}" for c in row] + [f"{val:.17g}"])


# ---------------------------------------------------------------------------
# concentration sets and the predicted scalings
# ---------------------------------------------------------------------------

def _gl_panels(a: float, b: float, panels: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    grid = QuadratureGrid(np.linspace(a, b, panels + 1), order)
    return grid.nodes_weights()


def ball_quadrature(center, radius: float, lam: float, nodes_per_wavelength: float = 8.0,
                    order: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Polar product rule on a disc in R^2 (radial Gauss-Legendre, uniform angles)."""
    center = np.asarray(center, dtype=float)
    if center.size != 2:
        raise ValueError("ball_quadrature is two dimensional")
    waves = radius * lam / (2 * math.pi)
    panels = max(2, int(math.ceil(waves * nodes_per_wavelength / order)))
    r, wr = _gl_panels(0.0, radius, panels, order)
    m = max(32, int(math.ceil(2 * math.pi * waves * nodes_per_wavelength)))
    th = 2 * math.pi * np.arange(m) / m
    pts = np.stack([(center[0] + np.outer(r, np.cos(th))).ravel(),
                    (center[1] + np.outer(r, np.sin(th))).ravel()], axis=1)
    w = np.outer(wr * r, np.full(m, 2 * math.pi / m)).ravel()
    return pts, w


def _quadrant_tube(r_in: float, r_out: float, width: float, lam: float, nodes_per_wavelength: float,
                   order: int = 6):
    """Tensor rule on {x1 >= 0, 0 <= x2 <= width, r_in <= |x| <= r_out} (mask applied to weights)."""
    x1_lo = math.sqrt(max(r_in * r_in - width * width, 0.0))
    g1 = QuadratureGrid.for_interval(x1_lo, r_out, lam, nodes_per_wavelength, order)
    x1, w1 = g1.nodes_weights()
    panels2 = max(2, int(math.ceil(width * lam * nodes_per_wavelength / (2 * math.pi * order))))
    x2, w2 = _gl_panels(0.0, width, panels2, order)
    grid = TensorGrid([x1, x2], [w1, w2])
    rr = np.sqrt(x1[:, None] ** 2 + x2[None, :] ** 2)
    mask = (rr >= r_in) & (rr <= r_out)
    return grid, grid.weight_mesh() * mask


@dataclass
class ConcentrationReport:
    construction: str
    region: str
    l2_norm: float
    lp_norms: dict
    predicted_ratio_exponents: dict

    def __post_init__(self):
        if not self.l2_norm > 0:
            raise ValueError("l2_norm must be positive")

    def ratios(self) -> dict:
        return {p: v / self.l2_norm for p, v in self.lp_norms.items()}


def predicted_exponents(construction: str, p: float, n: int) -> tuple[float, float]:
    """(lam exponent, 2^j exponent) of the lower bound for ||v||_{L^p(set)} / ||v||_{L^2}."""
    ip = 0.0 if math.isinf(p) else 1.0 / p
    d = 0.5 - ip
    if construction == "tube_d0":
        return ip - 0.5, 0.0
    if construction == "point_d0":
        return n * d - 1.0, 0.0
    if construction == "point_dj":
        return n * d - 1.0, 1.0 - n * d
    if construction == "tube_dj":
        return ip - 0.5, (n + 1) / 4.0 - (n + 3) * ip / 2.0
    raise ValueError(f"unknown construction {construction!r}")


def concentration_report(v: ModeSum, ps: Sequence[float], nodes_per_wavelength: float = 8.0,
                         ball_c: float = 0.5, memory_cap: int = DEFAULT_MEMORY_CAP) -> ConcentrationReport:
    """L^p norms of ``v`` over the set its construction concentrates on (n = 2)."""
    name = v.meta.get("construction")
    scale = v.scale
    lam = scale.lam
    if scale.n != 2:
        raise ValueError("concentration sets are implemented for n = 2")
    if name == "tube_d0":
        lo, hi = radial_interval(Int(0), scale)
        grid, w = _quadrant_tube(lo, hi, 1.0, lam, nodes_per_wavelength)
        vals, w, region = evaluate_mode_sum(v, grid, memory_cap), 4 * w, "T & Int(0)"
    elif name == "tube_dj":
        j = v.meta["j"]
        lo, hi = radial_interval(Int(j), scale)
        grid, w = _quadrant_tube(lo, hi, 2.0 ** (-j / 2), lam, nodes_per_wavelength)
        vals, w, region = evaluate_mode_sum(v, grid, memory_cap), 4 * w, f"T & Int({j})"
    elif name == "point_d0":
        pts, w = ball_quadrature([0.0, 0.0], 1.0 / lam, lam, nodes_per_wavelength)
        vals, region = evaluate_mode_sum(v, pts, memory_cap), "B(0, 1/lam)"
    elif name == "point_dj":
        j, r = v.meta["j"], v.meta["r"]
        rad = ball_c * 2.0 ** j / lam
        pts, w = ball_quadrature([r, 0.0], rad, lam, nodes_per_wavelength)
        vals, region = evaluate_mode_sum(v, pts, memory_cap), f"B({r:.6g} e1, {rad:.6g})"
    else:
        raise ValueError(f"mode sum has no known construction: {name!r}")
    vals = np.ravel(vals)
    w = np.ravel(w)
    lp = {p: (float(np.max(np.abs(vals[w > 0]))) if math.isinf(p) else lp_from_samples(vals, w, p)) for p in ps}
    pred = {p: predicted_exponents(name, p, scale.n) for p in ps}
    return ConcentrationReport(name, region, v.l2_norm(), lp, pred)


def build(construction: str, scale: SpectralScale, j: int = 1, **kw) -> ModeSum:
    if construction == "tube_d0":
        return tube_d0(scale)
    if construction == "point_d0":
        return point_d0(scale)
    if construction == "point_dj":
        return point_dj(scale, j, **kw)[0]
    if construction == "tube_dj":
        return tube_dj(scale, j, **kw)
    raise ValueError(f"unknown construction {construction!r}")


CONSTRUCTIONS = ("tube_d0", "point_d0", "point_dj", "tube_dj")
