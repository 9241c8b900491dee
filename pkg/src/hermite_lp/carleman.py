"""Weight profiles a, b for the conjugated-operator L^2 estimate.

Required of a (as a function of y):

* a nondecreasing, a = 0 on (-inf, -2], |d^k a| <~ (1+|y|)^{1/2-k};
* b - 2 a''_- >~ (1+|y|) for y < 1 and eps_k y^{-3/2} on [2^k, 2^{k+1}];
* a' - y b    >~ (1+y^2) for y < 1 and eps_k y^{-1/2} on [2^k, 2^{k+1}].

Construction (y >= 0): a' = d a'_0 with a'_0 = (1+y^2)^{-1/4} and a
nondecreasing d in [1/2, 3/2] whose logarithmic derivative follows the
sequence eps, and b = -a'' + a' / (2 sqrt(1+y^2)).  Then both margins are
driven by

    a' + 2 y a'' = d (1+y^2)^{-5/4} + 2 y a'_0 d',   2 y d' ~ 2 kappa eps_k.

For y < 0, a' is cut off smoothly to vanish on (-inf, -2] and b is blended
into c_b (1+|y|).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .quadrature import gauss_legendre


class GridError(ValueError):
    pass


# ---------------------------------------------------------------------------
# the sequence eps_k
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EpsSequence:
    """eps[k-1] = eps_k, k = 1..K."""

    eps: tuple

    def __post_init__(self):
        e = tuple(float(v) for v in self.eps)
        object.__setattr__(self, "eps", e)
        if not e:
            raise ValueError("empty sequence")
        a = np.array(e)
        if np.any(a <= 0):
            raise ValueError("eps_k must be positive")
        if a.sum() > 1 + 1e-12:
            raise ValueError(f"sum eps_k = {a.sum()} exceeds 1")
        r = a[1:] / a[:-1]
        if np.any(r < 0.5 - 1e-12) or np.any(r > 2 + 1e-12):
            raise ValueError("eps is not slowly varying (ratios outside [1/2, 2])")

    @property
    def K(self) -> int:
        return len(self.eps)

    def __getitem__(self, k: int) -> float:
        """eps_k, with eps_0 read as eps_1 (covers the block [1, 2))."""
        return self.eps[max(k, 1) - 1]

    @property
    def tail(self) -> float:
        return 1.0 - float(sum(self.eps))

    def floor_constant(self) -> float:
        """min_k eps_k 2^{k/2}: the constant c in eps_k >= c 2^{-k/2}."""
        k = np.arange(1, self.K + 1)
        return float(np.min(np.array(self.eps) * 2.0 ** (k / 2)))

    @classmethod
    def _normalised(cls, raw) -> "EpsSequence":
        raw = np.asarray(raw, dtype=float)
        return cls(tuple(raw / raw.sum()))

    @classmethod
    def default(cls, K: int = 9) -> "EpsSequence":
        k = np.arange(1, K + 1)
        return cls._normalised(2.0 ** (-k / 2))

    @classmethod
    def block_targeted(cls, K: int, k0: int) -> "EpsSequence":
        """Peak at k0, geometric tails, never below the 2^{-k/2} profile."""
        k = np.arange(1, K + 1)
        return cls._normalised(np.maximum(2.0 ** (-k / 2), 2.0 ** (-np.abs(k - k0))))

    @classmethod
    def for_block(cls, lam: float, j: int, K: int = 9) -> "EpsSequence":
        """Targets the block with 2^{k+2j} ~ lam^{4/3}."""
        k0 = int(round((4.0 / 3.0) * math.log2(lam) - 2 * j))
        return cls.block_targeted(K, min(max(k0, 1), K))

    def smooth(self, t):
        """C^2 interpolant in t = log2(y): cubic B-splines centred on block midpoints."""
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        ks = np.arange(0, self.K + 3)
        for k in ks:
            c = self[min(k, self.K)]
            out += c * _bspline3(t - (k + 0.5))
        return out

    def smooth_deriv(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for k in range(0, self.K + 3):
            out += self[min(k, self.K)] * _bspline3_deriv(t - (k + 0.5))
        return out


def _bspline3(u):
    a = np.abs(u)
    return np.where(a < 1, 2.0 / 3.0 - a ** 2 + 0.5 * a ** 3, np.where(a < 2, (2 - a) ** 3 / 6.0, 0.0))


def _bspline3_deriv(u):
    a = np.abs(u)
    s = np.sign(u)
    return s * np.where(a < 1, -2 * a + 1.5 * a ** 2, np.where(a < 2, -0.5 * (2 - a) ** 2, 0.0))


# ---------------------------------------------------------------------------
# smooth steps
# ---------------------------------------------------------------------------

def _step(s):
    """C^3 step: 0 for s <= 0, 1 for s >= 1."""
    s = np.clip(s, 0.0, 1.0)
    return s ** 4 * (35 - 84 * s + 70 * s ** 2 - 20 * s ** 3)


def _step_d1(s):
    inside = (s > 0) & (s < 1)
    s = np.clip(s, 0.0, 1.0)
    return np.where(inside, 140 * s ** 3 * (1 - s) ** 3, 0.0)


def _step_d2(s):
    inside = (s > 0) & (s < 1)
    s = np.clip(s, 0.0, 1.0)
    return np.where(inside, 420 * s ** 2 * (1 - s) ** 2 * (1 - 2 * s), 0.0)


# ---------------------------------------------------------------------------
# a'_0 and its derivatives
# ---------------------------------------------------------------------------

def a0_prime(y):
    y = np.asarray(y, dtype=float)
    return (1 + y * y) ** -0.25


def a0_second(y):
    y = np.asarray(y, dtype=float)
    return -0.5 * y * (1 + y * y) ** -1.25


def a0_third(y):
    y = np.asarray(y, dtype=float)
    return (1 + y * y) ** -2.25 * (0.75 * y * y - 0.5)


def governing_quantities(y):
    """(a'_0 + 2 y a''_0, a'_0 - 2 y a''_0) = ((1+y^2)^{-5/4}, (1+2y^2)(1+y^2)^{-5/4})."""
    return a0_prime(y) + 2 * y * a0_second(y), a0_prime(y) - 2 * y * a0_second(y)


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

@dataclass
class WeightFunctions:
    y_grid: np.ndarray
    a: np.ndarray
    a_prime: np.ndarray
    a_second: np.ndarray
    a_third: np.ndarray
    b: np.ndarray
    d: np.ndarray
    eps: EpsSequence
    kappa: float
    c_b: float
    meta: dict = field(default_factory=dict)

    @property
    def a_second_neg(self) -> np.ndarray:
        return np.maximum(-self.a_second, 0.0)


def default_y_grid(y_max: float = 1000.0, per_octave: int = 200) -> np.ndarray:
    octaves = math.log2(y_max)
    pos = np.geomspace(1.0, y_max, int(math.ceil(octaves * per_octave)) + 1)
    mid = np.linspace(-1.0, 1.0, 2001)[1:-1]
    return np.concatenate([-pos[::-1], mid, pos])


class _Profile:
    """Closed-form d' and d'' plus accurate cumulative integrals."""

    def __init__(self, eps: EpsSequence, kappa: float):
        self.eps = eps
        self.kappa = kappa

    def ramp(self, y):
        return _step(np.asarray(y, dtype=float) - 1.0)

    def d_prime(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        pos = y > 1.0
        yp = y[pos]
        out[pos] = self.kappa * self.eps.smooth(np.log2(yp)) * _step(yp - 1.0) / yp
        return out

    def d_second(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        pos = y > 1.0
        yp = y[pos]
        t = np.log2(yp)
        e, de = self.eps.smooth(t), self.eps.smooth_deriv(t)
        r, dr = _step(yp - 1.0), _step_d1(yp - 1.0)
        out[pos] = self.kappa * (de / (yp * math.log(2)) * r / yp + e * dr / yp - e * r / yp ** 2)
        return out


def _cumulative(f, nodes: np.ndarray, order: int = 8) -> np.ndarray:
    """int_{nodes[0]}^{nodes[i]} f, by Gauss-Legendre on every cell."""
    t, w = gauss_legendre(order)
    a, b = nodes[:-1, None], nodes[1:, None]
    half = 0.5 * (b - a)
    x = a + half * (t[None, :] + 1)
    cells = np.sum(half * w[None, :] * f(x.ravel()).reshape(x.shape), axis=1)
    return np.concatenate([[0.0], np.cumsum(cells)])


def build_weights(eps: EpsSequence, y_grid=None, c_b: float = 4.0, kappa: float | None = None) -> WeightFunctions:
    """Sample a, a', a'', a''', b and d on ``y_grid``."""
    y = default_y_grid() if y_grid is None else np.asarray(y_grid, dtype=float)
    if np.any(np.diff(y) <= 0):
        raise GridError("y_grid must be strictly increasing")
    _check_resolution(y, eps)
    e_max = float(np.max(eps.eps))
    if kappa is None:
        # keeps a'' < 0 for y >= 1 and the total rise of d below 1
        mass = sum(eps[min(k, eps.K)] for k in range(0, eps.K + 3))
        kappa = min(0.1 / e_max, 0.95 / (math.log(2) * mass))
    prof = _Profile(eps, kappa)

    # d(y) = 1/2 + int_0^y d'  (d' vanishes below y = 1)
    knots = np.unique(np.concatenate([[0.0, 1.0, 2.0], np.geomspace(1.0, max(2.0, y.max(), 2.0 ** (eps.K + 2)), 4000)]))

    def d_of(v):
        v = np.asarray(v, dtype=float)
        out = np.full_like(v, 0.5)
        pos = v > 0
        if np.any(pos):
            cum = _cumulative(prof.d_prime, knots)
            vp = np.minimum(v[pos], knots[-1])
            i = np.clip(np.searchsorted(knots, vp, side="right") - 1, 0, knots.size - 2)
            base = cum[i]
            lo = knots[i]
            # remaining piece [knots[i], v] by Gauss-Legendre
            tt, ww = gauss_legendre(8)
            half = 0.5 * (vp - lo)
            xs = lo[:, None] + half[:, None] * (tt[None, :] + 1)
            extra = np.sum(half[:, None] * ww[None, :] * prof.d_prime(xs.ravel()).reshape(xs.shape), axis=1)
            out[pos] = 0.5 + base + extra
        return out

    d0 = 0.5

    def a_prime_of(v):
        v = np.asarray(v, dtype=float)
        chi = _step(v + 2.0)
        return np.where(v >= 0, d_of(v) * a0_prime(v), d0 * a0_prime(v) * chi)

    d = d_of(y)
    dp = prof.d_prime(y)
    dpp = prof.d_second(y)
    chi, chi1, chi2 = _step(y + 2.0), _step_d1(y + 2.0), _step_d2(y + 2.0)
    a1p, a2p, a3p = d * a0_prime(y), dp * a0_prime(y) + d * a0_second(y), \
        dpp * a0_prime(y) + 2 * dp * a0_second(y) + d * a0_third(y)
    a1n = d0 * a0_prime(y) * chi
    a2n = d0 * (a0_second(y) * chi + a0_prime(y) * chi1)
    a3n = d0 * (a0_third(y) * chi + 2 * a0_second(y) * chi1 + a0_prime(y) * chi2)
    nonneg = y >= 0
    a1 = np.where(nonneg, a1p, a1n)
    a2 = np.where(nonneg, a2p, a2n)
    a3 = np.where(nonneg, a3p, a3n)

    # a = int_{-2}^y a', zero below -2
    anchor = np.unique(np.concatenate([[-2.0], y[y > -2.0]]))
    cum = _cumulative(a_prime_of, anchor)
    a = np.zeros_like(y)
    live = y > -2.0
    a[live] = cum[np.searchsorted(anchor, y[live])]

    b_plus = -a2 + a1 / (2 * np.sqrt(1 + y * y))
    b_minus = c_b * (1 + np.abs(y))
    s = _step(y + 1.0)
    b = np.where(y >= 0, b_plus, s * b_plus + (1 - s) * b_minus)
    meta = {"d0": d0, "d_inf": float(d_of(np.array([knots[-1]]))[0])}
    return WeightFunctions(y, a, a1, a2, a3, b, d, eps, kappa, c_b, meta)


def _check_resolution(y: np.ndarray, eps: EpsSequence) -> None:
    near0 = y[(y > -1) & (y < 1)]
    if near0.size < 20:
        raise GridError("y_grid must be refined near 0 (at least 20 points in (-1, 1))")
    for k in range(0, eps.K + 1):
        lo, hi = 2.0 ** k, 2.0 ** (k + 1)
        if hi > y.max():
            break
        if np.count_nonzero((y >= lo) & (y < hi)) < 16:
            raise GridError(f"block [{lo:g}, {hi:g}) has fewer than 16 grid points")


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------

@dataclass
class LabMargins:
    """Minimum ratio (quantity / target) in each regime."""

    first: dict
    second: dict
    inverse_y: float

    @property
    def min_first(self) -> float:
        return min(self.first.values())

    @property
    def min_second(self) -> float:
        return min(self.second.values())

    @property
    def all_positive(self) -> bool:
        return self.min_first > 0 and self.min_second > 0 and self.inverse_y > 0

    def as_dict(self) -> dict:
        out = {f"b-2a2neg[{k}]": v for k, v in self.first.items()}
        out.update({f"a1-yb[{k}]": v for k, v in self.second.items()})
        out["(a1-yb)*|y|"] = self.inverse_y
        return out


def pointwise_margins(w: WeightFunctions) -> tuple[np.ndarray, np.ndarray]:
    """(b - 2a''_-)/target and (a' - y b)/target at every grid point (NaN past block K)."""
    y = w.y_grid
    first = w.b - 2 * w.a_second_neg
    second = w.a_prime - y * w.b
    t1 = np.full_like(y, np.nan)
    t2 = np.full_like(y, np.nan)
    small = y < 1
    t1[small] = 1 + np.abs(y[small])
    t2[small] = 1 + y[small] ** 2
    for k in range(0, w.eps.K + 1):
        blk = (y >= 2.0 ** k) & (y < 2.0 ** (k + 1))
        t1[blk] = w.eps[k] * y[blk] ** -1.5
        t2[blk] = w.eps[k] * y[blk] ** -0.5
    return first / t1, second / t2


def check_lab_inequalities(w: WeightFunctions, eps: EpsSequence | None = None) -> LabMargins:
    eps = w.eps if eps is None else eps
    y = w.y_grid
    m1, m2 = pointwise_margins(w)
    first, second = {}, {}
    # b equals c_b (1+|y|) exactly for y <= -1 and is blended on (-1, 0)
    for name, sel in (("y<=-1", y <= -1), ("-1<y<1", (y > -1) & (y < 1))):
        if np.any(sel):
            first[name] = float(np.min(m1[sel]))
            second[name] = float(np.min(m2[sel]))
    for k in range(0, eps.K + 1):
        blk = (y >= 2.0 ** k) & (y < 2.0 ** (k + 1))
        if np.any(blk):
            first[f"k={k}"] = float(np.min(m1[blk]))
            second[f"k={k}"] = float(np.min(m2[blk]))
    big = y >= 1
    inv = float(np.min((w.a_prime[big] - y[big] * w.b[big]) * y[big])) if np.any(big) else math.inf
    return LabMargins(first, second, inv)


def _fd(values: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.gradient(values, y, edge_order=2)


def check_derivative_bounds(w: WeightFunctions, orders: int = 3) -> tuple[float, float]:
    """Worst ratios |d^k a| / (1+|y|)^{1/2-k} and
    |d^k b| / (<y>_- <y>_+^{-3/2} (1+|y|)^{-k}), k <= orders, by finite differences."""
    y = w.y_grid
    ay = 1 + np.abs(y)
    a_derivs = [w.a, w.a_prime]
    while len(a_derivs) <= orders:
        a_derivs.append(_fd(a_derivs[-1], y))
    b_derivs = [w.b]
    while len(b_derivs) <= orders:
        b_derivs.append(_fd(b_derivs[-1], y))
    # finite differences lose accuracy at the two ends of the grid
    core = slice(4, -4)
    abd = max(float(np.max(np.abs(a_derivs[k][core]) / ay[core] ** (0.5 - k))) for k in range(orders + 1))
    env = (1 + np.maximum(-y, 0)) * (1 + np.maximum(y, 0)) ** -1.5
    bbd = max(float(np.max(np.abs(b_derivs[k][core]) / (env[core] * ay[core] ** -k))) for k in range(orders + 1))
    return abd, bbd


def write_weights_csv(path, w: WeightFunctions) -> None:
    m1, m2 = pointwise_margins(w)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["y", "a_prime", "a_second", "b", "margin_first", "margin_second"])
        for row in zip(w.y_grid, w.a_prime, w.a_second, w.b, m1, m2):
            out.writerow([f"{v:.17g}" for v in row])
