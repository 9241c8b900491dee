"""L^2 localization, energy bounds, the weighted L^p left-hand sides and
log-log exponent fits over lam-sweeps."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .extremal import ModeSum, build, concentration_report, evaluate_mode_sum
from .hermite import DomainError, hermite_values, hermite_values_and_derivs
from .regions import (EXT, Int, SpectralScale, WeightedNormSpec, region_norms_1d, rho, valid_labels,
                      weighted_norm, whole_line_norms)

INF = math.inf


# ---------------------------------------------------------------------------
# L^2 localization and energy
# ---------------------------------------------------------------------------

def _hermite_pair(k: int):
    def val(x):
        return hermite_values(k, x)

    def der(x):
        return hermite_values_and_derivs(k, x)[1]

    return val, der


def l2_localization_profile(k: int, nodes_per_wavelength: float = 8.0) -> dict:
    """Per region: (||h_k||^2, ||h_k'||^2) on interior and boundary regions;
    (||(x^2 - lam^2) h_k||, ||(x^2 - lam^2)^{1/2} h_k'||) on the exterior."""
    if k < 16:
        raise DomainError("localization profile needs k >= 16")
    scale = SpectralScale(1, k)
    lam2 = scale.lam ** 2
    labels = valid_labels(scale)
    val, der = _hermite_pair(k)
    grid = dict(nodes_per_wavelength=nodes_per_wavelength)
    inner = [lab for lab in labels if lab != EXT]
    m = region_norms_1d(val, scale, inner, [2], parity="even", **grid)
    g = region_norms_1d(der, scale, inner, [2], parity="even", **grid)
    out = {lab: (m[(lab, 2)].value ** 2, g[(lab, 2)].value ** 2) for lab in inner}
    me = region_norms_1d(val, scale, [EXT], [2], weight=lambda r2: np.abs(r2 - lam2), parity="even", **grid)
    ge = region_norms_1d(der, scale, [EXT], [2], weight=lambda r2: np.sqrt(np.abs(r2 - lam2)), parity="even", **grid)
    out[EXT] = (me[(EXT, 2)].value, ge[(EXT, 2)].value)
    return out


def energy_bounds_check(k: int, nodes_per_wavelength: float = 8.0) -> tuple[float, float]:
    """(||h_k'|| / lam, ||((lam^2 - x^2)^2 + lam^{4/3})^{-1/4} h_k'||)."""
    if k < 0:
        raise DomainError("k must be nonnegative")
    lam = math.sqrt(2 * k + 1)
    _, der = _hermite_pair(k)
    e0 = whole_line_norms(der, lam, [2], parity="even", nodes_per_wavelength=nodes_per_wavelength)[2]

    def weighted(x):
        return der(x) * ((lam * lam - x * x) ** 2 + lam ** (4.0 / 3.0)) ** -0.25

    e1 = whole_line_norms(weighted, lam, [2], parity="even", nodes_per_wavelength=nodes_per_wavelength)[2]
    return e0 / lam, e1


# ---------------------------------------------------------------------------
# weighted left-hand sides
# ---------------------------------------------------------------------------

def critical_exponent(n: int) -> float:
    return INF if n == 1 else 2.0 * (n + 1) / (n - 1)


def _as_field(phi, n: int | None):
    """(callable, scale, parity) for an int degree, a ModeSum or (callable, scale)."""
    if isinstance(phi, (int, np.integer)):
        k = int(phi)
        return (lambda x: hermite_values(k, x)), SpectralScale(1, k), "even"
    if isinstance(phi, ModeSum):
        v = phi
        if v.scale.n == 1:
            return (lambda x: evaluate_mode_sum(v, np.asarray(x)[:, None])), v.scale, None
        return (lambda pts: evaluate_mode_sum(v, pts)), v.scale, None
    f, scale = phi
    return f, scale, None


def theorem31_lhs(phi, p: float, part: str, decay_power: float = 4.0, mc_samples: int = 20000,
                  seed: int = 0, nodes_per_wavelength: float = 8.0) -> float:
    """The weighted l^infty_lam L^p norm bounded by the main theorem.

    ``phi`` is a degree k (for hhat_k in 1D), a ModeSum, or a pair
    (callable, SpectralScale).
    """
    f, scale, parity = _as_field(phi, None)
    n = scale.n
    crit = critical_exponent(n)
    if part == "a" and not 2 <= p <= crit:
        raise ValueError(f"part a needs 2 <= p <= {crit}, got {p}")
    if part == "b" and not p >= crit:
        raise ValueError(f"part b needs p >= {crit}, got {p}")
    spec = WeightedNormSpec.from_theorem(p, n, part, decay_power)
    res = weighted_norm(f, spec, scale, parity=parity, grid=dict(nodes_per_wavelength=nodes_per_wavelength),
                        samples=mc_samples, seed=seed)
    return res.value


def reformulated_lhs(phi, p: float, j: int, nodes_per_wavelength: float = 8.0) -> tuple[float, float]:
    """(unweighted block form, weighted form) of the bound on Int(j), 1D.

    The block form is lam^{1/2-1/p} 2^{(j/2)(1-(n+3)d)} ||phi||_{L^p(Int j)}
    for p below the critical exponent and lam^{1-nd} 2^{-j(1-nd)} ||phi|| above
    it, with d = 1/2 - 1/p.  The negative 2^j power above the critical
    exponent is what the weighted form gives on Int(j), where
    <y>_+ ~ 4^{-j} lam^{4/3}.
    """
    f, scale, parity = _as_field(phi, None)
    if scale.n != 1:
        raise ValueError("reformulated_lhs is one dimensional")
    n = 1
    d = 0.5 - (0.0 if math.isinf(p) else 1.0 / p)
    lab = Int(j)
    plain = region_norms_1d(f, scale, [lab], [p], parity=parity, nodes_per_wavelength=nodes_per_wavelength)
    norm = plain[(lab, p)].value
    lam = scale.lam
    low = p <= critical_exponent(n) and not math.isinf(p)
    if low:
        block = lam ** d * 2.0 ** (0.5 * j * (1 - (n + 3) * d)) * norm
        spec = WeightedNormSpec.from_theorem(p, n, "a")
    else:
        block = lam ** (1 - n * d) * 2.0 ** (-j * (1 - n * d)) * norm
        spec = WeightedNormSpec.from_theorem(p, n, "b")
    w = weighted_norm(f, spec, scale, labels=[lab], parity=parity,
                      grid=dict(nodes_per_wavelength=nodes_per_wavelength))
    return block, w.value


# ---------------------------------------------------------------------------
# sweeps and fits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepPoint:
    N: int
    lam: float
    value: float


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    max_residual: float
    points: int


def sweep_fit(values: Sequence[SweepPoint]) -> FitResult:
    """Least-squares line through (log lam, log value)."""
    if len(values) < 4:
        raise ValueError("a fit needs at least 4 points")
    lam = np.array([v.lam for v in values], dtype=float)
    val = np.array([v.value for v in values], dtype=float)
    if np.any(np.diff(lam) <= 0):
        raise ValueError("lam must be strictly increasing")
    if np.any(~(val > 0)):
        raise DomainError("sweep values must be positive")
    X = np.column_stack([np.log(lam), np.ones_like(lam)])
    coef, *_ = np.linalg.lstsq(X, np.log(val), rcond=None)
    resid = np.log(val) - X @ coef
    return FitResult(float(coef[0]), float(coef[1]), float(np.max(np.abs(resid))), len(values))


def geometric_degrees(lo: int, hi: int, count: int, even: bool = False) -> list[int]:
    """``count`` degrees spaced geometrically in [lo, hi] (rounded, distinct)."""
    raw = np.geomspace(lo, hi, count)
    out = []
    for r in raw:
        k = 2 * int(round(r / 2)) if even else int(round(r))
        if not out or k > out[-1]:
            out.append(k)
    return out


def hermite_norm_sweep(ps: Sequence[float], Ns: Iterable[int], nodes_per_wavelength: float = 8.0) -> dict:
    """||hhat_N||_{L^p(R)} for each N and p (n = 1); one evaluation per N."""
    out = {p: [] for p in ps}
    for N in Ns:
        lam = math.sqrt(2 * N + 1)
        f = (lambda x, _N=N: hermite_values(_N, x))
        vals = whole_line_norms(f, lam, ps, parity="even", nodes_per_wavelength=nodes_per_wavelength)
        for p in ps:
            out[p].append(SweepPoint(int(N), lam, vals[p]))
    return out


def construction_sweep(name: str, ps: Sequence[float], Ns: Iterable[int], j: int = 1,
                       nodes_per_wavelength: float = 8.0) -> dict:
    """L^p(set) / L^2 ratios of one construction (n = 2) for each N."""
    out = {p: [] for p in ps}
    for N in Ns:
        scale = SpectralScale(2, N)
        v = build(name, scale, j=j)
        rep = concentration_report(v, ps, nodes_per_wavelength)
        for p, r in rep.ratios().items():
            out[p].append(SweepPoint(int(N), scale.lam, r))
    return out


def theorem31_sweep(p: float, part: str, Ns: Iterable[int], decay_power: float = 4.0) -> list[SweepPoint]:
    return [SweepPoint(int(N), math.sqrt(2 * N + 1), theorem31_lhs(int(N), p, part, decay_power)) for N in Ns]


def band(values: Iterable[SweepPoint]) -> float:
    v = np.array([s.value for s in values], dtype=float)
    return float(v.max() / v.min())


def write_sweep_csv(path, points: Sequence[SweepPoint]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["N", "lambda", "value"])
        for s in points:
            w.writerow([s.N, f"{s.lam:.17g}", f"{s.value:.17g}"])


def fit_summary(p: float, n: int, fit: FitResult, predicted: float | None = None) -> dict:
    if predicted is None:
        predicted = rho(p, n)
    return {"p": "inf" if math.isinf(p) else p, "n": n, "slope": fit.slope, "predicted": predicted,
            "residual": fit.max_residual, "intercept": fit.intercept, "points": fit.points}


def write_fit_json(path, summary: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")

