"""Normalised Hermite functions, their derivatives and the WKB model.

The functions evaluated here are the L^2-normalised eigenfunctions of the
one dimensional operator -d^2/dx^2 + x^2 with eigenvalue 2k + 1,

    hhat_k(x) = H_k(x) exp(-x^2/2) / sqrt(2^k k! sqrt(pi)).

They are produced by the normalised three-term recurrence

    hhat_{k+1} = x sqrt(2/(k+1)) hhat_k - sqrt(k/(k+1)) hhat_{k-1},

started from hhat_0 = pi^{-1/4} exp(-x^2/2) held in scaled form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import _kernels
from .scaled import ScaledReal, scaled_array_to_float

Branch = Literal["oscillatory", "airy", "exterior"]


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class CalibrationError(RuntimeError):
    pass


def _check_x(x) -> np.ndarray:
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(xs)):
        raise DomainError("evaluation points must be finite")
    return xs


def _check_k(k: int) -> int:
    if int(k) != k or k < 0:
        raise DomainError(f"degree must be a nonnegative integer, got {k!r}")
    return int(k)


# ---------------------------------------------------------------------------
# grid evaluation
# ---------------------------------------------------------------------------

def hermite_table_scaled(ks, x):
    """Mantissas and exponents of hhat_k(x) for every k in ``ks``.

    Returns ``(ks_sorted, mantissa, exp2)`` with arrays of shape
    (len(ks_sorted), len(x)).  Cost is O(max(ks) * len(x)).
    """
    xs = _check_x(x)
    rows = np.unique(np.asarray(ks, dtype=np.int64))
    if rows.size == 0:
        raise DomainError("no degrees requested")
    if rows[0] < 0:
        raise DomainError("degrees must be nonnegative")
    kmax = int(rows[-1])
    up, down = _kernels.recurrence_coefficients(kmax)
    out_m = np.zeros((rows.size, xs.size))
    out_e = np.zeros((rows.size, xs.size), dtype=np.int64)
    _kernels.hermite_rows(np.ascontiguousarray(xs), rows, kmax, up, down, out_m, out_e)
    return rows, out_m, out_e


def hermite_table(ks, x) -> tuple[np.ndarray, np.ndarray]:
    """Float table of hhat_k(x); entries below the double range become 0."""
    rows, m, e = hermite_table_scaled(ks, x)
    return rows, scaled_array_to_float(m, e)


def hermite_values(k: int, x) -> np.ndarray:
    """hhat_k at every point of ``x`` as floats."""
    k = _check_k(k)
    _, table = hermite_table([k], x)
    return table[0]


def hermite_values_and_derivs(k: int, x) -> tuple[np.ndarray, np.ndarray]:
    """hhat_k and hhat_k' at the points ``x`` (floats)."""
    k = _check_k(k)
    xs = _check_x(x)
    if k == 0:
        v = hermite_values(0, xs)
        return v, -xs * v
    _, t = hermite_table([k - 1, k], xs)
    return t[1], math.sqrt(2.0 * k) * t[0] - xs * t[1]


def hermite_second_derivs(k: int, x) -> np.ndarray:
    """hhat_k'' from the ladder identity applied twice.

    hhat_k'' = 2 sqrt(k(k-1)) hhat_{k-2} - 2 x sqrt(2k) hhat_{k-1} + (x^2 - 1) hhat_k;
    this does not use the eigenvalue equation, so it can be used to test it.
    """
    k = _check_k(k)
    xs = _check_x(x)
    ks = [max(k - 2, 0), max(k - 1, 0), k]
    rows, t = hermite_table(ks, xs)
    lookup = {int(r): t[i] for i, r in enumerate(rows)}
    hk = lookup[k]
    out = (xs * xs - 1.0) * hk
    if k >= 1:
        out = out - 2.0 * xs * math.sqrt(2.0 * k) * lookup[k - 1]
    if k >= 2:
        out = out + 2.0 * math.sqrt(k * (k - 1.0)) * lookup[k - 2]
    return out


# ---------------------------------------------------------------------------
# single-point, ScaledReal interface
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HermiteSequence:
    """hhat_0(x), ..., hhat_{k_max}(x) at one point, in scaled form."""

    x: float
    k_max: int
    mantissa: np.ndarray
    exp2: np.ndarray

    def __len__(self) -> int:
        return self.k_max + 1

    def __getitem__(self, k: int) -> ScaledReal:
        if k < 0:
            k += self.k_max + 1
        return ScaledReal(float(self.mantissa[k]), int(self.exp2[k]))

    @property
    def values(self) -> list[ScaledReal]:
        return [self[k] for k in range(self.k_max + 1)]

    def as_float(self) -> np.ndarray:
        return scaled_array_to_float(self.mantissa, self.exp2)

    def log_abs(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return (self.exp2 + np.log2(np.abs(self.mantissa))) * math.log(2.0)

    def mirrored(self) -> "HermiteSequence":
        """The sequence at -x, obtained from parity (no re-evaluation)."""
        signs = np.where(np.arange(self.k_max + 1) % 2 == 0, 1.0, -1.0)
        return HermiteSequence(-self.x, self.k_max, self.mantissa * signs, self.exp2.copy())


def hermite_batch(k_max: int, x: float) -> HermiteSequence:
    k_max = _check_k(k_max)
    xs = _check_x(x)
    if xs.size != 1:
        raise DomainError("hermite_batch takes a single point; use hermite_table for grids")
    _, m, e = hermite_table_scaled(np.arange(k_max + 1), xs)
    mant, ex = np.frexp(m[:, 0])
    mant = 2.0 * mant
    ex = np.where(mant == 0.0, 0, e[:, 0] + ex.astype(np.int64) - 1)
    return HermiteSequence(float(xs[0]), k_max, mant, ex.astype(np.int64))


def hermite_eval(k: int, x: float) -> ScaledReal:
    k = _check_k(k)
    _, m, e = hermite_table_scaled([k], _check_x(x)[:1])
    return ScaledReal(float(m[0, 0]), int(e[0, 0]))


def hermite_deriv(k: int, x: float) -> ScaledReal:
    """hhat_k'(x) = sqrt(2k) hhat_{k-1}(x) - x hhat_k(x), in scaled form."""
    k = _check_k(k)
    xs = _check_x(x)[:1]
    xv = float(xs[0])
    if k == 0:
        return hermite_eval(0, xv) * (-xv)
    rows, m, e = hermite_table_scaled([k - 1, k], xs)
    h_prev = ScaledReal(float(m[0, 0]), int(e[0, 0]))
    h_k = ScaledReal(float(m[1, 0]), int(e[1, 0]))
    return h_prev * math.sqrt(2.0 * k) - h_k * xv


# ---------------------------------------------------------------------------
# phases and the WKB model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TurningData:
    k: int

    @property
    def lam(self) -> float:
        return math.sqrt(2 * self.k + 1)

    @property
    def airy_halfwidth(self) -> float:
        return self.lam ** (-1.0 / 3.0)


def s_minus(lam: float, x):
    """Oscillatory phase: integral of sqrt(lam^2 - t^2) from 0 to x, |x| <= lam."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(np.abs(x_arr) > lam * (1 + 1e-14)):
        raise DomainError("s_minus requires |x| <= lambda")
    u = np.clip(x_arr / lam, -1.0, 1.0)
    val = 0.5 * (x_arr * np.sqrt(np.maximum(lam * lam - x_arr * x_arr, 0.0)) + lam * lam * np.arcsin(u))
    return float(val) if np.ndim(val) == 0 else val


def s_plus(lam: float, x):
    """Decay phase: integral of sqrt(t^2 - lam^2) from lam to x, x >= lam."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < lam * (1 - 1e-14)):
        raise DomainError("s_plus requires x >= lambda")
    x_arr = np.maximum(x_arr, lam)
    root = np.sqrt(x_arr * x_arr - lam * lam)
    val = 0.5 * (x_arr * root - lam * lam * np.log((x_arr + root) / lam))
    return float(val) if np.ndim(val) == 0 else val


def branch_of(k: int, x: float) -> Branch:
    td = TurningData(k)
    d = abs(x) - td.lam
    if d < -td.airy_halfwidth:
        return "oscillatory"
    if d > td.airy_halfwidth:
        return "exterior"
    return "airy"


def error_envelope(lam: float, x):
    """|x^2 - lam^2|^{-1/2} ||x| - lam|^{-1}, the size of the WKB remainder."""
    x_arr = np.abs(np.asarray(x, dtype=float))
    val = np.abs(x_arr * x_arr - lam * lam) ** -0.5 / np.abs(x_arr - lam)
    return float(val) if np.ndim(val) == 0 else val


LEADING_AMPLITUDE = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class WkbModel:
    """Leading WKB term for one degree and one branch.

    Oscillatory: amplitude * (lam^2 - x^2)^{-1/4} * cos(s^- + phase) for even
    k (sin for odd k).  Exterior: amplitude * exp(-s^+) |x^2 - lam^2|^{-1/4}.
    """

    k: int
    amplitude: float
    phase_offset: float
    branch: Branch
    residual: float = 0.0

    @property
    def lam(self) -> float:
        return math.sqrt(2 * self.k + 1)


def leading_model(k: int, branch: Branch = "oscillatory") -> WkbModel:
    """Uncalibrated model with the textbook constants."""
    if branch == "oscillatory":
        amp = LEADING_AMPLITUDE * (-1) ** (k // 2)
        return WkbModel(k, amp, 0.0, branch)
    if branch == "exterior":
        return WkbModel(k, 0.5 * LEADING_AMPLITUDE, 0.0, branch)
    return WkbModel(k, 1.0, 0.0, "airy")


def _trig(k: int, phase):
    return np.cos(phase) if k % 2 == 0 else np.sin(phase)


def wkb_eval(k: int, x: float, model: WkbModel) -> tuple[ScaledReal, float]:
    """Evaluate the model at ``x``; returns (approximation, error envelope).

    In the Airy strip only the flat bound lam^{-1/6} is returned, with an
    O(1) envelope.
    """
    k = _check_k(k)
    if model.k != k:
        raise DomainError(f"model calibrated for k={model.k}, asked for k={k}")
    lam = model.lam
    where = branch_of(k, x)
    if where != model.branch:
        raise DomainError(f"x={x} lies in the {where} branch, model is {model.branch}")
    if where == "airy":
        return ScaledReal.from_float(lam ** (-1.0 / 6.0)), 1.0
    env = error_envelope(lam, x)
    if where == "oscillatory":
        g = (lam * lam - x * x) ** -0.25
        val = model.amplitude * g * float(_trig(k, s_minus(lam, x) + model.phase_offset))
        return ScaledReal.from_float(val), env
    ax = abs(x)
    sign = 1 if (x > 0 or k % 2 == 0) else -1
    log_mag = -s_plus(lam, ax) - 0.25 * math.log(ax * ax - lam * lam) + math.log(abs(model.amplitude))
    out = ScaledReal.from_log2(log_mag / math.log(2.0), sign * (1 if model.amplitude > 0 else -1))
    return out, env


def calibrate_wkb(k: int, branch: Branch = "oscillatory", samples: int = 4001) -> WkbModel:
    """Fit the WKB constants for degree ``k`` against the recurrence.

    Oscillatory branch: linear least squares on |x| <= lam/2 for the two
    coefficients of (lam^2 - x^2)^{-1/4} (cos s^-, sin s^-).  Exterior
    branch: log-domain mean on lam + 5 lam^{-1/3} <= x <= 1.5 lam.
    """
    k = _check_k(k)
    if k < 2:
        raise DomainError("calibration needs k >= 2")
    lam = math.sqrt(2 * k + 1)
    if branch == "oscillatory":
        xs = np.linspace(-0.5 * lam, 0.5 * lam, samples)
        g = (lam * lam - xs * xs) ** -0.25
        s = s_minus(lam, xs)
        basis = np.column_stack([g * np.cos(s), g * np.sin(s)])
        target = hermite_values(k, xs)
        gram = basis.T @ basis
        if np.linalg.cond(gram) > 1e12:
            raise CalibrationError("degenerate calibration window")
        coef, *_ = np.linalg.lstsq(basis, target, rcond=None)
        c_cos, c_sin = coef
        if k % 2 == 0:
            # A cos(s + phi) = A cos phi cos s - A sin phi sin s
            amp = math.copysign(math.hypot(c_cos, c_sin), c_cos)
            phase = math.atan2(-c_sin, c_cos) if c_cos > 0 else math.atan2(c_sin, -c_cos)
        else:
            # A sin(s + phi) = A cos phi sin s + A sin phi cos s
            amp = math.copysign(math.hypot(c_cos, c_sin), c_sin)
            phase = math.atan2(c_cos, c_sin) if c_sin > 0 else math.atan2(-c_cos, -c_sin)
        resid = float(np.sqrt(np.mean((basis @ coef - target) ** 2)) / np.sqrt(np.mean(target ** 2)))
        return WkbModel(k, amp, phase, "oscillatory", resid)
    if branch == "exterior":
        xs = np.linspace(lam + 5 * lam ** (-1 / 3), 1.5 * lam, 200)
        rows, m, e = hermite_table_scaled([k], xs)
        log_true = (e[0] + np.log2(np.abs(m[0]))) * math.log(2.0)
        log_model = -s_plus(lam, xs) - 0.25 * np.log(xs * xs - lam * lam)
        diff = log_true - log_model
        amp = math.exp(float(np.mean(diff)))
        return WkbModel(k, amp, 0.0, "exterior", float(np.std(diff)))
    raise DomainError("the Airy strip has no calibrated model")


def wkb_antinodes(model: WkbModel, x_lo: float, x_hi: float) -> np.ndarray:
    """Points in [x_lo, x_hi] (x >= 0) where the model's trig factor is +-1."""
    lam = model.lam
    shift = 0.0 if model.k % 2 == 0 else -0.5 * math.pi
    lo = s_minus(lam, x_lo) + model.phase_offset + shift
    hi = s_minus(lam, x_hi) + model.phase_offset + shift
    targets = np.arange(math.ceil(lo / math.pi), math.floor(hi / math.pi) + 1) * math.pi
    phase = targets - model.phase_offset - shift
    # invert s^- by Newton (s^-' = sqrt(lam^2 - x^2) > 0 on the window)
    x = np.interp(phase, [lo - model.phase_offset - shift, hi - model.phase_offset - shift], [x_lo, x_hi])
    for _ in range(50):
        f = s_minus(lam, x) - phase
        x = np.clip(x - f / np.sqrt(lam * lam - x * x), x_lo, x_hi)
        if np.max(np.abs(f), initial=0.0) < 1e-12:
            break
    return x
