"""Real numbers carried as ``mantissa * 2**exp2`` with |mantissa| in [1, 2).

High-degree Hermite functions leave the double range long before the
recurrence is finished (e^{-x^2/2} underflows at |x| ~ 38), so values are
tracked with an explicit binary exponent and renormalized after every
operation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import total_ordering


def _split(value: float) -> tuple[float, int]:
    if value == 0.0:
        return 0.0, 0
    if not math.isfinite(value):
        raise ValueError(f"cannot scale non-finite value {value!r}")
    m, e = math.frexp(value)
    return 2.0 * m, e - 1


@total_ordering
@dataclass(frozen=True)
class ScaledReal:
    mantissa: float
    exp2: int = 0

    def __post_init__(self):
        m, e = _split(float(self.mantissa))
        object.__setattr__(self, "mantissa", m)
        object.__setattr__(self, "exp2", 0 if m == 0.0 else int(self.exp2) + e)

    @classmethod
    def from_float(cls, value: float) -> "ScaledReal":
        return cls(float(value), 0)

    @classmethod
    def from_log2(cls, log2_abs: float, sign: int = 1) -> "ScaledReal":
        """Build ``sign * 2**log2_abs`` without forming the power."""
        e = math.floor(log2_abs)
        return cls(math.copysign(2.0 ** (log2_abs - e), sign), e)

    # -- inspection -----------------------------------------------------
    @property
    def sign(self) -> int:
        return 0 if self.mantissa == 0.0 else (1 if self.mantissa > 0 else -1)

    def is_zero(self) -> bool:
        return self.mantissa == 0.0

    def log2_abs(self) -> float:
        if self.mantissa == 0.0:
            return -math.inf
        return self.exp2 + math.log2(abs(self.mantissa))

    def log_abs(self) -> float:
        return self.log2_abs() * math.log(2.0)

    def __float__(self) -> float:
        # ldexp saturates to 0 / raises OverflowError outside double range
        return math.ldexp(self.mantissa, self.exp2)

    def __repr__(self) -> str:
        return f"ScaledReal({self.mantissa!r} * 2**{self.exp2})"

    # -- arithmetic -----------------------------------------------------
    @staticmethod
    def _coerce(other) -> "ScaledReal":
        if isinstance(other, ScaledReal):
            return other
        if isinstance(other, (int, float)):
            return ScaledReal(float(other), 0)
        return NotImplemented

    def __neg__(self) -> "ScaledReal":
        return ScaledReal(-self.mantissa, self.exp2)

    def __abs__(self) -> "ScaledReal":
        return ScaledReal(abs(self.mantissa), self.exp2)

    def __add__(self, other) -> "ScaledReal":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.mantissa == 0.0:
            return other
        if other.mantissa == 0.0:
            return self
        big, small = (self, other) if self.exp2 >= other.exp2 else (other, self)
        shift = small.exp2 - big.exp2
        if shift < -60:
            return big
        return ScaledReal(big.mantissa + math.ldexp(small.mantissa, shift), big.exp2)

    __radd__ = __add__

    def __sub__(self, other) -> "ScaledReal":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "ScaledReal":
        return (-self) + other

    def __mul__(self, other) -> "ScaledReal":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return ScaledReal(self.mantissa * other.mantissa, self.exp2 + other.exp2)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "ScaledReal":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if other.mantissa == 0.0:
            raise ZeroDivisionError("ScaledReal division by zero")
        return ScaledReal(self.mantissa / other.mantissa, self.exp2 - other.exp2)

    def __rtruediv__(self, other) -> "ScaledReal":
        return self._coerce(other) / self

    def sqrt(self) -> "ScaledReal":
        if self.mantissa < 0:
            raise ValueError("sqrt of negative ScaledReal")
        if self.mantissa == 0.0:
            return self
        m, e = self.mantissa, self.exp2
        if e % 2:
            m, e = 2.0 * m, e - 1
        return ScaledReal(math.sqrt(m), e // 2)

    # -- ordering: (sign, exp2, mantissa) lexicographic ----------------
    def _key(self) -> tuple:
        s = self.sign
        if s == 0:
            return (0, 0, 0.0)
        # larger exponent means larger magnitude; flip for negatives
        return (s, s * self.exp2, self.mantissa)

    def __eq__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self.mantissa == other.mantissa and self.exp2 == other.exp2

    def __lt__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._key() < other._key()

    def __hash__(self) -> int:
        return hash((self.mantissa, self.exp2))

    def isclose(self, other, rel: float = 1e-12) -> bool:
        other = self._coerce(other)
        diff = abs(self - other)
        scale = max(abs(self), abs(other))
        if scale.is_zero():
            return True
        return diff.log2_abs() - scale.log2_abs() <= math.log2(rel)


def scaled_array_to_float(mantissa, exp2):
    """Vectorised ``mantissa * 2**exp2`` (underflows quietly to zero)."""
    import numpy as np

    with np.errstate(under="ignore", over="raise"):
        return np.ldexp(np.asarray(mantissa, dtype=float), np.asarray(exp2, dtype=np.int64).astype(np.int32))
