import math

import pytest
from hypothesis import given, strategies as st

from hermite_lp.scaled import ScaledReal

finite = st.floats(min_value=-1e150, max_value=1e150, allow_nan=False).filter(lambda v: v == 0 or abs(v) > 1e-150)


def test_normalised_mantissa():
    s = ScaledReal(12.0, 3)
    assert s.mantissa == 1.5 and s.exp2 == 6
    assert float(s) == 96.0
    assert ScaledReal(0.0, 17).exp2 == 0


def test_beyond_double_range():
    tiny = ScaledReal.from_log2(-5000.0)
    assert tiny.exp2 == -5000 and not tiny.is_zero()
    assert float(tiny) == 0.0
    prod = tiny * ScaledReal.from_log2(4990.0)
    assert math.isclose(float(prod), 2.0 ** -10)


def test_sqrt_and_division():
    s = ScaledReal.from_log2(-3001.0)
    r = s.sqrt()
    assert (r * r).isclose(s)
    with pytest.raises(ZeroDivisionError):
        s / 0.0
    with pytest.raises(ValueError):
        (-s).sqrt()


@given(finite, finite)
def test_arithmetic_matches_float(a, b):
    sa, sb = ScaledReal.from_float(a), ScaledReal.from_float(b)
    assert math.isclose(float(sa * sb), a * b, rel_tol=1e-15, abs_tol=0.0) or a * b == 0
    s = float(sa + sb)
    assert math.isclose(s, a + b, rel_tol=1e-14, abs_tol=1e-300 + 1e-15 * max(abs(a), abs(b)))


@given(finite, finite)
def test_ordering_matches_float(a, b):
    sa, sb = ScaledReal.from_float(a), ScaledReal.from_float(b)
    assert (sa < sb) == (a < b)
    assert (sa == sb) == (a == b)


@given(finite)
def test_mantissa_range(a):
    s = ScaledReal.from_float(a) * ScaledReal(3.0, 5)
    assert s.mantissa == 0.0 or 1.0 <= abs(s.mantissa) < 2.0
