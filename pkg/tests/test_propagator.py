import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hermite_lp.hermite import DomainError, hermite_table, hermite_values
from hermite_lp.propagator import (AccuracyWarning, MehlerPoint, SingularityError, dispersive_kernel_magnitude, hermite_coefficients,
                                   kernel_magnitude_table, measured_magnitude, mehler_generating,
                                   mehler_partial_sum, mehler_point, propagator_apply, radial_limit_magnitude,
                                   sample_function, sin_t_form, write_kernel_csv)

K = 60


def coherent(shift):
    return lambda x: math.pi ** -0.25 * np.exp(-(x - shift) ** 2 / 2)


@pytest.fixture(scope="module")
def u0():
    return sample_function(coherent(1.0), K)


def test_mehler_examples():
    for x, y in [(0.0, 0.0), (1.3, -0.4)]:
        g = mehler_generating(0, x, y)
        assert math.isclose(g.real, math.exp(-(x * x + y * y) / 2) / math.sqrt(math.pi), rel_tol=1e-15)
        assert g.imag == 0
    direct = sum(0.5 ** k * hermite_values(k, [0.0])[0] ** 2 for k in range(60))
    assert abs(mehler_generating(0.5, 0, 0) - direct) <= 1e-10


@given(st.floats(0, 0.9), st.floats(0, 2 * math.pi), st.floats(-4, 4), st.floats(-4, 4))
def test_generating_identity(r, th, x, y):
    w = r * complex(math.cos(th), math.sin(th))
    assert abs(mehler_generating(w, x, y) - mehler_partial_sum(w, x, y, 200)) <= 1e-8


@given(st.floats(0, 0.99), st.floats(0, 2 * math.pi), st.floats(-5, 5), st.floats(-5, 5))
def test_symmetry(r, th, x, y):
    w = r * complex(math.cos(th), math.sin(th))
    assert mehler_generating(w, x, y) == mehler_generating(w, y, x)


def test_domain():
    with pytest.raises(DomainError):
        mehler_generating(1 - 1e-7, 0, 0)
    mehler_generating(1 - 1e-6, 0, 0)
    p = mehler_point(0.3j, 1.0, 2.0)
    assert isinstance(p, MehlerPoint) and p.value == mehler_generating(0.3j, 1.0, 2.0)
    with pytest.raises(DomainError):
        MehlerPoint(1.0, 0.0, 0.0, 0j)


def test_dispersive_examples():
    assert math.isclose(dispersive_kernel_magnitude(math.pi / 4, 1), (2 * math.pi) ** -0.5)
    assert math.isclose(dispersive_kernel_magnitude(0.3, 3), dispersive_kernel_magnitude(0.3, 1) ** 3)
    for t in (0.0, math.pi / 2, -math.pi, 5 * math.pi / 2):
        with pytest.raises(SingularityError):
            dispersive_kernel_magnitude(t, 1)
    # |sin t| form is reported but differs away from t = pi/4 multiples
    assert not math.isclose(sin_t_form(math.pi / 8), dispersive_kernel_magnitude(math.pi / 8))


@pytest.mark.parametrize("t", [math.pi / 8, math.pi / 4, 3 * math.pi / 8])
@pytest.mark.parametrize("n", [1, 2])
def test_radial_limit(t, n):
    m = measured_magnitude(t, n, points=5, seed=7)
    assert np.max(np.abs(m / dispersive_kernel_magnitude(t, n) - 1)) <= 1e-4


def test_magnitude_constant_over_grid():
    g = np.linspace(-2, 2, 20)
    vals = np.array([radial_limit_magnitude(math.pi / 4, a, b) for a in g for b in g])
    assert abs(vals.max() / vals.min() - 1) <= 1e-8


def test_isometry_and_phase_laws(u0):
    for t in (0.3, 1.7, math.pi):
        assert abs(propagator_apply(u0, t, K).l2_norm() - u0.l2_norm()) <= 1e-6
    half = propagator_apply(u0, math.pi, K)
    assert np.max(np.abs(half.values + u0.values)) <= 1e-6
    full = propagator_apply(u0, 2 * math.pi, K)
    assert np.max(np.abs(full.values - u0.values)) <= 1e-6
    ab = propagator_apply(propagator_apply(u0, 0.4, K), 0.9, K)
    assert np.max(np.abs(ab.values - propagator_apply(u0, 1.3, K).values)) <= 1e-6


def test_eigenvector():
    u3 = sample_function(lambda x: hermite_values(3, x), K)
    r = propagator_apply(u3, 0.6, K)
    assert np.max(np.abs(r.values - np.exp(7j * 0.6) * u3.values)) <= 1e-12


def test_kernel_against_propagator(u0):
    """e^{itH}u0(x) = e^{it} int K(e^{2it}) u0, checked with an Abel-regularised kernel."""
    t, rho = 0.5, 0.999
    w = rho * np.exp(2j * t)
    x0 = 0.7
    kern = np.array([mehler_generating(w, x0, y) for y in u0.x])
    abel = np.exp(1j * t) * np.sum(u0.weights * kern * u0.values)
    # the same regularisation applied termwise to the expansion
    c, _ = hermite_coefficients(u0, K)
    _, tab = hermite_table(np.arange(K + 1), [x0])
    series = np.sum(np.exp(1j * t) * w ** np.arange(K + 1) * c * tab[:, 0])
    assert abs(abel - series) < 1e-8


def test_tail_warning(u0):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        propagator_apply(u0, 0.2, K)
    with pytest.warns(AccuracyWarning):
        propagator_apply(u0, 0.2, 3)


def test_kernel_csv(tmp_path):
    rows = kernel_magnitude_table([math.pi / 8, math.pi / 4], 1)
    write_kernel_csv(tmp_path / "k.csv", rows)
    lines = (tmp_path / "k.csv").read_text().splitlines()
    assert lines[0] == "t,predicted,measured,relerr" and len(lines) == 3
    assert all(r.relerr < 1e-4 for r in rows)
