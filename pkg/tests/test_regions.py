import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from hermite_lp.hermite import hermite_values
from hermite_lp.quadrature import QuadratureGrid, accumulated_phase, lp_from_samples, panel_edges
from hermite_lp.regions import (BD, EXT, Int, RegionLabel, SpectralScale, WeightedNormSpec, bracket_minus,
                                bracket_plus, lp_norm_region, mc_lp_norm, norm_family, radial_interval,
                                region_membership, region_norms_1d, region_table, rho, rho_kinks, valid_labels,
                                weighted_norm, whole_line_norms, write_region_csv, y_of)

LAM10 = SpectralScale(2, 49)

# ||hhat_100||_{L^p(region)} by mpmath.quad (30 digits, 200 subintervals), both signs of x
ORACLE_K100 = [
    (Int(0), 2, 0.73479843133541196),
    (Int(1), 2, 0.88548880467773044),
    (Int(2), 4, 0.43921986023443233),
    (BD, 4, 0.38346237661355115),
    (BD, 2, 0.39206571520620294),
    (EXT, 2, 0.086497957080017017),
    (Int(1), 3, 0.55050495547093251),
]


def h100(x):
    return hermite_values(100, x)


def test_scale():
    s = SpectralScale(2, 49)
    assert s.lam == 10.0 and s.eigenvalue == 100
    assert math.isclose(s.airy_width, 10 ** (-1 / 3))
    assert s.j_max == 2  # 2^2 <= 10^{2/3} ~ 4.64 < 2^3
    with pytest.raises(ValueError):
        SpectralScale(0, 3)


def test_membership_examples():
    assert region_membership(0.0, LAM10) == {Int(0), Int(1)}
    assert BD in region_membership(9.99, LAM10)
    assert region_membership(10.5, LAM10) == {EXT}


def test_labels_and_intervals():
    assert valid_labels(LAM10) == [Int(0), Int(1), Int(2), BD, EXT]
    assert norm_family(LAM10) == [Int(1), Int(2), BD, EXT]
    assert radial_interval(Int(0), LAM10) == (0.0, 7.5)
    assert radial_interval(Int(2), LAM10) == (7.5, 10 * (1 - 4 ** -3))
    with pytest.raises(ValueError):
        radial_interval(Int(3), LAM10)
    for lab in valid_labels(LAM10):
        assert RegionLabel.parse(str(lab)) == lab
    assert [r[0] for r in region_table(LAM10)] == ["Int(0)", "Int(1)", "Int(2)", "Bd", "Ext"]


def test_region_csv(tmp_path):
    path = tmp_path / "r.csv"
    write_region_csv(path, LAM10)
    lines = path.read_text().splitlines()
    assert lines[0] == "j_or_kind,inner_radius,outer_radius"
    assert lines[1] == "Int(0),0,7.5"
    assert lines[-1].endswith(",inf")


@given(st.integers(min_value=50, max_value=10 ** 6), st.floats(min_value=0.0, max_value=1.0))
def test_coverage(N, t):
    s = SpectralScale(1, N)
    assume(s.lam >= 10)
    r = t * (s.lam + 0.5 * s.airy_width + 1)
    labels = region_membership(r, s)
    assert 1 <= len(labels) <= 3


def test_y_and_brackets():
    s = SpectralScale(1, 1000)
    lam = s.lam
    assert abs(y_of(lam ** 2, s)) < 1e-12
    assert bracket_plus(0.0) == bracket_minus(0.0) == 1.0
    assert math.isclose(y_of(0.0, s), lam ** (4 / 3))
    y = y_of(lam ** 2 + lam ** (2 / 3), s)
    assert math.isclose(y, -1.0) and math.isclose(bracket_minus(y), 2.0)


# -- rho ---------------------------------------------------------------------

def test_rho_values():
    for n in range(1, 6):
        assert rho(2, n) == 0.0
    assert math.isclose(rho(math.inf, 3), 0.5)
    assert math.isclose(rho(3, 3), -1 / 6)
    assert math.isclose(rho(3.999999999999, 1), -0.25, abs_tol=1e-12)
    assert math.isclose(rho(4, 1), -0.25)
    assert math.isclose(rho(8, 1), -5 / 24)
    with pytest.raises(ValueError):
        rho(1.5, 2)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_rho_continuity_and_shape(n):
    for kink in rho_kinks(n):
        if math.isinf(kink):
            continue
        assert abs(rho(kink * (1 - 1e-13), n) - rho(kink * (1 + 1e-13), n)) <= 1e-12
    ps = np.concatenate([np.linspace(2, 60, 3000), [math.inf]])
    vals = np.array([rho(p, n) for p in ps])
    i = int(np.argmin(vals))
    assert math.isclose(ps[i], rho_kinks(n)[0], rel_tol=0.01)
    assert np.all(np.diff(vals[: i + 1]) <= 1e-15)
    assert np.all(np.diff(vals[i:]) >= -1e-15)


# -- quadrature ------------------------------------------------------------

def test_panels_resolve_oscillation():
    lam = 60.0
    edges = panel_edges(0.0, lam + 10, lam, 8.0)
    grid = QuadratureGrid(edges, 6, 8.0)
    assert grid.max_width_ratio(lam) <= 1.0 + 1e-9
    phi = accumulated_phase(lam, edges)
    assert np.all(np.diff(phi) > 0)


def test_symmetric_grid_integrates_gaussian():
    grid = QuadratureGrid.symmetric(12.0, 3.0)
    x, w = grid.nodes_weights()
    assert np.allclose(x, -x[::-1])
    assert abs(np.sum(w * np.exp(-x * x)) - math.sqrt(math.pi)) < 1e-13


def test_lp_from_samples():
    w = np.full(4, 0.25)
    assert lp_from_samples([1, 1, 1, 1], w, 3) == 1.0
    assert lp_from_samples([0, -2, 1, 0], w, math.inf) == 2.0
    assert lp_from_samples(np.zeros(3), np.ones(3), 2) == 0.0


# -- region norms ----------------------------------------------------------

@pytest.mark.parametrize("label,p,expected", ORACLE_K100)
def test_region_norm_oracle(label, p, expected):
    s = SpectralScale(1, 100)
    got = lp_norm_region(h100, label, p, s, parity="even").value
    assert math.isclose(got, expected, rel_tol=1e-6)
    got_full = lp_norm_region(h100, label, p, s).value
    assert math.isclose(got_full, expected, rel_tol=1e-6)


def test_constant_on_boundary_strip():
    s = SpectralScale(1, 500)
    res = lp_norm_region(lambda x: np.ones_like(x), BD, math.inf, s)
    assert res.value == 1.0 and res.grid_sup


@pytest.mark.parametrize("k", [100, 1000])
def test_union_and_exterior_mass(k):
    s = SpectralScale(1, k)
    f = lambda x: hermite_values(k, x)
    norms = region_norms_1d(f, s, valid_labels(s), [2], parity="even")
    total = sum(norms[(lab, 2)].value ** 2 for lab in valid_labels(s))
    assert 0.99 <= total <= 3.01
    assert norms[(EXT, 2)].value <= 1e-2 ** 0.5
    assert norms[(EXT, 2)].value ** 2 <= 1e-2


def test_doubling_nodes_changes_little():
    s = SpectralScale(1, 2000)
    f = lambda x: hermite_values(2000, x)
    a = region_norms_1d(f, s, valid_labels(s), [2, 4, 8], parity="even", nodes_per_wavelength=8)
    b = region_norms_1d(f, s, valid_labels(s), [2, 4, 8], parity="even", nodes_per_wavelength=16)
    for key in a:
        assert abs(a[key].value / b[key].value - 1) <= 1e-6


def test_whole_line_norm_is_one():
    vals = whole_line_norms(lambda x: hermite_values(300, x), math.sqrt(601), [2], parity="even")
    assert abs(vals[2] - 1) < 1e-10


def test_weighted_norm_reduces_to_region_norm():
    s = SpectralScale(1, 400)
    f = lambda x: hermite_values(400, x)
    spec = WeightedNormSpec(2, math.inf, 0.0, 0.0, 0.0)
    res = weighted_norm(f, spec, s, parity="even")
    assert res.value <= 1.0
    assert math.isclose(res.value, max(res.per_region.values()))
    finite = weighted_norm(f, WeightedNormSpec(2, 2, 0.0, 0.0, 0.0), s, parity="even")
    assert finite.value >= res.value


def test_theorem_weights():
    a = WeightedNormSpec.from_theorem(2, 1, "a")
    assert (a.alpha_plus, a.alpha_minus, a.lambda_power) == (-0.25, 1.0, 1 / 3)
    b = WeightedNormSpec.from_theorem(math.inf, 1, "b")
    assert math.isclose(b.alpha_plus, 0.25) and b.alpha_minus == 4.0 and math.isclose(b.lambda_power, 1 / 6)
    with pytest.raises(ValueError):
        WeightedNormSpec.from_theorem(5, 3, "a")
    with pytest.raises(ValueError):
        WeightedNormSpec.from_theorem(3, 3, "b")


def test_monte_carlo_matches_separable_quadrature():
    """n = 2 Gaussian exp(-|x|^2/2) over a shell: closed form for p = 2."""
    s = SpectralScale(2, 20)
    lab = Int(1)
    lo, hi = radial_interval(lab, s)
    f = lambda pts: np.exp(-0.5 * np.sum(pts * pts, axis=1))
    res = mc_lp_norm(f, lab, 2, s, samples=40000, seed=1)
    exact = math.sqrt(math.pi * (math.exp(-lo ** 2) - math.exp(-hi ** 2)))
    assert abs(res.value - exact) < 5 * res.stderr + 1e-12
    again = mc_lp_norm(f, lab, 2, s, samples=40000, seed=1)
    assert again.value == res.value
