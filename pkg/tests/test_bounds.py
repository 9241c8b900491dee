import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hermite_lp.bounds import (SweepPoint, band, critical_exponent, energy_bounds_check, fit_summary,
                               geometric_degrees, hermite_norm_sweep, l2_localization_profile, reformulated_lhs,
                               sweep_fit, theorem31_lhs, write_fit_json, write_sweep_csv)
from hermite_lp.hermite import DomainError, hermite_values
from hermite_lp.regions import EXT, Int, SpectralScale


def _points(a, c=1.0, lams=(10, 20, 40, 80, 160)):
    return [SweepPoint(i, lam, c * lam ** a) for i, lam in enumerate(lams)]


def test_fit_exact_power_law():
    fit = sweep_fit(_points(1.5, 3.0))
    assert abs(fit.slope - 1.5) <= 1e-10
    assert math.isclose(fit.intercept, math.log(3.0))
    assert fit.points == 5 and fit.max_residual < 1e-12


@given(st.floats(min_value=-3, max_value=3), st.floats(min_value=0.01, max_value=100))
def test_fit_recovers_slope(a, c):
    assert abs(sweep_fit(_points(a, c)).slope - a) < 1e-9


def test_fit_asymptotic_window():
    def pts(lams):
        return [SweepPoint(i, l, l ** -0.5 * (1 + 1 / l)) for i, l in enumerate(lams)]

    small = sweep_fit(pts(np.geomspace(4, 64, 6)))
    large = sweep_fit(pts(np.geomspace(400, 6400, 6)))
    assert abs(large.slope + 0.5) < abs(small.slope + 0.5)


def test_fit_errors():
    with pytest.raises(ValueError):
        sweep_fit(_points(1.0)[:3])
    bad = _points(1.0)
    bad[2] = SweepPoint(2, bad[2].lam, 0.0)
    with pytest.raises(DomainError):
        sweep_fit(bad)
    with pytest.raises(ValueError):
        sweep_fit(list(reversed(_points(1.0))))


def test_geometric_degrees():
    ds = geometric_degrees(256, 2048, 6, even=True)
    assert ds[0] == 256 and ds[-1] == 2048 and all(d % 2 == 0 for d in ds)
    assert len(ds) == 6 and ds == sorted(set(ds))


def test_localization_profile():
    prof = l2_localization_profile(2000)
    s = SpectralScale(1, 2000)
    inner = sum(prof[lab][0] for lab in prof if lab != EXT)
    assert 0.97 <= inner <= 3.0
    scaled = [prof[Int(j)][0] * 2 ** j for j in range(s.j_max + 1)]
    assert max(scaled) / min(scaled) <= 8
    assert prof[EXT][0] / s.lam ** (1 / 3) < 1
    with pytest.raises(DomainError):
        l2_localization_profile(8)


def test_energy_bounds():
    e0, e1 = energy_bounds_check(0)
    assert math.isclose(e0, 1 / math.sqrt(2), rel_tol=1e-10)
    ratios = [energy_bounds_check(k) for k in (100, 1000, 4000)]
    for e0, e1 in ratios:
        assert e0 <= 1 and abs(e0 - 1 / math.sqrt(2)) < 0.01
        assert e1 < 2


def test_theorem31_lhs_homogeneous_and_checked():
    k = 300
    s = SpectralScale(1, k)
    one = theorem31_lhs((lambda x: hermite_values(k, x), s), 2, "a")
    two = theorem31_lhs((lambda x: 2 * hermite_values(k, x), s), 2, "a")
    assert math.isclose(two, 2 * one, rel_tol=1e-12)
    assert math.isclose(theorem31_lhs(k, 2, "a"), one, rel_tol=1e-12)
    assert critical_exponent(1) == math.inf and critical_exponent(3) == 4
    with pytest.raises(ValueError):
        theorem31_lhs((lambda p: p[:, 0], SpectralScale(3, 4)), 5, "a")
    with pytest.raises(ValueError):
        theorem31_lhs((lambda p: p[:, 0], SpectralScale(3, 4)), 3, "b")


def test_reformulation_agrees_with_weighted_form():
    for k in (500, 2000):
        for p in (2, 6, math.inf):
            for j in (1, 2):
                block, weighted = reformulated_lhs(k, p, j)
                assert 0.25 <= block / weighted <= 4


def test_small_sweep_slope():
    Ns = [2 ** e for e in range(6, 11)]
    data = hermite_norm_sweep([math.inf], Ns)
    fit = sweep_fit(data[math.inf])
    assert abs(fit.slope - (-1 / 6)) < 0.05


def test_outputs(tmp_path):
    pts = _points(-0.2)
    write_sweep_csv(tmp_path / "s.csv", pts)
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "N,lambda,value" and len(lines) == 6
    fit = sweep_fit(pts)
    summ = fit_summary(8, 1, fit)
    assert summ["predicted"] == pytest.approx(-5 / 24)
    write_fit_json(tmp_path / "f.json", summ)
    d = json.loads((tmp_path / "f.json").read_text())
    assert set(d) >= {"p", "n", "slope", "predicted", "residual"}
    assert band(pts) == pytest.approx(16 ** 0.2)
