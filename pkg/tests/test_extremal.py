import json
import math

import numpy as np
import pytest

from hermite_lp.extremal import (CONSTRUCTIONS, ConstructionError, ModeSum, ResourceError, TensorGrid,
                                 apply_H_residual, build, concentration_report, cross_phase_derivative,
                                 degree_phase, evaluate_mode_sum, point_d0, point_dj, predicted_exponents, tube_d0,
                                 tube_dj, write_field_csv)
from hermite_lp.hermite import hermite_values, s_minus
from hermite_lp.quadrature import QuadratureGrid
from hermite_lp.regions import SpectralScale


def brute_force_point_d0(n, N):
    """All even alpha in Z^n_{>=0} with |alpha| = N and alpha_i > N/(4n)."""
    out = []

    def rec(prefix, left):
        if len(prefix) == n - 1:
            if left % 2 == 0 and left > N / (4 * n):
                out.append(tuple(prefix) + (left,))
            return
        for a in range(0, left + 1, 2):
            if a > N / (4 * n):
                rec(prefix + [a], left - a)

    rec([], N)
    return sorted(out)


def _grid(lam, n, pts=41):
    axes = [np.linspace(-1.1 * lam, 1.1 * lam, pts) for _ in range(n)]
    return TensorGrid(axes, [np.ones(pts)] * n)


def test_tube_d0_profile():
    s = SpectralScale(2, 4)
    v = tube_d0(s)
    xs = np.linspace(-4, 4, 9)
    pts = np.stack([xs, np.zeros_like(xs)], axis=1)
    assert np.allclose(evaluate_mode_sum(v, pts), hermite_values(4, xs), rtol=1e-14, atol=1e-15)
    for n in (2, 3):
        assert math.isclose(tube_d0(SpectralScale(n, 10)).l2_norm(), math.pi ** ((n - 1) / 4))


def test_point_d0_small():
    v = point_d0(SpectralScale(2, 8))
    assert [a.alpha for a in v.indices] == [(2, 6), (4, 4), (6, 2)]
    val = evaluate_mode_sum(v, np.zeros((1, 2)))[0]
    expect = sum(hermite_values(a, [0.0])[0] * hermite_values(b, [0.0])[0] for a, b in [(2, 6), (4, 4), (6, 2)])
    assert math.isclose(val, expect, rel_tol=1e-14)


@pytest.mark.parametrize("n,N", [(2, 100), (3, 40), (2, 256)])
def test_point_d0_matches_enumeration(n, N):
    v = point_d0(SpectralScale(n, N))
    assert sorted(a.alpha for a in v.indices) == brute_force_point_d0(n, N)


def test_point_d0_count_and_peak():
    s = SpectralScale(2, 100)
    v = point_d0(s)
    assert len(v) == 37
    v0 = evaluate_mode_sum(v, np.zeros((1, 2)))[0]
    # every term has sign (-1)^{N/2}; the magnitude is what scales
    assert np.sign(v0) == (-1) ** (s.N // 2)
    ratio = abs(v0) / (len(v) * s.lam ** (-s.n / 2))
    assert 0.25 <= ratio <= 4
    with pytest.raises(ValueError):
        point_d0(SpectralScale(2, 7))


def test_point_dj_fixed_radius():
    s = SpectralScale(2, 100)
    v, r = point_dj(s, 2, r_seed=12.0, scan_points=1)
    assert r == 12.0 and v.meta["N0"] == 29
    assert 7 <= v.meta["I_size"] <= 29
    assert 8 * len(v) >= v.meta["I_size"]
    assert math.isclose(v.l2_norm() ** 2, len(v))


def test_point_dj_scan_and_errors():
    s = SpectralScale(2, 256)
    v, r = point_dj(s, 1)
    lo_hi = 2.0 / s.lam
    assert abs(r - v.meta["r"]) == 0 and abs(r - 0.5 * (0 + s.lam * (1 - 4 ** -2))) <= lo_hi + 1e-12
    with pytest.raises(ValueError):
        point_dj(s, 1, r_seed=s.lam)
    with pytest.raises(ValueError):
        point_dj(SpectralScale(2, 255), 1)


def test_tube_dj_vacuous_window():
    v = tube_dj(SpectralScale(2, 200), 2, c=1 / 8)
    assert v.meta["I_size"] == 1 and [a.alpha for a in v.indices] == [(196, 4)]


def test_tube_dj_phase_spread():
    s = SpectralScale(2, 1024)
    v = tube_dj(s, 2, c=0.25, bins=8)
    ph = np.array([degree_phase(a.alpha[0], v.meta["r_ref"]) for a in v.indices])
    assert np.ptp(ph) <= 2 * math.pi / 8
    assert 2 * 8 * len(v) >= v.meta["I_size"]
    with pytest.raises(ValueError):
        tube_dj(s, 0, c=0.25)
    with pytest.raises(ValueError):
        tube_dj(s, 1, c=0.3)


@pytest.mark.parametrize("mu,x", [(10.0, 3.0), (30.0, 20.0), (5.5, 0.0)])
def test_cross_phase_derivative(mu, x):
    def d4(f, t, h):
        return (-f(t + 2 * h) + 8 * f(t + h) - 8 * f(t - h) + f(t - 2 * h)) / (12 * h)

    def momentum(m):
        lam = math.sqrt(2 * m * m - 1)
        return d4(lambda t: s_minus(lam, t), x, 1e-3)

    fd = d4(momentum, mu, 1e-3)
    assert math.isclose(float(cross_phase_derivative(mu, x)), fd, rel_tol=1e-6)


@pytest.mark.parametrize("name", CONSTRUCTIONS)
def test_exact_eigenfunction(name):
    s = SpectralScale(2, 256)
    v = build(name, s, j=1)
    grid = _grid(s.lam, 2)
    vals = evaluate_mode_sum(v, grid)
    assert apply_H_residual(v, grid) <= 1e-7 * np.max(np.abs(vals))


def test_residual_edge_cases():
    s = SpectralScale(2, 10)
    empty = ModeSum(s, [], [])
    assert apply_H_residual(empty, _grid(s.lam, 2, 5)) == 0.0
    one = ModeSum(SpectralScale(1, 3), [(3,)], [1.0])
    assert apply_H_residual(one, np.array([[2.0]])) <= 1e-10


def test_parseval_on_grid():
    s = SpectralScale(2, 200)
    v = build("point_dj", s, j=1)
    lam = s.lam
    g = QuadratureGrid.symmetric(lam + 8, lam)
    x, w = g.nodes_weights()
    grid = TensorGrid([x, x], [w, w])
    vals = evaluate_mode_sum(v, grid)
    l2sq = float(np.sum(grid.weight_mesh() * vals ** 2))
    assert abs(l2sq / v.l2_norm() ** 2 - 1) < 0.01


def test_validation_and_json():
    s = SpectralScale(2, 6)
    with pytest.raises(ValueError):
        ModeSum(s, [(2, 2)], [1.0])
    with pytest.raises(ValueError):
        ModeSum(s, [(2, 4), (2, 4)], [1.0, 1.0])
    with pytest.raises(ValueError):
        ModeSum(s, [(2, 2, 2)], [1.0])
    v = point_d0(SpectralScale(2, 20))
    text = v.to_json()
    assert json.loads(text)["N"] == 20
    back = ModeSum.from_json(text)
    assert [a.alpha for a in back.indices] == [a.alpha for a in v.indices]
    assert np.array_equal(back.coefficients, v.coefficients)


def test_memory_cap():
    v = point_d0(SpectralScale(2, 64))
    with pytest.raises(ResourceError):
        evaluate_mode_sum(v, _grid(12.0, 2, 200), memory_cap=1024)


def test_field_csv(tmp_path):
    v = tube_d0(SpectralScale(2, 4))
    pts = np.array([[0.0, 0.0], [1.0, 0.5]])
    write_field_csv(tmp_path / "f.csv", pts, evaluate_mode_sum(v, pts))
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == "x1,x2,value" and len(lines) == 3


def test_predicted_exponents():
    assert predicted_exponents("tube_d0", 4, 2) == (-0.25, 0.0)
    assert predicted_exponents("point_d0", math.inf, 2) == (0.0, 0.0)
    assert predicted_exponents("point_dj", 2, 2) == (-1.0, 1.0)
    lam_e, j_e = predicted_exponents("tube_dj", math.inf, 2)
    assert lam_e == -0.5 and j_e == 0.75
    with pytest.raises(ValueError):
        predicted_exponents("nope", 2, 2)


def test_concentration_report_shapes():
    s = SpectralScale(2, 256)
    for name in CONSTRUCTIONS:
        rep = concentration_report(build(name, s, j=1), [2, 4, math.inf])
        r = rep.ratios()
        # Holder on a set of finite measure is not monotone, but all ratios are positive and finite
        assert all(0 < r[p] < 10 for p in r)
        assert set(rep.predicted_ratio_exponents) == {2, 4, math.inf}
