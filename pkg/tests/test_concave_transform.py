import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oklab import concave_transform as ct
from oklab import toric_testbed as tt

import oracles


def pl_algebra(d, pieces, M, box=1):
    """Weights min_k (a_k·γ + m b_k) on the lattice points of m[0, box]^d,
    built without the toric module."""
    levels = {}
    for m in range(1, M + 1):
        grid = np.stack(np.meshgrid(*[np.arange(m * box + 1)] * d, indexing="ij"), -1).reshape(-1, d)
        w = np.min(np.array([grid @ np.array(a, float) + m * b for a, b in pieces]), axis=0)
        levels[m] = {tuple(int(c) for c in g): float(x) for g, x in zip(grid, w)}
    return ct.FilteredGradedAlgebra(d, levels)


def test_p1_transform_error_and_concavity():
    alg = tt.p1_linear().algebra(60)
    T = ct.concave_transform(alg)
    err = np.max(np.abs(T.grid_values - (1 - T.grid[:, 0])))
    assert err <= 2 / 60
    assert ct.midpoint_concavity_defect(T) <= 2 / 60
    assert T.sup == 1.0 and T.stationary


def test_transform_matches_lp_oracle():
    alg = tt.p2_linear().algebra(8)
    best, scale, _ = ct._normalized_points(alg, 8, 8)
    pts = [np.array(k, float) / scale for k in best]
    vals = list(best.values())
    T = ct.concave_transform(alg, grid=6)
    for x, g in zip(T.grid, T.grid_values):
        assert g == pytest.approx(oracles.transform_by_lp(pts, vals, x), abs=1e-12)


def test_evaluate_outside_is_nan():
    T = ct.concave_transform(tt.p1_linear().algebra(10), grid=8)
    assert math.isnan(T.evaluate([(2,)])[0])
    with pytest.raises(ValueError):
        ct.concave_transform(tt.p1_linear().algebra(10), points=[(1,)])


def test_integral_layer_cake_matches_grid_sum():
    alg = pl_algebra(2, [((-1, 0), 1), ((0, -1), 1), ((0, 0), Fraction(1, 2))], 24)
    T = ct.concave_transform(alg, grid=64)
    riemann = float(np.mean(T.evaluate(T.grid_exact)))
    assert T.integral() == pytest.approx(riemann, abs=0.02)


def test_kolmogorov_p1_is_one_over_level_count():
    alg = tt.p1_linear().algebra(60)
    T = ct.concave_transform(alg)
    for m in (41, 50, 60):
        nu = ct.jumping_measure(alg, m)
        assert ct.kolmogorov_distance(nu, T) == pytest.approx(1 / (m + 1), abs=1e-9)


def test_pushforward_cdf_is_a_distribution():
    T = ct.concave_transform(tt.p2_linear().algebra(20), grid=16)
    xs = np.linspace(T.inf - 1, T.sup + 1, 50)
    F = [T.pushforward_cdf(x) for x in xs]
    assert F[0] == 0.0 and F[-1] == 1.0
    assert all(b >= a for a, b in zip(F, F[1:]))
    assert sum(m for _, m in T.atoms()) == pytest.approx(1.0)


def test_volumes_on_p1():
    alg = tt.p1_linear().algebra(60)
    vh = ct.arithmetic_volume(alg)
    assert vh.estimate == pytest.approx(1.0, abs=0.02)
    assert vh.reference_value == 1.0
    chi = ct.chi_volume(alg)
    assert chi.estimate <= ct.chi_volume_num(ct.concave_transform(alg)) + 0.02
    assert "vol_hat" in ct.volume_reports_csv([vh, chi])


def test_slopes_and_bigness():
    alg = tt.p1_linear().algebra(40)
    s = ct.asymptotic_slopes(alg)
    assert s.mu_max == pytest.approx(1.0) and s.mu_min == pytest.approx(0.0, abs=1e-9)
    assert ct.bigness_test(alg).big
    neg = tt.p1_linear().shifted(-2).algebra(40)
    assert not ct.bigness_test(neg).big


def test_superadditivity_violations_detected():
    good = tt.p1_linear().algebra(8)
    assert ct.superadditivity_violations(good) == []
    bad = ct.FilteredGradedAlgebra(1, {1: {(0,): 1.0}, 2: {(0,): 0.0}})
    assert ct.superadditivity_violations(bad)


def test_fekete_depth_reaches_better_representatives():
    # level 1 is pessimistic; level 2 shows the true growth
    alg = ct.FilteredGradedAlgebra(1, {1: {(0,): 0.0, (1,): 0.0}, 2: {(0,): 2.0, (1,): 1.0, (2,): 2.0}})
    assert ct.rho_tilde(alg, 1, (0,), N=2) == 1.0
    assert ct.rho(alg, 1, (0,)) == 0.0
    T = ct.concave_transform(alg, N=2, grid=8)
    assert not T.stationary


shifts = st.fractions(min_value=-2, max_value=2, max_denominator=16)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.tuples(st.tuples(st.integers(-2, 2), st.integers(-2, 2)),
                          st.fractions(-1, 1, max_denominator=4)), min_size=1, max_size=3),
       shifts)
def test_shift_is_exact(pieces, c):
    alg = pl_algebra(2, pieces, 10)
    base = ct.concave_transform(alg, grid=8)
    moved = ct.concave_transform(alg.shifted(float(c)), grid=8)
    assert np.max(np.abs(moved.grid_values - base.grid_values - float(c))) <= 1e-9


@settings(max_examples=15, deadline=None)
@given(st.lists(st.tuples(st.tuples(st.integers(-2, 2)), st.fractions(-1, 1, max_denominator=4)),
                min_size=1, max_size=3), st.integers(2, 3))
def test_veronese_scales_exactly(pieces, k):
    alg = pl_algebra(1, pieces, 24)
    ver = ct.concave_transform(alg.veronese(k), grid=8)
    sub = ct.concave_transform(alg, levels=range(k, 25, k), grid=8)
    pts = ver.grid_exact
    lhs = ver.evaluate(pts)
    rhs = k * sub.evaluate([tuple(c / k for c in p) for p in pts])
    assert np.max(np.abs(lhs - rhs)) <= 1e-9


@settings(max_examples=15, deadline=None)
@given(st.lists(st.tuples(st.tuples(st.integers(-2, 2), st.integers(-2, 2)),
                          st.fractions(-1, 1, max_denominator=4)), min_size=1, max_size=3))
def test_transform_below_roof_and_concave(pieces):
    alg = pl_algebra(2, pieces, 16)
    T = ct.concave_transform(alg, grid=12)
    roof = np.min(np.array([T.grid @ np.array(a, float) + float(b) for a, b in pieces]), axis=0)
    assert np.all(T.grid_values <= roof + 1e-9)
    L = max(abs(a[0]) + abs(a[1]) for a, _ in pieces)
    assert np.max(roof - T.grid_values) <= (2 * L + 1) / 16 + 1e-9
    assert ct.midpoint_concavity_defect(T) <= (2 * L + 1) / 16 + 1e-9
