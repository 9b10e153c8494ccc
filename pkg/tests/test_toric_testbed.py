from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oklab import adelic_core as ac
from oklab import convex_geom as cg
from oklab import toric_testbed as tt

import oracles


def test_p1_sections_weights():
    _, alg = tt.sections(tt.p1_linear(), 3)
    assert alg.levels[3] == {(0,): 3.0, (1,): 2.0, (2,): 1.0, (3,): 0.0}


def test_sections_bundles_carry_place_degrees():
    bundles, _ = tt.sections(tt.p2_linear(), 2)
    b = bundles[1]
    assert b.rank == 6
    assert sorted(b.totals()) == [0.0, 0.0, 0.0, 1.0, 1.0, 2.0]


def test_rational_polytope_needs_flag():
    div = tt.p1_linear().scaled(Fraction(1, 2))
    with pytest.raises(ValueError):
        tt.sections(div, 4)
    tt.sections(div, 4, allow_rational=True)


def test_green_function_values():
    D = tt.p1_linear()
    assert tt.green_function(D, "inf", [0.0]) == 1.0
    assert tt.green_function(D, "inf", [-2.0]) == 2.0
    # zero roof: max(0, -u)
    assert tt.green_function(D, "2", [3.0]) == 0.0
    assert tt.green_function(D, "2", [-3.0]) == 3.0


def test_duality_is_exact_on_p2():
    D = tt.p2_linear()
    for m in (1, 3, 5):
        for g in tt.lattice_points(D.polytope, m):
            assert tt.duality_residual(D, m, g, u_samples=np.random.default_rng(0).normal(size=(50, 2))) <= 1e-12
    with pytest.raises(ValueError):
        tt.duality_residual(D, 1, (2, 0))


def test_hilbert_samuel_p1():
    rep = tt.hilbert_samuel_check(tt.p1_linear(), 60)
    assert rep.integral_side == 1.0
    assert rep.relative_gap <= 1e-9


def test_essential_minimum():
    rep = tt.essential_minimum_estimate(tt.p1_linear())
    assert rep.estimate == pytest.approx(1.0) and rep.holds and rep.tight
    rep2 = tt.essential_minimum_estimate(tt.p2_linear())
    assert rep2.estimate >= 1 / 3


def test_tropical_samples_obey_product_formula():
    D = tt.random_pl(5, dim=2)
    pts = tt.sample_tropical(D, 500, seed=1)
    w = {pl.label: pl.weight for pl in D.curve.places}
    total = sum(w[lab] * u for lab, u in pts.items())
    assert np.max(np.abs(total)) <= 1e-12


def test_exact_integral_against_midpoint_rule():
    D = tt.random_pl(3, dim=1)
    total = D.total_roof()
    pieces = [(float(a[0]), float(b)) for a, b in total.pieces]
    lo, hi = (float(v[0]) for v in D.polytope.vertices)
    for pos in (False, True):
        assert float(D.exact_integral(pos)) == pytest.approx(
            oracles.roof_integral_1d(pieces, lo, hi, pos), abs=1e-6)


def test_sup_convolution_of_linear_roofs():
    D = tt.p1_linear()
    S = D.plus(D)
    assert S.polytope.vertices == (cg.point((0,)), cg.point((2,)))
    assert S.roof("inf").pieces == (((Fraction(-1),), Fraction(2)),)
    assert S.exact_volume(True) == 4


def test_boundary_family_volumes():
    D = tt.p1_linear()
    B = tt.unit_boundary(D)
    fam = tt.boundary_family(D, B, [Fraction(-1, 4), 0, Fraction(1, 2)])
    assert fam[0].exact_volume(False) == Fraction(3, 16)
    assert fam[1] is D
    assert fam[2].exact_volume(False) == Fraction(7, 2)
    with pytest.raises(ValueError):
        tt.boundary_family(D, B, [-2])


def test_height_inequalities():
    D = tt.p1_linear()
    r1 = tt.height_inequality_check(D, D.standard_effective(), 2000, part=1)
    assert r1.violations == 0 and r1.epsilon > 0
    r2 = tt.height_inequality_check(D, D, 2000, part=2)
    assert r2.violations == 0


def test_instance_round_trip_and_errors():
    D = tt.random_pl(11, dim=2)
    inst = tt.loads_instance(tt.dumps_instance(D))
    assert inst.divisor.polytope == D.polytope
    assert {k: r.pieces for k, r in inst.divisor.roofs.items()} == {k: r.pieces for k, r in D.roofs.items()}
    bad = "[curve]\nplace inf archimedean 1\n[polytope]\n0 0\n1 0\n0 1\n[place inf]\n1 2\n"
    with pytest.raises(tt.InstanceParseError) as exc:
        tt.loads_instance(bad)
    assert exc.value.line == 8
    with pytest.raises(tt.InstanceParseError, match="unknown place"):
        tt.loads_instance("[curve]\nplace inf archimedean 1\n[polytope]\n0\n1\n[place x]\n0 1\n")


def test_trivial_place_rejects_nonzero_roof():
    curve = ac.AdelicCurve((ac.Place("t", ac.TRIVIAL), ac.Place("inf", ac.ARCHIMEDEAN)))
    poly = cg.hull([(0,), (1,)])
    with pytest.raises(ValueError):
        tt.MetrizedToricDivisor(poly, {"t": tt.PiecewiseLinearConcave.constant(poly, 1)}, curve)


seeds = st.integers(0, 10_000)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_green_function_matches_loop_oracle(seed):
    D = tt.random_pl(seed)
    r = D.roof("inf")
    verts = [tuple(float(c) for c in v) for v in r.vertices]
    vals = [float(r(v)) for v in r.vertices]
    rng = np.random.default_rng(seed)
    for u in rng.normal(scale=3, size=(20, D.dim)):
        assert tt.green_function(D, "inf", u) == pytest.approx(oracles.legendre_green(verts, vals, u))


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_zhang_never_violated(seed):
    D = tt.random_pl(seed)
    rep = tt.essential_minimum_estimate(D, samples=2000, seed=seed)
    assert rep.holds


@settings(max_examples=20, deadline=None)
@given(seeds, seeds)
def test_brunn_minkowski_exact(s1, s2):
    a, b = tt.random_pl(s1, dim=2), tt.random_pl(s2, dim=2)
    va, vb = float(a.exact_volume(True)), float(b.exact_volume(True))
    vs = float(a.plus(b).exact_volume(True))
    assert vs ** (1 / 3) >= va ** (1 / 3) + vb ** (1 / 3) - 1e-12


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(2, 3))
def test_scaling_volume_homogeneous(seed, k):
    D = tt.random_pl(seed)
    assert D.scaled(k).exact_volume(True) == k ** (D.dim + 1) * D.exact_volume(True)
