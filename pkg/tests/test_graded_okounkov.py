from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from oklab import convex_geom as cg
from oklab import graded_okounkov as go

import oracles


def simplex_semigroup(d, M):
    gens = [(1, (0,) * d)] + [(1, tuple(int(i == j) for j in range(d))) for i in range(d)]
    return go.generate(gens, M)


def test_lex_valuation():
    assert go.lex_valuation([(2, 0), (1, 3), (1, 1)]) == (1, 1)
    assert go.lex_valuation([(2, 0), (1, 3)], go.FlagSpec(2, (1, 0))) == (2, 0)
    with pytest.raises(ValueError):
        go.lex_valuation([])


def test_level_zero_is_forced():
    g = go.GradedSemigroup(1, {1: [(0,), (1,)]})
    assert g.level(0) == frozenset({(0,)})


@pytest.mark.parametrize("d,M", [(1, 30), (2, 20), (3, 8)])
def test_simplex_level_counts(d, M):
    g = simplex_semigroup(d, M)
    for m in range(M + 1):
        assert len(g.level(m)) == oracles.simplex_points_count(m, d)


def test_p2_volume_growth():
    vg = go.volume_growth(simplex_semigroup(2, 40))
    assert vg.body_volume == 1
    assert vg.limit == pytest.approx(1.0, rel=0.01)
    assert vg.is_big


def test_segment_body():
    g = go.generate([(1, (0,)), (1, (2,))], 30)
    assert go.okounkov_body(g).vertices == (cg.point((0,)), cg.point((2,)))
    # the valuation vectors generate 2Z, so counts grow like vol/2
    assert go.volume_growth(g).limit == pytest.approx(1.0, rel=0.01)


def test_trivial_semigroup_has_kodaira_dimension_zero():
    g = go.generate([(1, (0, 0))], 10)
    vg = go.volume_growth(g)
    assert vg.kodaira_dimension == 0 and vg.limit is None and not vg.is_big


def test_text_round_trip():
    g = simplex_semigroup(2, 4)
    again = go.loads(go.dumps(g))
    assert again.levels == g.levels
    with pytest.raises(ValueError, match="line 1"):
        go.loads("1 2,3\n")


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 3), st.tuples(st.integers(0, 4), st.integers(0, 4))),
                min_size=1, max_size=4))
def test_bodies_grow_with_truncation(gens):
    g = go.generate(gens, 12)
    prev = None
    for M in (4, 8, 12):
        body = go.okounkov_body(g, M)
        if prev is not None:
            assert all(cg.contains(body, v) for v in prev.vertices)
        prev = body


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 3), st.tuples(st.integers(0, 4), st.integers(0, 4))),
                min_size=1, max_size=4))
def test_level_points_lie_in_scaled_body(gens):
    g = go.generate(gens, 9)
    body = go.okounkov_body(g, 9)
    for m in range(1, 10):
        for gamma in g.level(m):
            assert cg.contains(body, tuple(Fraction(c, m) for c in gamma))


def test_decreasing_family_converges():
    target = cg.hull([(0, 0), (1, 0), (0, 1)])
    fam = [cg.scale(target, Fraction(j + 1, j)) for j in range(1, 12)]
    rep = go.body_convergence(fam, target)
    assert rep.direction == "decreasing" and rep.target_contained
    assert rep.equivalence_holds
    assert list(rep.hausdorff) == sorted(rep.hausdorff, reverse=True)
    assert rep.intersection_gap == pytest.approx(float(cg.volume(fam[-1]) - Fraction(1, 2)), abs=1e-12)


def test_non_convergent_family_agrees_on_both_metrics():
    target = cg.hull([(0, 0), (1, 0), (0, 1)])
    fam = [cg.translate(target, (1, 0))] * 6
    rep = go.body_convergence(fam, target)
    assert rep.equivalence_holds
    assert rep.hausdorff[-1] > 0.5 and rep.symmetric_difference[-1] > 0.5


@pytest.mark.parametrize("d", [1, 2, 3])
def test_interior_index_matches_oracle(d):
    simplex = cg.hull([(0,) * d] + [tuple(int(i == j) for j in range(d)) for i in range(d)])
    fam = [cg.scale(simplex, Fraction(j - 1, j)) for j in range(2, 40)]
    rep = go.body_convergence(fam, simplex, grid=6)
    assert rep.coverage == 1.0
    for p, j in rep.first_interior_index.items():
        # fam[0] is j = 2
        assert j + 1 == go.interior_index_oracle(p)
        assert j + 1 == _brute_index(p)


def _brute_index(p):
    s = sum(p)
    j = 1
    while not (s < 1 - Fraction(1, j) and all(c > 0 for c in p)):
        j += 1
    return j


def test_interior_index_oracle_tie():
    # Σp = 1/2 sits on the boundary of ((1 - 1/2)Δ), so the index is 3
    assert go.interior_index_oracle((Fraction(1, 4), Fraction(1, 4))) == 3
