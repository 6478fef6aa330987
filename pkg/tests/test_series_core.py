from fractions import Fraction as Fr

import pytest
from hypothesis import given, strategies as st

from loopnest import series_core as sc

SPEC = sc.LoopModelSpec(n=1, g=Fr(1, 50), h=Fr(1, 50), alpha=1)


def small_series(draw_terms, max_u=4):
    terms = {}
    for (u, s, n), c in draw_terms.items():
        terms[sc.monomial(u=u, s=s, n=n)] = c
    return sc.TruncatedSeries(terms, max_u)


term_maps = st.dictionaries(
    st.tuples(st.integers(0, 5), st.integers(0, 2), st.integers(0, 2)),
    st.fractions(min_value=-5, max_value=5, max_denominator=7), max_size=6)


@given(term_maps, term_maps, term_maps)
def test_ring_axioms(a, b, c):
    x, y, z = small_series(a), small_series(b), small_series(c)
    assert x * y == y * x
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    assert (x - x).terms == {}


@given(term_maps)
def test_dump_load_round_trip(a):
    x = small_series(a)
    assert sc.load_series(sc.dump_series(x)) == x


def test_truncation_drops_high_powers():
    x = sc.TruncatedSeries({sc.monomial(u=3): 1, sc.monomial(u=1): 2}, 2)
    assert x.terms == {sc.monomial(u=1): 2}
    assert (x * x).terms == {sc.monomial(u=2): 4}
    with pytest.raises(ValueError):
        sc.TruncatedSeries({}, 0)


def test_monomial_range():
    with pytest.raises(ValueError):
        sc.monomial(u=256)
    assert sc.unpack(sc.monomial(u=2, h=3)) == (2, 0, 0, 0, 3, 0)


def test_quadrangulation_counts():
    fam = sc.tutte_disk_series({4: 1}, 5)
    assert [fam[2].coeff(u=V).get(0, 0) for V in range(2, 6)] == [1, 2, 9, 54]


def test_triangulation_counts():
    fam = sc.tutte_disk_series({3: 1}, 5)
    assert [fam[2].coeff(u=V).get(0, 0) for V in range(2, 6)] == [1, 4, 32, 336]


def test_degenerate_grading_rejected():
    with pytest.raises(sc.GradingError):
        sc.tutte_disk_series({2: 1}, 3)


def test_budget_env(monkeypatch):
    monkeypatch.setenv("LOOPNEST_BUDGET", "3")
    with pytest.raises(sc.BudgetError):
        sc.NestedSolution(SPEC, 4)


def test_no_loops_reduces_to_tutte():
    spec = sc.LoopModelSpec(n=0, g=Fr(1, 3), h=Fr(1, 5), alpha=1)
    _, F = sc.nested_fixed_point(spec, 5)
    plain = sc.tutte_disk_series({3: Fr(1, 3)}, 5)
    for l in range(6):
        assert F[l] == plain[l]


@pytest.mark.parametrize("k,l", [(1, 1), (2, 3), (4, 2), (3, 0)])
def test_annulus_alpha_one_closed_form(k, l):
    spec = sc.LoopModelSpec(alpha=1)
    A = sc.annulus_coeffs(spec, 5, 5)
    key = sc.monomial(n=1, h=k + l)
    assert A.A[k][l] == {key: sc.annulus_alpha_one(k, l)}
    assert A.R(k, l) == {key: Fr(sc.annulus_alpha_one(k, l), k)}


@pytest.mark.parametrize("V,L", [(3, 1), (4, 2), (5, 3)])
def test_depth_law_is_a_distribution(V, L):
    law = sc.depth_distribution(SPEC, V, L)
    assert sum(law) == 1
    assert all(isinstance(p, Fr) and p >= 0 for p in law)


def test_depth_law_errors():
    with pytest.raises(ValueError):
        sc.depth_distribution(sc.LoopModelSpec(), 3, 1)
    with pytest.raises(sc.EmptySectorError):
        sc.depth_distribution(SPEC, 1, 2)


def test_pointing_counts_vertices():
    # without loops the refined pointed disk is u d/du of the disk
    spec = sc.LoopModelSpec(n=0, g=Fr(1, 2), h=Fr(1, 3), alpha=1)
    sol = sc.NestedSolution(spec, 5)
    fam = sc.refined_pointed_disk(spec, 5, solution=sol)
    for l in range(1, 5):
        assert fam[l] == sol.disk(l).u_derivative()


def test_spec_validation():
    with pytest.raises(ValueError):
        sc.LoopModelSpec(n=3)
