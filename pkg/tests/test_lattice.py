import itertools
import time
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dform import battery
from dform.forms import FormError, compose, evaluate_exact, parse_form
from dform.lattice import (
    Subspace,
    as_fraction,
    certified_radius,
    count_exact,
    count_in_box,
    growth_profile,
    intersect,
    restrict,
    solutions_on,
    union_count_check,
)


def brute(F, m, R):
    m = Fraction(m)
    return sum(1 for x in itertools.product(range(-R, R + 1), repeat=F.n) if abs(evaluate_exact(F, x)) <= m)


def test_circle_oracle():
    F = battery.circle()
    res = count_exact(F, 100)
    assert res.count == 317 == brute(F, 100, 10)
    assert res.exhaustive


def test_circle_large_m_fast():
    F = battery.circle()
    t = time.perf_counter()
    res = count_exact(F, 10**6)
    assert time.perf_counter() - t < 5.0
    assert res.count == 3141549


def test_m_zero_counts_origin():
    for F in [battery.circle(), battery.quartic()]:
        assert count_exact(F, 0).count == 1
    assert count_exact(battery.cubic(), 0, box=50).count == 1


def test_rational_m():
    F = battery.circle()
    assert count_exact(F, Fraction(5, 2)).count == brute(F, Fraction(5, 2), 3)
    assert count_exact(F, "7/2").count == count_exact(F, 3).count
    assert as_fraction("0.5") == Fraction(1, 2)
    with pytest.raises(FormError):
        count_exact(F, -1)


@pytest.mark.parametrize("name", ["cubic", "quartic"])
def test_box_counts_match_brute(name):
    F = battery.named(name)
    for m in (1, 7, 30):
        for R in (5, 12):
            assert count_in_box(F, m, R)[0] == brute(F, m, R)


def test_solutions_listed():
    F = battery.circle()
    res = count_exact(F, 5, list_solutions=True)
    sols = {tuple(s) for s in res.solutions}
    assert len(sols) == res.count == 21
    assert all(a * a + b * b <= 5 for a, b in sols)


def test_quartic_certified():
    F = battery.quartic()
    assert certified_radius(F, 100) is not None
    res = count_exact(F, 100, strategy="certified")
    assert res.exhaustive
    assert res.count == brute(F, 100, int(certified_radius(F, 100)) + 1)


def test_cubic_growth():
    res = count_exact(battery.cubic(), 10, strategy="growth")
    assert res.stable
    assert res.count == 21


def test_ternary_box():
    F = battery.ternary()
    assert count_in_box(F, 20, 4)[0] == brute(F, 20, 4)


def test_monotone_in_m():
    F = battery.quartic()
    counts = [count_exact(F, m).count for m in range(0, 60, 5)]
    assert counts == sorted(counts)


@settings(max_examples=20, deadline=None)
@given(st.integers(-3, 3), st.integers(0, 40))
def test_equivalence_invariance(k, m):
    F = battery.quartic()
    U = [[1, k], [0, 1]]
    assert count_exact(compose(F, U), m).count == count_exact(F, m).count


def test_scaling():
    F = battery.circle()
    G = parse_form({"n": 2, "coeffs": {"2,0": 3, "0,2": 3}})
    for m in (3, 30, 300):
        assert count_exact(G, m).count == count_exact(F, m // 3).count


def test_restrict_circle_to_axis():
    F = battery.circle()
    W = Subspace.from_vectors([[1, 0]])
    G = restrict(F, W)
    assert G.n == 1 and G.int_coeffs == {(2,): 1}


def test_restrict_cubic_to_diagonal():
    F = battery.cubic()
    W = Subspace.from_vectors([[1, -1]])
    G = restrict(F, W)
    v = [W.T[i][0] for i in range(2)]
    assert abs(v[0]) == abs(v[1]) == 1
    c = G.int_coeffs[(3,)]
    assert c == v[0] ** 3 + 2 * v[1] ** 3
    assert solutions_on(F, W, 1) == {(0, 0), tuple(v), tuple(-a for a in v)}


def test_restrict_rejects_full_space():
    with pytest.raises(FormError):
        restrict(battery.circle(), Subspace.from_vectors([[1, 0], [0, 1]]))


def test_subspace_normals_and_intersection():
    A = Subspace.from_normals([[0, 0, 1]])
    B = Subspace.from_normals([[1, 0, 0]])
    C = intersect(A, B)
    assert A.dim == B.dim == 2 and C.dim == 1
    assert [abs(v) for v in C.embed([1])] == [0, 1, 0]


def test_union_single_subspace():
    F = battery.ternary()
    W = Subspace.from_normals([[1, 0, 0]])
    chk = union_count_check(F, 10, [W])
    assert chk.holds
    assert chk.union_count == chk.single_counts[0]


def test_union_two_planes():
    F = battery.ternary()
    Ws = [Subspace.from_normals([[1, 0, 0]]), Subspace.from_normals([[0, 1, 0]])]
    chk = union_count_check(F, 30, Ws)
    assert chk.holds
    assert chk.union_count >= chk.lower_bound
    assert chk.union_count == sum(chk.single_counts) - chk.pair_counts[(0, 1)]


def test_growth_profile_stable():
    prof = growth_profile(battery.circle(), [10, 100, 1000])
    assert prof.counts[1] == 317
    assert all(prof.stable)
