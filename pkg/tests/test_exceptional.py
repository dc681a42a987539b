import numpy as np
import pytest

from dform import battery
from dform.exceptional import a_prime, s_j_compute, tuple_ratios
from dform.forms import FormError, compose
from dform.heights import minimize_height_real


def report(F):
    return a_prime(F, minimize_height_real(F).minimizers)


def test_circle_sits_on_threshold():
    rep = report(battery.circle())
    assert rep.s_j == [1]
    assert rep.a_prime == pytest.approx(1.0)
    # the conjugate pair has normalized wedge exactly 1 = c1^e
    assert rep.boundary


def test_cubic_not_exceptional():
    rep = report(battery.cubic())
    assert rep.s_j == [1]
    assert rep.a_prime == pytest.approx(1.0)
    assert not rep.cap_exceeded


def test_quartic_cluster():
    rep = report(battery.quartic())
    assert rep.s_j == [2]
    assert rep.a_prime == pytest.approx(2.0)
    assert len(rep.witnesses[0]) == 2


def test_small_eps_is_exceptional():
    rep = report(battery.f_eps(4, 1e-3))
    assert rep.a_prime == pytest.approx(2.0)


@pytest.mark.parametrize("U", [[[1, 1], [0, 1]], [[2, 1], [1, 1]], [[0, -1], [1, 0]]])
def test_unimodular_invariance(U):
    for F in [battery.cubic(), battery.quartic()]:
        assert report(compose(F, U)).a_prime == pytest.approx(report(F).a_prime)


def test_a_prime_range():
    for seed in range(4):
        for n, d in [(2, 5), (3, 4), (3, 6)]:
            F = battery.generic(n, d, seed)
            rep = report(F)
            assert 1.0 - 1e-12 <= rep.a_prime <= d / n + 1e-12
            assert not rep.cap_exceeded
            for j, v in enumerate(rep.s_j, start=1):
                assert j <= v <= (j * d) // n


def test_tuple_ratios_count():
    F = battery.generic(3, 5, 0)
    assert len(tuple_ratios(F, 1)) == 10
    assert len(tuple_ratios(F, 2)) == 10
    assert all(0 <= r <= 1 + 1e-12 for r in tuple_ratios(F, 2).values())


def test_bad_inputs():
    with pytest.raises(FormError):
        s_j_compute(battery.cubic(), 2)
    with pytest.raises(FormError):
        a_prime(battery.cubic(), [])
    assert report(compose(battery.cubic(), np.eye(2))).s == pytest.approx(1.0)
