import math

import numpy as np
import pytest

from dform import battery
from dform.forms import FormError, compose, evaluate, scale
from dform.volume import divergence_witness, is_finite_volume, sphere_min, volume_monte_carlo, volume_radial


def trapezoid_2d(F, k=20000):
    """Independent check for forms without real zeros: the periodic trapezoid rule."""
    t = np.linspace(0, 2 * math.pi, k, endpoint=False)
    X = np.stack([np.cos(t), np.sin(t)], axis=1)
    return 0.5 * np.mean(np.abs(evaluate(F, X)) ** (-2.0 / F.d)) * 2 * math.pi


def test_circle_is_pi():
    est = volume_radial(battery.circle())
    assert est.value == pytest.approx(math.pi, abs=1e-8)
    assert est.converged and not est.infinite


def test_quartic_against_trapezoid():
    F = battery.quartic()
    assert volume_radial(F).value == pytest.approx(trapezoid_2d(F), rel=1e-10)


@pytest.mark.parametrize("name", ["hyperbolic", "pell"])
def test_infinite_binary(name):
    F = battery.named(name)
    assert not is_finite_volume(F)
    est = volume_radial(F)
    assert est.infinite
    assert est.witness is not None
    assert volume_monte_carlo(F, 1000).infinite


def test_cubic_norm_infinite():
    F = battery.cubic_norm()
    assert not is_finite_volume(F)
    assert volume_radial(F).infinite


def test_finite_types():
    for F in [battery.circle(), battery.cubic(), battery.quartic(), battery.f_eps(4, 0.1), battery.ternary()]:
        assert is_finite_volume(F)


def test_witness_annihilated():
    F = battery.hyperbolic()
    (w,) = divergence_witness(F)
    assert min(abs(np.dot(L, w)) for L in F.factors) < 1e-9


def test_radial_vs_monte_carlo():
    for F in [battery.cubic(), battery.quartic(), battery.f_eps(4, 0.1)]:
        r = volume_radial(F)
        mc = volume_monte_carlo(F, 100_000, seed=1)
        assert abs(r.value - mc.value) <= 4 * mc.abs_error + 1e-9


def test_scaling_and_invariance():
    F = battery.quartic()
    v = volume_radial(F).value
    assert volume_radial(scale(F, 16.0)).value == pytest.approx(v / 4.0, rel=1e-8)
    assert volume_radial(compose(F, [[1, 2], [1, 3]])).value == pytest.approx(v, rel=1e-8)


def ternary_by_slices():
    """Volume of (X^2+2Y^2+Z^2)^2 - 8X^2Y^2 <= 1 by integrating the z-length over the (x, y) plane."""
    from scipy import integrate

    def radial(t):
        A = math.cos(t) ** 2 + 2 * math.sin(t) ** 2
        B = 8 * (math.cos(t) * math.sin(t)) ** 2

        def f(r):
            a, b = A * r * r, B * r**4
            hi = math.sqrt(b + 1)
            if hi <= a:
                return 0.0
            lo = max(math.sqrt(max(b - 1, 0.0)), a)
            return 2 * (math.sqrt(hi - a) - math.sqrt(lo - a)) * r

        R = (A * A - B) ** -0.25
        brk = [(1 / B) ** 0.25] if B > 0 and (1 / B) ** 0.25 < R else None
        return integrate.quad(f, 0, R, points=brk, limit=400, epsabs=1e-13, epsrel=1e-12)[0]

    t0 = math.atan(1 / math.sqrt(2))
    return 4 * integrate.quad(radial, 0, math.pi / 2, points=[t0], limit=400, epsabs=1e-10, epsrel=1e-10)[0]


def test_ternary_volume():
    est = volume_radial(battery.ternary(), tol=1e-6)
    assert est.value == pytest.approx(ternary_by_slices(), rel=1e-6)


def test_four_variables_rejected():
    with pytest.raises(FormError):
        volume_radial(battery.generic(4, 6, 0))


def test_sphere_min():
    sm = sphere_min(battery.quartic())
    assert sm.value == pytest.approx(2.0, rel=1e-9)
    assert sm.certified_lower <= sm.value
    assert sm.certified_lower >= 2.0 * (1 - 1e-5)
    G = battery._binary({"2,0": 3, "1,1": 1, "0,2": 7})
    assert sphere_min(G).value == pytest.approx(5 - math.sqrt(4.25), rel=1e-8)


def test_sphere_min_zero_with_real_factor():
    sm = sphere_min(battery.cubic())
    assert sm.value == 0.0
    assert sm.witness
