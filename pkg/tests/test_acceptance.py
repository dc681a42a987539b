"""Acceptance criteria, one test per criterion.

Each test prints a single ``criterion k PASS|FAIL`` line with the measured
numbers; the lines are collected again in the terminal summary by conftest.
"""

import itertools
import math
import time

import numpy as np

from dform import battery
from dform.forms import evaluate_exact
from dform.heights import nonvanishing_on_integers
from dform.lattice import count_exact
from dform.verify import (
    asymptotic_experiment,
    check_a_prime_grid,
    check_determinant_sum,
    check_eps_family,
    check_factor_selection,
    check_height_lower_bounds,
    check_integral_reduction,
    check_scaling_laws,
    check_wedge_sum,
)
from dform.volume import is_finite_volume, volume_monte_carlo, volume_radial

LINES = []


def verdict(k, ok, msg):
    line = "criterion %d %s: %s" % (k, "PASS" if ok else "FAIL", msg)
    print(line)
    LINES.append(line)
    return ok


def sweep_battery():
    """{X^2+Y^2, XY, X^3+2Y^3, (X^2+2Y^2)(2X^2+Y^2)} plus members of the eps family."""
    forms = battery.standard_battery(eps=0.1)
    forms["f_eps_1e-3"] = battery.f_eps(4, 1e-3)
    return forms


def brute_circle(m, R):
    count = 0
    for x in range(-R, R + 1):
        for y in range(-R, R + 1):
            if x * x + y * y <= m:
                count += 1
    return count


def test_gauss_circle():
    oracle = brute_circle(100, 10)
    F = battery.circle()
    t = time.perf_counter()
    got = count_exact(F, 100).count
    dt = time.perf_counter() - t
    big = count_exact(F, 10**6).count
    dev = abs(big - math.pi * 10**6)
    ok = oracle == 317 and got == oracle and dt < 1.0 and dev <= 4 * 10**3
    assert verdict(1, ok, "N(100)=%d oracle=%d in %.3fs; N(1e6)=%d, |N-pi m|=%.1f <= %d" % (got, oracle, dt, big, dev, 4000))


def test_scaling_identities():
    forms = sweep_battery()
    per = math.ceil(500 / len(forms))
    worst, n_inst, failures = math.inf, 0, []
    for i, (name, F) in enumerate(forms.items()):
        rep = check_scaling_laws(F, trials=per, seed=100 + i)
        n_inst += per
        worst = min(worst, rep.margin)
        if not rep.passed:
            failures.append(name)
    ok = n_inst >= 500 and not failures
    assert verdict(2, ok, "%d instances over %d forms, min(tol - rel err)=%.3g, failures=%s"
                   % (n_inst, len(forms), worst, failures))


def test_inequality_sweeps():
    forms = sweep_battery()
    rows = [check_wedge_sum(1000, seed=7)]
    for name, F in forms.items():
        for rep in (check_determinant_sum(F, 1000, seed=1), check_factor_selection(F, 1000, seed=2),
                    check_integral_reduction(F, trials=1000, vectors=100, seed=3)):
            rep.details["name"] = name
            rows.append(rep)
    ran = [r for r in rows if not r.skipped]
    worst = min(r.margin for r in ran)
    skipped = sorted("%s/%s" % (r.check_id, r.details.get("name", "")) for r in rows if r.skipped)
    ok = worst >= -1e-9 and all(r.passed for r in ran)
    for r in ran:
        print("    %-20s %-14s margin %.3g" % (r.check_id, r.details.get("name", ""), r.margin))
    w = rows[0].details["worst_instance"]
    assert verdict(3, ok, "%d sweeps x 1000 trials, min margin=%.3g; wedge sum worst M=%d N=%d lhs=%.4g rhs=%.4g; "
                   "skipped (infinite V or integer zeros): %s"
                   % (len(ran), worst, w["M"], w["N"], w["lhs"], w["rhs"], ", ".join(skipped)))


def test_height_lower_bounds():
    forms = {k: battery.named(k) for k in ("circle", "cubic", "quartic")}
    for p in (5, 11, 101):
        forms["p^2 F_eps, p=%d" % p] = battery.integral_f_eps(4, p)
    margins = {}
    for name, F in forms.items():
        assert nonvanishing_on_integers(F)
        rep = check_height_lower_bounds(F)
        margins[name] = rep.details["margins"]
    worst = min(min(m.values()) for m in margins.values())
    for name, m in margins.items():
        print("    %-16s %s" % (name, ", ".join("%s %.4g" % kv for kv in m.items())))
    ok = worst >= -1e-9 and all("m_lower" in m for m in margins.values())
    assert verdict(4, ok, "%d integral nonvanishing forms, min log-margin=%.4g" % (len(forms), worst))


def test_eps_family():
    rep = check_eps_family(4, 1e-3, ps=(5, 11, 101))
    m = rep.details["margins"]
    sharp = rep.details["sharpness_constants"]
    spread = max(sharp) / min(sharp)
    ok = rep.passed
    assert verdict(5, ok, "V=%.5f > %.5f, m bracket %s in %s, integral %s, constants %s spread %.3f (limit 2)"
                   % (rep.details["V"], -math.log(1e-3) / 12,
                      ["%.9f" % v for v in rep.details["m_bracket"]],
                      ["%.9f" % v for v in rep.details["expected_bracket"]],
                      all(m["integral_p%d" % p] == 0.0 for p in (5, 11, 101)),
                      ["%.3f" % c for c in sharp], spread))


def test_cubic_asymptotics():
    F = battery.cubic()
    ms = sorted({int(round(x)) for x in np.logspace(1, 4, 13)})
    t = time.perf_counter()
    exp = asymptotic_experiment(F, ms, slack=0.15, ratio_tol=0.02)
    dt = time.perf_counter() - t
    top = exp.rows[-1]["ratio"]
    ok = exp.passed_ratio and exp.passed_exponent and dt < 300 and exp.a_prime == 1.0
    assert verdict(6, ok, "a'=%.3g, N/(m^(2/3)V)=%.4f at m=%d, residual exponent %.3f <= %.2f, %.1fs"
                   % (exp.a_prime, top, ms[-1], exp.fitted_exponent, exp.predicted_exponent + 0.15, dt))


def test_volume_cross_validation():
    zs = {}
    for name, F in sweep_battery().items():
        if not is_finite_volume(F):
            continue
        r = volume_radial(F)
        mc = volume_monte_carlo(F, 200_000, seed=11)
        zs[name] = abs(r.value - mc.value) / max(math.hypot(r.abs_error, mc.abs_error), 1e-300)
    pi_err = abs(volume_radial(battery.circle()).value - math.pi)
    ok = max(zs.values()) <= 3.0 and pi_err <= 1e-6
    assert verdict(7, ok, "max |radial - MC|/se=%.2f over %s; |V(circle)-pi|=%.1e"
                   % (max(zs.values()), sorted(zs), pi_err))


def test_a_prime_structure():
    rep = check_a_prime_grid(ns=(2, 3), dmax=8, seeds=(0, 1, 2))
    rows = rep.details["rows"]
    coprime = [r for r in rows if math.gcd(r["n"], r["d"]) == 1]
    ok = rep.passed and not any(r["cap_exceeded"] for r in rows)
    assert verdict(8, ok, "%d forms over 2<=n<=3, n<=d<=8 (%d coprime), min slack=%.3g"
                   % (len(rows), len(coprime), rep.margin))


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_"):
            try:
                fn()
            except AssertionError:
                pass
