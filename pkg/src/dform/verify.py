"""Executable checks of the inequalities with explicit constants.

Every check returns a :class:`CheckReport` whose ``margin`` is the slack of
the inequality (logarithmic for multiplicative bounds), so a check passes
exactly when ``margin >= -tolerance``.  Checks whose hypotheses fail (for
instance infinite volume) are returned with ``skipped`` set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from dform import battery
from dform.exceptional import a_prime
from dform.forms import DecomposableForm, FormError, Transform, compose, evaluate, expand, scale
from dform.geometry import constants, selection_sides, select_factors, wedge_norm
from dform.heights import (
    MinimizationResult,
    OptimizerConfig,
    height,
    minimize_height_real,
    nonvanishing_on_integers,
    reduce_integral,
    tuple_determinant_sum,
)
from dform.volume import divergence_witness, volume_radial


@dataclass
class CheckReport:
    check_id: str
    digest: str
    passed: bool
    margin: float
    tolerance: float
    details: dict = field(default_factory=dict)
    skipped: bool = False

    def to_dict(self) -> dict:
        return {
            "check": self.check_id,
            "form": self.digest,
            "passed": self.passed,
            "skipped": self.skipped,
            "margin": self.margin,
            "tolerance": self.tolerance,
            "details": self.details,
        }


def _report(check_id: str, F: DecomposableForm | None, margin: float, tol: float, **details) -> CheckReport:
    digest = F.digest() if F is not None else "-"
    return CheckReport(check_id, digest, bool(margin >= -tol), float(margin), tol, details)


def _skip(check_id: str, F: DecomposableForm | None, reason: str) -> CheckReport:
    digest = F.digest() if F is not None else "-"
    return CheckReport(check_id, digest, True, math.inf, 0.0, {"reason": reason}, skipped=True)


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def _random_gl(rng: np.random.Generator, n: int) -> np.ndarray:
    while True:
        T = rng.normal(size=(n, n))
        if abs(np.linalg.det(T)) > 0.2:
            return T


def raw_compose(F: DecomposableForm, T) -> DecomposableForm:
    """``F o T`` keeping the factor order (and hence indices) of ``F``."""
    rows = F.factors @ np.asarray(T, dtype=float)
    rows.setflags(write=False)
    return DecomposableForm(rows, F.pair, F.scale, F.sign, None)


def _minimize(F: DecomposableForm, seed: int = 0) -> MinimizationResult:
    return minimize_height_real(F, OptimizerConfig(seed=seed))


# ---------------------------------------------------------------- scaling laws


def check_scaling_laws(F: DecomposableForm, trials: int = 5, seed: int = 0,
                       exact_tol: float = 1e-9, est_tol: float = 1e-4) -> CheckReport:
    """Homogeneity of H, the geometric height and the volume under ``a F`` and ``F o T``.

    The margin is the smallest ``tol - relative error`` over all identities.
    """
    rng = np.random.default_rng(seed)
    n, d = F.n, F.d
    finite = divergence_witness(F) is None
    m0 = _minimize(F, seed).m_estimate
    V0 = volume_radial(F).value if finite else None
    worst = {"evaluation": 0.0, "height": 0.0, "m_scale": 0.0, "m_transform": 0.0,
             "V_scale": 0.0, "V_transform": 0.0}
    for t in range(trials):
        a = float(np.exp(rng.uniform(math.log(0.25), math.log(4.0))))
        T = _random_gl(rng, n)
        det = abs(float(np.linalg.det(T)))
        aF, FT = scale(F, a), compose(F, T)
        x = rng.normal(size=(8, n))
        ev = max(np.max(np.abs(evaluate(aF, x) - a * evaluate(F, x)) / np.maximum(np.abs(a * evaluate(F, x)), 1e-300)),
                 np.max(np.abs(evaluate(FT, x) - evaluate(F, x @ T.T)) / np.maximum(np.abs(evaluate(F, x @ T.T)), 1e-300)))
        worst["evaluation"] = max(worst["evaluation"], float(ev))
        worst["height"] = max(worst["height"], _rel(height(aF), a * height(F)))
        worst["m_scale"] = max(worst["m_scale"], _rel(_minimize(aF, seed + t).m_estimate, a * m0))
        worst["m_transform"] = max(worst["m_transform"],
                                   _rel(_minimize(FT, seed + t).m_estimate, det ** (d / n) * m0))
        if finite:
            worst["V_scale"] = max(worst["V_scale"], _rel(volume_radial(aF).value, a ** (-n / d) * V0)) if n <= 3 else 0.0
            worst["V_transform"] = max(worst["V_transform"], _rel(volume_radial(FT).value, V0 / det)) if n <= 3 else 0.0
    tols = {"evaluation": exact_tol, "height": exact_tol, "m_scale": est_tol, "m_transform": est_tol,
            "V_scale": est_tol, "V_transform": est_tol}
    margin = min(tols[k] - worst[k] for k in worst)
    return _report("scaling_laws", F, margin, 0.0, errors=worst, volume_identities=finite,
                   note=None if finite else "volume identities skipped: V(F) is infinite")


# ---------------------------------------------------------------- volume and height lower bounds


def check_volume_lower_bound(F: DecomposableForm, res: MinimizationResult | None = None, V: float | None = None) -> CheckReport:
    """Attained positive minimum and ``V >= (2/n)^n m^{-n/d}``."""
    if divergence_witness(F) is not None:
        return _skip("volume_lower_bound", F, "V(F) is infinite")
    n, d = F.n, F.d
    res = res or _minimize(F)
    V = V if V is not None else volume_radial(F).value
    bound = (2 / n) ** n * res.m_estimate ** (-n / d)
    margin = math.log(V) - math.log(bound)
    ok_min = res.converged and res.m_estimate > 0
    return _report("volume_lower_bound", F, margin if ok_min else -math.inf, 1e-9, V=V, bound=bound,
                   m_estimate=res.m_estimate, attained=ok_min)


def check_height_lower_bounds(F: DecomposableForm, res: MinimizationResult | None = None, V: float | None = None) -> CheckReport:
    """Volume lower bound, and for integral forms without nontrivial integer zeros ``m >= n^{-d(n+1/2)/n}``."""
    n, d = F.n, F.d
    res = res or _minimize(F)
    rep = check_volume_lower_bound(F, res, V)
    if rep.skipped:
        return _skip("height_lower_bounds", F, "V(F) is infinite")
    margins = {"volume": rep.margin}
    if F.int_coeffs is not None and nonvanishing_on_integers(F):
        lower = n ** (-d * (n + 0.5) / n)
        margins["m_lower"] = math.log(res.m_estimate) - math.log(lower)
    return _report("height_lower_bounds", F, min(margins.values()), 1e-9, margins=margins, m_estimate=res.m_estimate,
                   V=rep.details["V"])


# ---------------------------------------------------------------- determinant and wedge sums


def check_determinant_sum(F: DecomposableForm, trials: int = 1000, seed: int = 0,
                 res: MinimizationResult | None = None) -> CheckReport:
    """Tuple-determinant sum against ``(n!/n^n) d^n m^{2n/d}`` for random weights of product 1.

    Half of the weight vectors are conjugate-symmetric, half arbitrary.
    """
    if divergence_witness(F) is not None:
        return _skip("determinant_sum", F, "V(F) is infinite")
    n, d = F.n, F.d
    rng = np.random.default_rng(seed)
    res = res or _minimize(F, seed)
    rhs = math.factorial(n) / n**n * d**n * res.m_estimate ** (2 * n / d)
    worst = math.inf
    for t in range(trials):
        u = rng.normal(scale=0.7, size=d)
        if t % 2 == 0:
            u = 0.5 * (u + u[list(F.pair)])
        u -= u.mean()
        lhs = tuple_determinant_sum(F, np.exp(u))
        worst = min(worst, math.log(lhs) - math.log(rhs))
    return _report("determinant_sum", F, worst, 1e-9, trials=trials, rhs=rhs)


def check_wedge_sum(trials: int = 1000, seed: int = 0) -> CheckReport:
    """``sum_j ||K_1^...^K_N^L_j||^2 >= ||K_1^...^K_N||^2 ||L_1^...^L_{N+1}||^2`` for unit ``L_j``."""
    rng = np.random.default_rng(seed)
    worst, witness = math.inf, None
    for t in range(trials):
        M = int(rng.integers(1, 7))
        N = int(rng.integers(1, 5))
        K = rng.normal(size=(N, M)) + 1j * rng.normal(size=(N, M))
        L = rng.normal(size=(N + 1, M)) + 1j * rng.normal(size=(N + 1, M))
        if rng.uniform() < 0.3:  # nearly dependent L's stress the inequality
            L[-1] = L[0] + 1e-3 * L[-1]
        L /= np.linalg.norm(L, axis=1, keepdims=True)
        lhs = sum(wedge_norm(np.vstack([K, L[j]])) ** 2 for j in range(N + 1))
        rhs = wedge_norm(K) ** 2 * wedge_norm(L) ** 2
        rel = (lhs - rhs) / max(lhs, rhs, 1e-300)
        if rel < worst:
            worst, witness = rel, {"trial": t, "M": M, "N": N, "lhs": lhs, "rhs": rhs}
    return _report("wedge_sum", None, worst, 1e-9, trials=trials, worst_instance=witness)


# ---------------------------------------------------------------- factor selection


def check_factor_selection(F: DecomposableForm, trials: int = 1000, seed: int = 0,
                 res: MinimizationResult | None = None) -> CheckReport:
    """Greedy factor selection against the ``c2`` bound, at the minimizer and through ``T^{-1} x``."""
    if divergence_witness(F) is not None:
        return _skip("factor_selection", F, "V(F) is infinite")
    n, d = F.n, F.d
    rng = np.random.default_rng(seed)
    res = res or _minimize(F, seed)
    ap = a_prime(F, res.minimizers).a_prime
    table = constants(n, d, ap)
    T = res.T_opt.entries
    Tinv = np.linalg.inv(T)
    G = raw_compose(F, T)
    mG = height(G)
    worst = {"at_minimizer": math.inf, "composed": math.inf}
    for t in range(trials):
        x = rng.normal(size=n) * np.exp(rng.uniform(-3, 3))
        if t % 4 == 0:  # points near a zero direction of some factor
            i = int(rng.integers(d))
            L = G.unit_factors()[i]
            x = x - np.real(np.vdot(L, x)) * np.real(L) / max(np.dot(np.real(L), np.real(L)), 1e-300) * 0.999
        sel = select_factors(G, x, table)
        lhs, rhs = selection_sides(G, x, sel, mG, ap, table.c2)
        worst["at_minimizer"] = min(worst["at_minimizer"], rhs - lhs)
        # the same point seen through T: the factors of F at T x
        y = T @ x
        lhs2, rhs2 = selection_sides(F, y, sel, res.m_estimate, ap, table.c2, norm_x=float(np.linalg.norm(Tinv @ y)))
        worst["composed"] = min(worst["composed"], rhs2 - lhs2)
    return _report("factor_selection", F, min(worst.values()), 1e-9, margins=worst, a_prime=ap, c2=table.c2, trials=trials)


# ---------------------------------------------------------------- integral reduction


def random_unimodular(rng: np.random.Generator, n: int, steps: int = 4) -> np.ndarray:
    """Product of random elementary integer column operations and sign flips."""
    U = np.eye(n, dtype=np.int64)
    for _ in range(steps):
        i, j = rng.choice(n, size=2, replace=False)
        U[:, i] += int(rng.integers(-2, 3)) * U[:, j]
    U[:, 0] *= int(rng.choice([-1, 1]))
    return U


def _reduction_margins(F: DecomposableForm, res: MinimizationResult, Y: np.ndarray) -> dict:
    n, d = F.n, F.d
    m = res.m_estimate
    red = reduce_integral(F, res)
    S = np.array(red.S_construction.entries, dtype=float)
    A = np.linalg.inv(res.T_opt.entries) @ S
    ratios = np.linalg.norm(Y @ A.T, axis=1) / np.linalg.norm(Y, axis=1)
    c7 = n ** (-1.5) / math.factorial(n) ** 2
    c8 = n ** (n + 0.5)
    return {
        "height": math.log(red.bound) - math.log(red.H_construction),
        "M_at_least_1": math.log(red.M_upper) + 1e-9,
        "sandwich_lower": math.log(float(ratios.min())) - math.log(c7 * m ** (-1 / d)),
        "sandwich_upper": math.log(c8 * m ** ((n - 1) / d)) - math.log(float(ratios.max())),
        "m_lower": math.log(m) - math.log(n ** (-(n + 0.5) * d / n)),
    }


def check_integral_reduction(F: DecomposableForm, trials: int = 1, vectors: int = 100, seed: int = 0,
                 res: MinimizationResult | None = None) -> CheckReport:
    """Integral reduction: height bound for ``F o S``, the lower bound of ``M``, and the norm sandwich.

    Trial 0 uses ``F``; later trials use ``F o U`` for random unimodular ``U``.
    """
    if F.int_coeffs is None:
        return _skip("integral_reduction", F, "form has no integer expansion")
    try:
        nv = nonvanishing_on_integers(F)
    except FormError as exc:
        return _skip("integral_reduction", F, str(exc))
    if not nv:
        return _skip("integral_reduction", F, "form vanishes at a nonzero integer point")
    rng = np.random.default_rng(seed)
    worst: dict = {}
    for t in range(trials):
        if t == 0:
            G, r = F, res or _minimize(F, seed)
        else:
            G = compose(F, random_unimodular(rng, F.n))
            r = _minimize(G, seed + t)
        Y = rng.normal(size=(vectors, F.n))
        for k, v in _reduction_margins(G, r, Y).items():
            worst[k] = min(worst.get(k, math.inf), v)
    return _report("integral_reduction", F, min(worst.values()), 1e-9, margins=worst, trials=trials, vectors=vectors)


# ---------------------------------------------------------------- F_eps family


def check_eps_family(d: int = 4, eps: float = 1e-3, ps=()) -> CheckReport:
    """The two-parameter family whose volume is much larger than its geometric height predicts.

    Checks ``V(F_eps) > -log(eps)/12`` when ``eps < (3e)^{-2}``, the bracket
    ``(1 - eps^2)^l <= m <= (1 + eps^2)^l``, integrality of ``p^2 F_eps``,
    and stability of the fitted constants across ``p``.
    """
    l = d // 2
    F = battery.f_eps(d, eps)
    margins = {}
    details: dict = {}
    if eps < (3 * math.e) ** -2:
        V = volume_radial(F).value
        margins["volume"] = math.log(V) - math.log(-math.log(eps) / 12)
        details["V"] = V
    res = _minimize(F)
    lo_b, hi_b = (1 - eps**2) ** l, (1 + eps**2) ** l
    margins["bracket_lower"] = (res.lower_bound - lo_b) / lo_b
    margins["bracket_upper"] = (hi_b - res.m_estimate) / hi_b
    details["m_bracket"] = [res.lower_bound, res.m_estimate]
    details["expected_bracket"] = [lo_b, hi_b]
    sharp, shape, small = [], [], []
    for p in ps:
        G = battery.integral_f_eps(d, p)
        got = {k: round(v) for k, v in expand(G).items() if abs(v) > 0.5}
        want = {(2 * l, 0): p, (l, l): -p * p - 1, (0, 2 * l): p}
        resid = max(abs(v - want.get(k, 0)) for k, v in expand(G).items())
        margins["integral_p%d" % p] = 0.0 if got == want and G.int_coeffs == want and resid < 1e-6 * p * p else -1.0
        mG = _minimize(G).m_estimate
        VG = volume_radial(G).value
        sharp.append(VG / (mG ** (-2 / d) * math.log(mG)))
        shape.append(VG / (mG ** (-2 / d) * (1 + abs(math.log(mG)))))
        small.append(VG / (p ** (-4 / d) * math.log(p)))
    if ps:
        margins["sharpness_stability"] = math.log(2) - math.log(max(sharp) / min(sharp))
        details.update(sharpness_constants=sharp, shape_constants=shape, p_constants=small, ps=list(ps))
    return _report("eps_family", F, min(margins.values()), 1e-9, margins=margins, **details)


# ---------------------------------------------------------------- asymptotics


@dataclass
class Experiment:
    rows: list  # dicts with m, count, main, residual, ratio, stable
    fitted_exponent: float
    predicted_exponent: float
    slack: float
    count_bound_constant: float
    a_prime: float
    volume: float
    m_height: float
    passed_exponent: bool
    passed_ratio: bool

    def to_dict(self) -> dict:
        return {
            "rows": self.rows,
            "fitted_exponent": self.fitted_exponent,
            "predicted_exponent": self.predicted_exponent,
            "slack": self.slack,
            "count_bound_constant": self.count_bound_constant,
            "a_prime": self.a_prime,
            "volume": self.volume,
            "m_height": self.m_height,
            "passed_exponent": self.passed_exponent,
            "passed_ratio": self.passed_ratio,
        }


def fit_residual_exponent(ms, residuals) -> float:
    """Slope of log(running max |residual|) against log m."""
    env = np.maximum.accumulate(np.abs(np.asarray(residuals, dtype=float)))
    keep = env > 0
    if keep.sum() < 3:
        raise FormError("too few nonzero residuals for a stable fit")
    x = np.log(np.asarray(ms, dtype=float)[keep])
    return float(np.polyfit(x, np.log(env[keep]), 1)[0])


def asymptotic_experiment(F: DecomposableForm, ms, slack: float = 0.15, ratio_tol: float = 0.02,
                          max_box: int = 10**5) -> Experiment:
    """Counts against ``m^{n/d} V(F)`` over a schedule of ``m``."""
    from dform.lattice import certified_radius, count_exact, growth_profile

    n, d = F.n, F.d
    res = _minimize(F)
    ap = a_prime(F, res.minimizers).a_prime
    V = volume_radial(F).value
    ms = list(ms)
    if certified_radius(F, 1) is not None:
        counts = [count_exact(F, m).count for m in ms]
        stable = [True] * len(ms)
    else:
        prof = growth_profile(F, ms, max_box=max_box)
        counts, stable = prof.counts, prof.stable
    rows = []
    c3 = 0.0
    for m, c, s in zip(ms, counts, stable):
        main = float(m) ** (n / d) * V
        rows.append({"m": m, "count": c, "main": main, "residual": c - main, "ratio": c / main, "stable": s})
        c3 = max(c3, c / ((float(m) / res.m_estimate) ** (n / d) + float(m) ** ((n - 1) / d)))
    expo = fit_residual_exponent(ms, [r["residual"] for r in rows])
    pred = (n - 1) / (d - ap)
    return Experiment(rows, expo, pred, slack, c3, ap, V, res.m_estimate,
                      expo <= pred + slack, abs(rows[-1]["ratio"] - 1) <= ratio_tol)


# ---------------------------------------------------------------- exceptional exponent grid


def check_a_prime_grid(ns=(2, 3), dmax: int = 8, seeds=(0, 1), starts: int = 4) -> CheckReport:
    """Structural bounds on a' for generic forms over an (n, d) grid."""
    rows = []
    worst = math.inf
    for n in ns:
        for d in range(n, dmax + 1):
            for seed in seeds:
                F = battery.generic(n, d, seed=seed)
                res = minimize_height_real(F, OptimizerConfig(seed=seed, starts=starts))
                rep = a_prime(F, res.minimizers)
                a = rep.a_prime
                slack = [a - 1, d / n - a]
                if a < d / n - 1e-9:
                    slack.append(d / n - 1 / (n * (n - 1)) - a)
                if math.gcd(n, d) == 1:
                    slack.append(d / n - a - 1e-12)
                worst = min(worst, min(slack))
                rows.append({"n": n, "d": d, "seed": seed, "a_prime": a, "s_j": rep.s_j,
                             "boundary": rep.boundary, "cap_exceeded": rep.cap_exceeded})
    return _report("a_prime_grid", None, worst, 1e-9, rows=rows)


# ---------------------------------------------------------------- suite


def run_all(trials: int = 200, seed: int = 0, forms: dict | None = None) -> list:
    forms = forms if forms is not None else battery.standard_battery()
    reports = [check_wedge_sum(trials, seed)]
    for name, F in forms.items():
        res = _minimize(F, seed)
        finite = divergence_witness(F) is None
        V = volume_radial(F).value if finite and F.n <= 3 else None
        batch = [
            check_scaling_laws(F, trials=2, seed=seed),
            check_height_lower_bounds(F, res, V) if finite else _skip("height_lower_bounds", F, "V(F) is infinite"),
            check_determinant_sum(F, trials, seed, res),
            check_factor_selection(F, trials, seed, res),
            check_integral_reduction(F, max(1, trials // 10), 100, seed, res),
        ]
        for r in batch:
            r.details.setdefault("name", name)
        reports.extend(batch)
    reports.append(check_eps_family(ps=(5, 11, 101)))
    reports.append(check_a_prime_grid(seeds=(seed,)))
    return reports
