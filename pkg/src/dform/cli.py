"""Command line front end.

Every command prints one report envelope (JSON with ``--json``, otherwise a
short text summary) on standard output; errors go to standard error as JSON.
Exit status: 0 on success, 1 when a verification check fails, 2 on bad input.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from fractions import Fraction

import numpy as np

from dform import __version__, battery
from dform.forms import FormError, parse_form

EXIT_OK, EXIT_FAILED, EXIT_INPUT = 0, 1, 2


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings, numpy scalars become Python numbers."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else ("inf" if f > 0 else "-inf" if f < 0 else "nan")
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def load_form(arg: str):
    if arg in battery.NAMED:
        return battery.named(arg)
    return parse_form(arg)


def envelope(command: str, form, payload: dict, started: float) -> dict:
    return {
        "tool": "dform",
        "version": __version__,
        "command": command,
        "form": form.digest() if form is not None else None,
        "payload": payload,
        "timing": round(time.perf_counter() - started, 6),
    }


# ---------------------------------------------------------------- commands


def cmd_analyze(args):
    from dform.exceptional import a_prime
    from dform.geometry import constants
    from dform.heights import OptimizerConfig, height, minimize_height_real, ns_invariant, q_invariant

    F = load_form(args.form)
    res = minimize_height_real(F, OptimizerConfig(seed=args.seed, starts=args.starts))
    payload = {"n": F.n, "d": F.d, "H": height(F), "minimization": res.to_dict()}
    if F.n >= 2:
        rep = a_prime(F, res.minimizers)
        payload["exceptional"] = rep.to_dict()
        payload["constants"] = constants(F.n, F.d, rep.a_prime).to_dict()
        q = q_invariant(F)
        payload["Q"] = {"value": q.value, "unit_weight_value": q.unit_weight_value, "converged": q.converged,
                        "weights": q.weights}
        payload["NS"] = ns_invariant(F)
    return F, payload, True


def cmd_volume(args):
    from dform.volume import sphere_min, volume_monte_carlo, volume_radial

    F = load_form(args.form)
    ests = []
    if F.n <= 3:
        ests.append(volume_radial(F, args.tol))
    ests.append(volume_monte_carlo(F, args.samples, args.seed))
    payload = {"estimates": [e.to_dict() for e in ests]}
    sm = sphere_min(F)
    payload["sphere_min"] = {"value": sm.value, "certified_lower": sm.certified_lower, "witness": sm.witness}
    if args.out_dir:
        from dform.report import write_volume_report

        payload["files"] = write_volume_report(F, ests, args.out_dir)
    return F, payload, True


def cmd_count(args):
    from dform.lattice import count_exact

    F = load_form(args.form)
    res = count_exact(F, Fraction(args.m), strategy=args.strategy, box=args.box,
                      list_solutions=args.list_solutions, max_box=args.max_box)
    return F, res.to_dict(), True


def cmd_reduce(args):
    from dform.heights import OptimizerConfig, minimize_height_real, reduce_integral

    F = load_form(args.form)
    res = minimize_height_real(F, OptimizerConfig(seed=args.seed, starts=args.starts))
    red = reduce_integral(F, res, assume_nonvanishing=args.assume_nonvanishing)
    payload = {
        "m_estimate": res.m_estimate,
        "S": red.S.int_entries(),
        "M_upper": red.M_upper,
        "S_construction": red.S_construction.int_entries(),
        "H_construction": red.H_construction,
        "bound": red.bound,
        "successive_minima": list(red.minima.lambdas),
    }
    return F, payload, True


CHECKS = ("scaling_laws", "volume_lower_bound", "height_lower_bounds", "determinant_sum", "wedge_sum", "factor_selection", "integral_reduction", "eps_family", "a_prime_grid")


def cmd_verify(args):
    from dform import verify

    F = load_form(args.form) if args.form else None
    if args.check is None or args.all:
        forms = {"form": F} if F is not None else None
        reports = verify.run_all(args.trials, args.seed, forms)
    else:
        fn = getattr(verify, "check_" + args.check)
        if args.check == "wedge_sum":
            reports = [fn(args.trials, args.seed)]
        elif args.check == "eps_family":
            reports = [fn(args.d, args.eps, tuple(args.p or ()))]
        elif args.check == "a_prime_grid":
            reports = [fn(seeds=(args.seed,))]
        else:
            if F is None:
                raise FormError("--check %s needs --form" % args.check)
            if args.check in ("determinant_sum", "factor_selection", "integral_reduction", "scaling_laws"):
                reports = [fn(F, args.trials, seed=args.seed)]
            else:
                reports = [fn(F)]
    payload = {"checks": [r.to_dict() for r in reports], "all_passed": all(r.passed for r in reports)}
    if args.out_dir:
        from dform.report import write_verify_report

        payload["files"] = write_verify_report(reports, args.out_dir)
    return F, payload, payload["all_passed"]


def cmd_experiment(args):
    from dform.report import write_experiment_report
    from dform.verify import asymptotic_experiment

    F = load_form(args.form)
    ms = sorted({int(round(x)) for x in np.logspace(math.log10(args.m_min), math.log10(args.m_max), args.points)})
    exp = asymptotic_experiment(F, ms, slack=args.slack, max_box=args.max_box)
    payload = exp.to_dict()
    if args.out_dir:
        payload["files"] = write_experiment_report(exp, args.out_dir, title=args.form)
    return F, payload, exp.passed_exponent and exp.passed_ratio


def cmd_example(args):
    from dform.verify import check_eps_family

    if args.family == "eps":
        F = battery.f_eps(args.d, args.eps)
        rep = check_eps_family(args.d, args.eps, tuple(args.p or ()))
        payload = {"document": F.to_document(), "check": rep.to_dict()}
        return F, payload, rep.passed
    if args.family == "integral":
        if not args.p:
            raise FormError("--family integral needs --p")
        F = battery.integral_f_eps(args.d, args.p[0])
        return F, {"document": F.to_document()}, True
    F = battery.named(args.name)
    return F, {"document": F.to_document()}, True


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dform", description="Heights, volumes and integer point counts of decomposable forms.")
    p.add_argument("--version", action="version", version="dform " + __version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, form_required=True):
        sp.add_argument("--form", required=form_required,
                        help="form document: JSON file, inline JSON, or a named form (%s)" % ", ".join(sorted(battery.NAMED)))
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--json", action="store_true", help="print the full JSON envelope")

    sp = sub.add_parser("analyze", help="height, geometric height bracket, a', constants, Q and NS")
    common(sp)
    sp.add_argument("--starts", type=int, default=4)
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("volume", help="volume by radial quadrature and Monte Carlo, sphere minimum")
    common(sp)
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--samples", type=int, default=200_000)
    sp.add_argument("--out-dir", help="write CSV and figures here")
    sp.set_defaults(func=cmd_volume)

    sp = sub.add_parser("count", help="exact number of integer points with |F(x)| <= m")
    common(sp)
    sp.add_argument("--m", required=True, help="bound, integer or rational like 7/2")
    sp.add_argument("--box", type=int, help="half-width of the search box")
    sp.add_argument("--strategy", choices=("auto", "certified", "box", "growth"), default="auto")
    sp.add_argument("--max-box", type=int, default=10**4)
    sp.add_argument("--list-solutions", action="store_true")
    sp.set_defaults(func=cmd_count)

    sp = sub.add_parser("reduce", help="integral unimodular reduction and bound on the integral height")
    common(sp)
    sp.add_argument("--starts", type=int, default=4)
    sp.add_argument("--assume-nonvanishing", action="store_true")
    sp.set_defaults(func=cmd_reduce)

    sp = sub.add_parser("verify", help="run inequality checks")
    common(sp, form_required=False)
    sp.add_argument("--all", action="store_true")
    sp.add_argument("--check", choices=CHECKS)
    sp.add_argument("--trials", type=int, default=200)
    sp.add_argument("--d", type=int, default=4)
    sp.add_argument("--eps", type=float, default=1e-3)
    sp.add_argument("--p", type=int, nargs="*")
    sp.add_argument("--out-dir", help="write CSV and figures here")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("experiment", help="counts against the volume main term over a schedule of m")
    common(sp)
    sp.add_argument("--m-min", type=float, default=10.0)
    sp.add_argument("--m-max", type=float, default=1e4)
    sp.add_argument("--points", type=int, default=13)
    sp.add_argument("--slack", type=float, default=0.15)
    sp.add_argument("--max-box", type=int, default=10**5)
    sp.add_argument("--out-dir", help="write CSV and figures here")
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("example", help="emit example form documents")
    sp.add_argument("--family", choices=("eps", "integral", "named"), default="named")
    sp.add_argument("--name", default="circle")
    sp.add_argument("--d", type=int, default=4)
    sp.add_argument("--eps", type=float, default=1e-3)
    sp.add_argument("--p", type=int, nargs="*")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_example)
    return p


def _summary(env: dict) -> str:
    lines = ["dform %s  %s  form=%s" % (env["version"], env["command"], env["form"])]
    for k, v in env["payload"].items():
        if isinstance(v, (dict, list)):
            v = json.dumps(v, default=str)
            if len(v) > 200:
                v = v[:197] + "..."
        lines.append("  %s: %s" % (k, v))
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        F, payload, ok = args.func(args)
    except (FormError, ValueError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc), "command": args.command}), file=sys.stderr)
        return EXIT_INPUT
    env = _clean(envelope(args.command, F, payload, started))
    if args.json:
        print(json.dumps(env, indent=2, sort_keys=True))
    else:
        print(_summary(env))
    return EXIT_OK if ok else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
