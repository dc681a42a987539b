"""Named test forms and seeded generic families."""

from __future__ import annotations

import cmath
import math

import numpy as np

from dform.forms import DecomposableForm, FormError, make_form, parse_form, with_integer_expansion


def _binary(coeffs: dict) -> DecomposableForm:
    return parse_form({"n": 2, "coeffs": coeffs})


def circle() -> DecomposableForm:
    """X^2 + Y^2."""
    return _binary({"2,0": 1, "0,2": 1})


def hyperbolic() -> DecomposableForm:
    """XY, infinite volume."""
    return _binary({"1,1": 1})


def cubic() -> DecomposableForm:
    """X^3 + 2Y^3."""
    return _binary({"3,0": 1, "0,3": 2})


def quartic() -> DecomposableForm:
    """(X^2 + 2Y^2)(2X^2 + Y^2)."""
    return _binary({"4,0": 2, "2,2": 5, "0,4": 2})


def pell() -> DecomposableForm:
    """X^2 - 2Y^2, infinite volume."""
    return _binary({"2,0": 1, "0,2": -2})


def f_eps(d: int, eps: float) -> DecomposableForm:
    """(X^l - eps^l Y^l)(eps^l X^l - Y^l) with l = d/2.

    Factors are ``X - rho^i eps Y`` and ``rho^i eps X - Y`` for the ``l``-th
    roots of unity ``rho^i``; the second product equals
    ``(-1)^{l+1} (eps^l X^l - Y^l)``, hence the sign.
    """
    if d < 2 or d % 2:
        raise FormError("d must be even")
    if not eps > 0:
        raise FormError("eps must be positive")
    l = d // 2
    roots = [cmath.exp(2j * math.pi * i / l) for i in range(l)]
    rows = [[1.0, -r * eps] for r in roots] + [[r * eps, -1.0] for r in roots]
    return make_form(np.array(rows, dtype=complex), sign=(-1) ** (l + 1))


def integral_f_eps(d: int, p: int) -> DecomposableForm:
    """p^2 F_eps with eps = p^{-1/l}, i.e. (pX^l - Y^l)(X^l - pY^l)."""
    l = d // 2
    G = f_eps(d, p ** (-1.0 / l))
    ints = {(2 * l, 0): p, (l, l): -p * p - 1, (0, 2 * l): p}
    return make_form(G.factors, G.sign * G.scale * p * p, ints)


def ternary() -> DecomposableForm:
    """((X + sqrt2 Y)^2 + Z^2)((X - sqrt2 Y)^2 + Z^2) = (X^2 + 2Y^2 + Z^2)^2 - 8X^2Y^2.

    Its real zeros are the irrational lines through (-+sqrt2, 1, 0), so the
    only integer zero is the origin and every rational plane other than
    ``Z = 0`` carries a restriction without real zeros.
    """
    r = math.sqrt(2)
    rows = [[1, r, 1j], [1, r, -1j], [1, -r, 1j], [1, -r, -1j]]
    return with_integer_expansion(make_form(np.array(rows, dtype=complex)))


def cubic_norm() -> DecomposableForm:
    """Norm form of Z[2^{1/3}]: d = n = 3, infinite volume."""
    t = 2 ** (1 / 3)
    rows = []
    for k in range(3):
        w = cmath.exp(2j * math.pi * k / 3)
        rows.append([1, t * w, (t * w) ** 2])
    return with_integer_expansion(make_form(np.array(rows, dtype=complex)))


def generic(n: int, d: int, seed: int = 0, pairs: int | None = None) -> DecomposableForm:
    """Gaussian random factors; ``pairs`` complex-conjugate pairs (default d // 2)."""
    rng = np.random.default_rng(seed)
    k = d // 2 if pairs is None else pairs
    if 2 * k > d:
        raise FormError("too many pairs for the degree")
    rows = []
    for _ in range(k):
        v = rng.normal(size=n) + 1j * rng.normal(size=n)
        rows += [v, v.conj()]
    for _ in range(d - 2 * k):
        rows.append(rng.normal(size=n).astype(complex))
    return make_form(np.array(rows))


NAMED = {
    "circle": circle,
    "hyperbolic": hyperbolic,
    "cubic": cubic,
    "quartic": quartic,
    "pell": pell,
    "ternary": ternary,
    "cubic-norm": cubic_norm,
}


def named(name: str) -> DecomposableForm:
    try:
        return NAMED[name]()
    except KeyError:
        raise FormError("unknown named form %r (known: %s)" % (name, ", ".join(sorted(NAMED)))) from None


def standard_battery(eps: float = 0.1) -> dict:
    """The forms used by the inequality sweeps."""
    return {
        "circle": circle(),
        "hyperbolic": hyperbolic(),
        "cubic": cubic(),
        "quartic": quartic(),
        "f_eps": f_eps(4, eps),
        "f_eps_integral": integral_f_eps(4, 5),
    }
