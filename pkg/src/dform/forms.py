"""Decomposable forms as conjugate-paired lists of complex linear factors.

A form in ``n`` variables of degree ``d`` is stored as a ``(d, n)`` complex
array of coefficient vectors together with a positive ``scale`` and a
``sign``.  Complex factors come in adjacent conjugate pairs; real factors
come first.  When a form is known to have integer coefficients the exact
expansion is carried along in ``int_coeffs`` so lattice enumeration never
has to trust floating point.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

REAL_TOL = 1e-12
PAIR_TOL = 1e-9
EVAL_IMAG_TOL = 1e-9


class FormError(ValueError):
    """Raised for malformed forms or violated preconditions."""


Monomial = tuple
PolyCoeffs = dict  # Monomial -> coefficient (int, float or complex)


@dataclass(frozen=True)
class LinearFactor:
    coeffs: np.ndarray
    kind: str  # "real" | "pair-lead" | "pair-trail"
    pair_index: int


@dataclass(frozen=True)
class Transform:
    """Real ``n x n`` change of variables acting on the right of factor rows."""

    entries: np.ndarray
    det: float

    @classmethod
    def from_matrix(cls, m) -> "Transform":
        a = np.array(m, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise FormError("transform must be a square matrix")
        det = float(np.linalg.det(a))
        if det == 0.0 or not np.isfinite(det):
            raise FormError("singular transform")
        a.setflags(write=False)
        return cls(a, det)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def inverse(self) -> "Transform":
        return Transform.from_matrix(np.linalg.inv(self.entries))

    def is_integral(self) -> bool:
        return bool(np.all(self.entries == np.round(self.entries)))

    def int_entries(self) -> list[list[int]]:
        if not self.is_integral():
            raise FormError("transform is not integral")
        return [[int(v) for v in row] for row in np.round(self.entries)]


@dataclass(frozen=True)
class DecomposableForm:
    factors: np.ndarray  # (d, n) complex, canonical order
    pair: tuple  # involution: pair[i] is the conjugate partner of i
    scale: float = 1.0
    sign: int = 1
    int_coeffs: Optional[dict] = field(default=None, compare=False)

    @property
    def n(self) -> int:
        return self.factors.shape[1]

    @property
    def d(self) -> int:
        return self.factors.shape[0]

    @property
    def integral(self) -> bool:
        return self.int_coeffs is not None

    @property
    def real_indices(self) -> list[int]:
        return [i for i in range(self.d) if self.pair[i] == i]

    @property
    def pair_leads(self) -> list[int]:
        return [i for i in range(self.d) if self.pair[i] > i]

    def linear_factors(self) -> list[LinearFactor]:
        out = []
        for i in range(self.d):
            j = self.pair[i]
            kind = "real" if j == i else ("pair-lead" if j > i else "pair-trail")
            out.append(LinearFactor(self.factors[i].copy(), kind, j))
        return out

    def absorbed_factors(self) -> np.ndarray:
        """Factor rows with the scale spread evenly, so their product is ``|F|``."""
        return self.factors * self.scale ** (1.0 / self.d)

    def unit_factors(self) -> np.ndarray:
        return self.factors / np.linalg.norm(self.factors, axis=1)[:, None]

    def to_document(self) -> dict:
        doc = {
            "n": self.n,
            "degree": self.d,
            "factors": [[[float(c.real), float(c.imag)] for c in row] for row in self.factors],
            "scale": self.sign * self.scale,
        }
        if self.int_coeffs is not None:
            doc["coeffs"] = {",".join(map(str, k)): int(v) for k, v in sorted(self.int_coeffs.items())}
            doc["integral"] = True
        return doc

    def digest(self) -> str:
        import hashlib

        payload = json.dumps(self.to_document(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


# ---------------------------------------------------------------- construction


def _lead_key(v: np.ndarray) -> tuple:
    return tuple(np.round(v.real, 12)) + tuple(np.round(v.imag, 12))


def make_form(factors, scale: float = 1.0, int_coeffs=None, sign: int = 1) -> DecomposableForm:
    """Canonicalize a factor list: validate pairing, order reals then pairs."""
    L = np.array(factors, dtype=complex)
    if L.ndim != 2 or L.shape[0] < 1 or L.shape[1] < 1:
        raise FormError("factors must be a non-empty d x n array")
    if not np.isfinite(L).all():
        raise FormError("non-finite factor coefficient")
    if scale == 0 or not math.isfinite(scale):
        raise FormError("scale must be finite and nonzero")
    if scale < 0:
        sign, scale = -sign, -scale
    norms = np.linalg.norm(L, axis=1)
    if np.any(norms == 0):
        raise FormError("zero linear factor")
    d = L.shape[0]
    is_real = np.abs(L.imag).max(axis=1) <= REAL_TOL * norms
    L[is_real] = L[is_real].real
    reals = [L[i].real.astype(complex) for i in range(d) if is_real[i]]
    pending = [i for i in range(d) if not is_real[i]]
    pairs = []
    used = set()
    for i in pending:
        if i in used:
            continue
        used.add(i)
        target = np.conj(L[i])
        best, best_err = None, np.inf
        for j in pending:
            if j in used:
                continue
            err = np.linalg.norm(L[j] - target)
            if err < best_err:
                best, best_err = j, err
        if best is None or best_err > PAIR_TOL * norms[i]:
            raise FormError("conjugate pairing violated: factor %d has no conjugate partner" % i)
        used.add(best)
        v = L[i]
        nz = np.flatnonzero(np.abs(v.imag) > REAL_TOL * norms[i])
        lead = v if v.imag[nz[0]] > 0 else np.conj(v)
        pairs.append(lead)
    reals.sort(key=_lead_key)
    pairs.sort(key=_lead_key)
    rows = list(reals)
    pair_idx = list(range(len(reals)))
    for p in pairs:
        k = len(rows)
        rows.extend([p, np.conj(p)])
        pair_idx.extend([k + 1, k])
    arr = np.array(rows, dtype=complex)
    arr.setflags(write=False)
    if int_coeffs is not None:
        int_coeffs = {tuple(int(e) for e in k): int(c) for k, c in int_coeffs.items() if c != 0}
    return DecomposableForm(arr, tuple(pair_idx), float(scale), int(sign), int_coeffs)


def _parse_exponent(key, n: int) -> tuple:
    if isinstance(key, (tuple, list)):
        parts = list(key)
    else:
        s = str(key).replace(" ", ",").replace(";", ",")
        parts = [p for p in s.split(",") if p != ""]
        if len(parts) == 1 and len(parts[0]) == n and n > 1:
            parts = list(parts[0])
    exps = tuple(int(p) for p in parts)
    if len(exps) != n or any(e < 0 for e in exps):
        raise FormError("bad exponent key %r for n=%d" % (key, n))
    return exps


def _parse_complex(c) -> complex:
    if isinstance(c, (list, tuple)):
        if len(c) != 2:
            raise FormError("complex coefficient must be [re, im]")
        return complex(float(c[0]), float(c[1]))
    if isinstance(c, str):
        return complex(c.replace("i", "j"))
    return complex(c)


def parse_form(doc) -> DecomposableForm:
    """Build a form from a JSON-compatible document (dict, JSON string or path)."""
    if isinstance(doc, str):
        text = doc
        if not text.lstrip().startswith("{"):
            with open(doc) as fh:
                text = fh.read()
        doc = json.loads(text)
    if not isinstance(doc, Mapping):
        raise FormError("form document must be a mapping")
    try:
        n = int(doc["n"])
    except (KeyError, TypeError, ValueError):
        raise FormError("form document needs an integer 'n'")
    if n < 1:
        raise FormError("n must be positive")
    scale_val = float(doc.get("scale", 1.0))
    if "factors" in doc:
        rows = [[_parse_complex(c) for c in row] for row in doc["factors"]]
        if any(len(r) != n for r in rows):
            raise FormError("each factor needs n coefficients")
        if "degree" in doc and int(doc["degree"]) != len(rows):
            raise FormError("degree does not match the number of factors")
        ints = None
        if doc.get("coeffs") is not None:
            ints = {_parse_exponent(k, n): int(v) for k, v in doc["coeffs"].items()}
        F = make_form(rows, scale_val, ints)
        if ints is not None:
            _check_expansion(F, ints)
        return F
    if "coeffs" in doc:
        coeffs = {}
        for k, v in doc["coeffs"].items():
            e = _parse_exponent(k, n)
            if isinstance(v, float) and not v.is_integer():
                raise FormError("expanded coefficients must be integers")
            coeffs[e] = coeffs.get(e, 0) + int(v)
        coeffs = {k: v for k, v in coeffs.items() if v != 0}
        if not coeffs:
            raise FormError("form is identically zero")
        degs = {sum(k) for k in coeffs}
        if len(degs) != 1:
            raise FormError("non-homogeneous input")
        d = degs.pop()
        if "degree" in doc and int(doc["degree"]) != d:
            raise FormError("degree does not match the coefficients")
        if n >= 3:
            raise FormError("for n >= 3 the factorization must be supplied in 'factors'")
        if n == 1:
            ((e, c),) = coeffs.items()
            return make_form([[1.0]] * d, float(c) * scale_val, coeffs if scale_val == 1 else None)
        F = factor_binary(coeffs)
        if scale_val != 1.0:
            F = make_form(F.factors, F.sign * F.scale * scale_val)
        return F
    raise FormError("form document needs 'factors' or 'coeffs'")


def _check_expansion(F: DecomposableForm, ints: dict, rtol: float = 1e-8) -> None:
    got = expand(F)
    scale_ref = max(abs(v) for v in ints.values())
    for k in set(got) | set(ints):
        if abs(got.get(k, 0.0) - ints.get(k, 0)) > rtol * scale_ref:
            raise FormError("factors do not expand to the supplied integer coefficients")


# ---------------------------------------------------------------- evaluation


def evaluate(F: DecomposableForm, x) -> np.ndarray | float:
    """Signed value of ``F`` at real point(s) ``x`` (shape ``(n,)`` or ``(k, n)``).

    Conjugate pairs are multiplied as ``|L(x)|**2`` so the result is real by
    construction.
    """
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    vals = X @ F.factors.T  # (k, d)
    out = np.full(X.shape[0], F.sign * F.scale)
    for i in F.real_indices:
        out = out * vals[:, i].real
    for i in F.pair_leads:
        out = out * np.abs(vals[:, i]) ** 2
    return float(out[0]) if single else out


def evaluate_complex(F: DecomposableForm, x) -> np.ndarray:
    """Naive complex product of all factors; used to audit conjugate closure."""
    X = np.atleast_2d(np.asarray(x, dtype=float))
    return F.sign * F.scale * np.prod(X @ F.factors.T, axis=1)


def evaluate_exact(F: DecomposableForm, x: Sequence[int]) -> int:
    if F.int_coeffs is None:
        raise FormError("form has no exact integer expansion")
    return poly_eval_int(F.int_coeffs, x)


def poly_eval_int(coeffs: Mapping, x: Sequence[int]) -> int:
    total = 0
    xs = [int(v) for v in x]
    for e, c in coeffs.items():
        t = c
        for xi, ei in zip(xs, e):
            if ei:
                t *= xi**ei
        total += t
    return total


def poly_eval(coeffs: Mapping, x) -> np.ndarray:
    X = np.atleast_2d(np.asarray(x, dtype=float))
    out = np.zeros(X.shape[0], dtype=complex)
    for e, c in coeffs.items():
        out += c * np.prod(X ** np.array(e), axis=1)
    return out


# ---------------------------------------------------------------- algebra


def expand(F: DecomposableForm) -> PolyCoeffs:
    """Expanded real coefficients ``{exponent tuple: float}`` of ``F``."""
    n, d = F.n, F.d
    poly = np.zeros((d + 1,) * n, dtype=complex)
    poly[(0,) * n] = F.sign * F.scale
    for row in F.factors:
        new = np.zeros_like(poly)
        for k in range(n):
            if row[k] == 0:
                continue
            src = [slice(None)] * n
            dst = [slice(None)] * n
            src[k] = slice(0, d)
            dst[k] = slice(1, d + 1)
            new[tuple(dst)] += row[k] * poly[tuple(src)]
        poly = new
    out = {}
    tol = 1e-14 * max(1.0, float(np.abs(poly).max()))
    for idx in itertools.product(range(d + 1), repeat=n):
        if sum(idx) != d:
            continue
        c = poly[idx]
        if abs(c) > tol:
            out[idx] = float(c.real)
    return out


def integer_expansion(F: DecomposableForm, snap: bool = False, tol: float = 1e-6) -> dict:
    """Exact integer coefficients; with ``snap`` round a float expansion if every residual < ``tol``."""
    if F.int_coeffs is not None:
        return dict(F.int_coeffs)
    if not snap:
        raise FormError("form carries no exact integer expansion (pass snap=True to round)")
    got = expand(F)
    out = {}
    for k, v in got.items():
        r = round(v)
        if abs(v - r) > tol * max(1.0, abs(v)):
            raise FormError("expansion is not integral (coefficient %r)" % v)
        if r:
            out[k] = int(r)
    return out


def with_integer_expansion(F: DecomposableForm, snap_tol: float = 1e-6) -> DecomposableForm:
    ints = integer_expansion(F, snap=True, tol=snap_tol)
    return make_form(F.factors, F.sign * F.scale, ints)


def _pmul(a: dict, b: dict) -> dict:
    out: dict = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            k = tuple(x + y for x, y in zip(ka, kb))
            out[k] = out.get(k, 0) + va * vb
    return {k: v for k, v in out.items() if v != 0}


def compose_int_coeffs(coeffs: Mapping, U: Sequence[Sequence[int]]) -> dict:
    """Exact ``P(U y)`` for an integer polynomial ``P`` and integer matrix ``U``."""
    n = len(U)
    m = len(U[0])
    subs = []
    for k in range(n):
        lin = {}
        for j in range(m):
            if U[k][j]:
                e = [0] * m
                e[j] = 1
                lin[tuple(e)] = int(U[k][j])
        subs.append(lin)
    one = {(0,) * m: 1}
    powers = [[one] for _ in range(n)]
    out: dict = {}
    for e, c in coeffs.items():
        term = {(0,) * m: int(c)}
        for k, ek in enumerate(e):
            while len(powers[k]) <= ek:
                powers[k].append(_pmul(powers[k][-1], subs[k]))
            term = _pmul(term, powers[k][ek])
        for k2, v in term.items():
            out[k2] = out.get(k2, 0) + v
    return {k: v for k, v in out.items() if v != 0}


def compose(F: DecomposableForm, T) -> DecomposableForm:
    """``F o T``: each coefficient row ``L`` maps to ``L T``."""
    if not isinstance(T, Transform):
        T = Transform.from_matrix(T)
    if T.n != F.n:
        raise FormError("transform size does not match the form")
    rows = F.factors @ T.entries
    ints = None
    if F.int_coeffs is not None and T.is_integral():
        ints = compose_int_coeffs(F.int_coeffs, T.int_entries())
    return make_form(rows, F.sign * F.scale, ints)


def scale(F: DecomposableForm, a: float) -> DecomposableForm:
    if not a > 0:
        raise FormError("scale factor must be positive")
    ints = None
    if F.int_coeffs is not None and float(a).is_integer():
        ints = {k: v * int(a) for k, v in F.int_coeffs.items()}
    return DecomposableForm(F.factors, F.pair, F.scale * a, F.sign, ints)


def restrict_variables(F: DecomposableForm, k: int, ints: Optional[dict] = None) -> DecomposableForm:
    """Keep the first ``k`` coordinates of every factor (restriction to a coordinate subspace)."""
    rows = F.factors[:, :k]
    if np.any(np.linalg.norm(rows, axis=1) == 0):
        raise FormError("form vanishes identically on the subspace")
    return make_form(rows, F.sign * F.scale, ints)


# ---------------------------------------------------------------- binary forms


def _sqf_parts(coeffs: Mapping) -> Optional[list]:
    """Square-free decomposition of an integer binary form via sympy, if integral."""
    if not all(isinstance(v, (int, np.integer)) or (isinstance(v, Fraction)) for v in coeffs.values()):
        return None
    import sympy

    x, y = sympy.symbols("x y")
    expr = sum(int(c) * x ** e[0] * y ** e[1] for e, c in coeffs.items())
    content, parts = sympy.sqf_list(sympy.Poly(expr, x, y))
    out = [({(0, 0): int(content)}, 1)] if content != 1 else []
    for p, mult in parts:
        pd = p.as_dict()
        out.append(({(int(a), int(b)): int(c) for (a, b), c in pd.items()}, int(mult)))
    return out


def _binary_roots(coeffs: Mapping, d: int) -> tuple[list, int, float]:
    """Roots of ``p(t) = F(t, 1)``, the multiplicity at infinity and the leading coefficient."""
    c = [0.0] * (d + 1)
    for (a, b), v in coeffs.items():
        c[a] = float(v)
    deg = max(a for (a, b), v in coeffs.items() if v != 0)
    poly = c[: deg + 1][::-1]
    roots = list(np.roots(poly)) if deg > 0 else []
    roots = [_polish(poly, r) for r in roots]
    return roots, d - deg, c[deg]


def _polish(poly, r, steps: int = 3):
    dp = np.polyder(poly)
    for _ in range(steps):
        f = np.polyval(poly, r)
        g = np.polyval(dp, r)
        if g == 0:
            break
        step = f / g
        if not np.isfinite(step) or abs(step) > 1e-3 * (1 + abs(r)):
            break
        r = r - step
    return r


def factor_binary(coeffs: Mapping, check_rtol: float = 1e-8) -> DecomposableForm:
    """Factor a binary form ``{(a, b): c}`` into linear factors ``(1, -r)`` and ``(0, 1)``.

    Integer inputs are first split square-free (exact multiplicities), then the
    roots of each part come from the companion matrix.  The product is
    re-expanded and compared against the input.
    """
    coeffs = {tuple(int(e) for e in k): v for k, v in coeffs.items() if v != 0}
    if not coeffs:
        raise FormError("form is identically zero")
    if any(len(k) != 2 for k in coeffs):
        raise FormError("factor_binary needs a binary form")
    degs = {sum(k) for k in coeffs}
    if len(degs) != 1:
        raise FormError("non-homogeneous input")
    d = degs.pop()
    if d < 1:
        raise FormError("constant form")
    is_int = all(float(v).is_integer() for v in coeffs.values())
    parts = _sqf_parts({k: int(v) for k, v in coeffs.items()}) if is_int else None
    if parts is None:
        parts = [(coeffs, 1)]
    rows = []
    lead = 1.0
    for part, mult in parts:
        pdeg = sum(next(iter(part)))
        if pdeg == 0:
            lead *= float(part[(0, 0)]) ** mult
            continue
        roots, inf_mult, lc = _binary_roots(part, pdeg)
        lead *= lc**mult
        for _ in range(mult):
            rows.extend([[0.0, 1.0]] * inf_mult)
            for r in roots:
                if abs(r.imag) <= 1e-10 * (1 + abs(r)):
                    r = complex(r.real, 0.0)
                rows.append([1.0, -r])
    rows = _pair_roots(rows)
    F = make_form(rows, lead, {k: int(v) for k, v in coeffs.items()} if is_int else None)
    got = expand(F)
    ref = max(abs(float(v)) for v in coeffs.values())
    for k in set(got) | set(coeffs):
        if abs(got.get(k, 0.0) - float(coeffs.get(k, 0))) > check_rtol * ref * max(1, d):
            raise FormError("ill-conditioned factorization: re-expansion error exceeds tolerance")
    return F


def _pair_roots(rows: list) -> list:
    """Force conjugate roots to be exact conjugates of each other."""
    out = []
    cplx = []
    for r in rows:
        if np.iscomplexobj(np.array(r)) and abs(complex(r[1]).imag) > 0:
            cplx.append(complex(r[1]))
        else:
            out.append([complex(r[0]).real, complex(r[1]).real])
    cplx.sort(key=lambda z: (z.real, abs(z.imag), z.imag))
    used = [False] * len(cplx)
    for i, z in enumerate(cplx):
        if used[i]:
            continue
        used[i] = True
        best, berr = None, np.inf
        for j in range(len(cplx)):
            if not used[j]:
                e = abs(cplx[j] - np.conj(z))
                if e < berr:
                    best, berr = j, e
        if best is None or berr > 1e-6 * (1 + abs(z)):
            raise FormError("complex root without conjugate partner")
        used[best] = True
        w = complex(0.5 * (z.real + cplx[best].real), 0.5 * (abs(z.imag) + abs(cplx[best].imag)))
        out.append([1.0, w])
        out.append([1.0, np.conj(w)])
    return out


def binary_coeffs_from_dict(d: Mapping) -> dict:
    return {_parse_exponent(k, 2): v for k, v in d.items()}


def format_poly(coeffs: Mapping, names: Iterable[str] = ("X", "Y", "Z", "W")) -> str:
    names = list(names)
    terms = []
    for e, c in sorted(coeffs.items(), reverse=True):
        mono = "".join(
            names[i] + ("^%d" % k if k > 1 else "") for i, k in enumerate(e) if k
        )
        terms.append("%s%s" % (c, ("*" + mono) if mono else ""))
    return " + ".join(terms) if terms else "0"
