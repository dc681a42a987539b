"""Exact counts of integer points with ``|F(x)| <= m``.

The origin is always counted.  Boundary cases are decided in exact integer
arithmetic on the expanded coefficients, and ``m`` is handled as a
``Fraction`` so that ``|F(x)| = m`` is never misclassified.

Binary forms are enumerated row by row: for fixed ``y`` the set of ``x`` with
``|F(x, y)| <= m`` is a union of intervals whose ends are real roots of
``F(x, y) = +-m``.  Integers near a floating-point root are checked exactly,
and each run of integers between them is classified by one exact check.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from dform import intlinalg
from dform.forms import DecomposableForm, FormError, compose_int_coeffs, make_form, poly_eval_int
from dform.volume import sphere_min

CERTIFIED = "certified-sphere-min"
USER_BOX = "user-box"
GROWTH = "stabilized-growth"


@dataclass
class CountResult:
    m: Fraction
    count: int
    bound: int  # half-width of the enumerated box
    bound_kind: str
    exhaustive: bool
    solutions: list | None = None
    radius: float | None = None  # certified Euclidean radius, when available
    history: list = field(default_factory=list)  # (box, count) for the growth strategy
    stable: bool = True

    def to_dict(self) -> dict:
        out = {
            "m": str(self.m),
            "count": self.count,
            "bound": self.bound,
            "bound_kind": self.bound_kind,
            "exhaustive": self.exhaustive,
            "radius": self.radius,
        }
        if self.history:
            out["history"] = [list(h) for h in self.history]
            out["stable"] = self.stable
        if self.solutions is not None:
            out["solutions"] = self.solutions
        return out


def as_fraction(m) -> Fraction:
    if isinstance(m, Fraction):
        q = m
    elif isinstance(m, float):
        q = Fraction(m).limit_denominator(10**6) if not m.is_integer() else Fraction(int(m))
    else:
        q = Fraction(m)
    if q < 0:
        raise FormError("m must be non-negative")
    return q


def _row_poly(coeffs: dict, d: int, y: int) -> list:
    """Integer coefficients (in x, highest power first) of F(x, y)."""
    p = [0] * (d + 1)
    for (i, j), c in coeffs.items():
        p[d - i] += c * y**j
    return p


def _horner(p: list, x: int) -> int:
    v = 0
    for c in p:
        v = v * x + c
    return v


def _float_roots(p: list, shift: float) -> list:
    q = [float(c) for c in p]
    q[-1] -= shift
    while len(q) > 1 and q[0] == 0.0:
        q.pop(0)
    if len(q) <= 1:
        return []
    r = np.roots(q)
    return [float(z.real) for z in r if abs(z.imag) <= 1e-6 * (1.0 + abs(z.real))]


def _row_solutions(p: list, m: Fraction, R: int, collect: bool):
    """Integers ``|x| <= R`` with ``|p(x)| <= m``; returns (count, list or None)."""
    num, den = m.numerator, m.denominator

    def ok(x):
        return abs(_horner(p, x)) * den <= num

    if all(c == 0 for c in p):
        xs = list(range(-R, R + 1)) if collect else None
        return 2 * R + 1, xs
    breaks = _float_roots(p, float(m)) + _float_roots(p, -float(m))
    special = set()
    for b in breaks:
        if -R - 3 <= b <= R + 3:
            f = math.floor(b)
            special.update(range(f - 2, f + 4))
    special = sorted(x for x in special if -R <= x <= R)
    count = 0
    out = [] if collect else None
    prev = -R - 1
    for s in special + [R + 1]:
        lo, hi = prev + 1, s - 1
        if lo <= hi:
            a, b = ok(lo), ok(hi)
            if a != b:
                raise FormError("root isolation failed on a run of integers")
            if a:
                count += hi - lo + 1
                if collect:
                    out.extend(range(lo, hi + 1))
        if s <= R and ok(s):
            count += 1
            if collect:
                out.append(s)
        prev = s
    return count, out


def _count_binary(coeffs: dict, d: int, m: Fraction, R: int, collect: bool):
    total = 0
    sols = [] if collect else None
    for y in range(-R, R + 1):
        c, xs = _row_solutions(_row_poly(coeffs, d, y), m, R, collect)
        total += c
        if collect:
            sols.extend([x, y] for x in xs)
    return total, sols


def _count_unary(coeffs: dict, d: int, m: Fraction, R: int, collect: bool):
    c = coeffs.get((d,), 0)
    sols = []
    total = 0
    for x in range(-R, R + 1):
        if abs(c * x**d) * m.denominator <= m.numerator:
            total += 1
            if collect:
                sols.append([x])
    return total, (sols if collect else None)


def _count_box(coeffs: dict, n: int, m: Fraction, R: int, collect: bool, budget: int):
    if (2 * R + 1) ** n > budget:
        raise FormError("enumeration budget exceeded (box of %d points)" % (2 * R + 1) ** n)
    total = 0
    sols = [] if collect else None
    for x in itertools.product(range(-R, R + 1), repeat=n):
        if abs(poly_eval_int(coeffs, x)) * m.denominator <= m.numerator:
            total += 1
            if collect:
                sols.append(list(x))
    return total, sols


def count_in_box(F: DecomposableForm, m, R: int, collect: bool = False, budget: int = 10**7):
    """Exact count over the box ``max|x_i| <= R``."""
    if F.int_coeffs is None:
        raise FormError("counting needs an exact integer expansion")
    m = as_fraction(m)
    if F.n == 1:
        return _count_unary(F.int_coeffs, F.d, m, R, collect)
    if F.n == 2:
        return _count_binary(F.int_coeffs, F.d, m, R, collect)
    return _count_box(F.int_coeffs, F.n, m, R, collect, budget)


def certified_radius(F: DecomposableForm, m) -> float | None:
    """Euclidean radius containing every solution, or None if ``|F|`` vanishes on the sphere."""
    m = as_fraction(m)
    if F.n == 1:
        return float((m / abs(F.int_coeffs.get((F.d,), 1))) ** (1.0 / F.d)) if F.int_coeffs else None
    mu = sphere_min(F).certified_lower
    if mu <= 0:
        return None
    return float(m / Fraction(mu)) ** (1.0 / F.d)


def count_exact(F: DecomposableForm, m, strategy: str = "auto", box: int | None = None,
                list_solutions: bool = False, max_box: int = 10**4, budget: int = 10**7) -> CountResult:
    """``N_F(m)`` with the chosen way of bounding the search region.

    ``auto`` uses the sphere minimum when it is positive and otherwise needs
    ``box``.  ``growth`` counts in boxes 10, 100, ... and stops once two
    consecutive boxes agree; it is never marked exhaustive.
    """
    if F.int_coeffs is None:
        raise FormError("counting needs an exact integer expansion")
    q = as_fraction(m)
    if strategy not in ("auto", "certified", "box", "growth"):
        raise FormError("unknown strategy %r" % strategy)
    if strategy in ("auto", "certified"):
        rad = certified_radius(F, q)
        if rad is not None:
            R = int(math.floor(rad * (1 + 1e-9))) + 1
            c, sols = count_in_box(F, q, R, list_solutions, budget)
            return CountResult(q, c, R, CERTIFIED, True, sols, radius=rad)
        if strategy == "certified":
            raise FormError("|F| vanishes on the unit sphere: no certified radius")
        if box is None:
            raise FormError("|F| vanishes on the unit sphere: supply a box or use the growth strategy")
    if strategy in ("auto", "box"):
        if box is None:
            raise FormError("box strategy needs a box half-width")
        c, sols = count_in_box(F, q, int(box), list_solutions, budget)
        return CountResult(q, c, int(box), USER_BOX, False, sols)
    history = []
    R = 10
    while True:
        c, sols = count_in_box(F, q, R, list_solutions, budget)
        history.append((R, c))
        agree = len(history) >= 2 and history[-1][1] == history[-2][1]
        if agree or R * 10 > max_box:
            return CountResult(q, c, R, GROWTH, False, sols, history=history, stable=agree)
        R *= 10


# ---------------------------------------------------------------- subspaces


@dataclass
class Subspace:
    """Rational subspace ``W`` with a unimodular ``T_W`` adapted to ``W intersect Z^n``."""

    basis: list  # rows spanning W intersect Z^n
    dim: int
    T: list  # unimodular; first ``dim`` columns span the lattice of W

    @classmethod
    def from_vectors(cls, vectors) -> "Subspace":
        B = intlinalg.as_int_matrix(vectors)
        if not B or intlinalg.int_rank(B) == 0:
            raise FormError("subspace needs at least one nonzero vector")
        T, k = intlinalg.complete_basis(B)
        basis = [[T[i][j] for i in range(len(T))] for j in range(k)]
        return cls(basis, k, T)

    @classmethod
    def from_normals(cls, normals) -> "Subspace":
        N = intlinalg.as_int_matrix(normals)
        K = intlinalg.integer_kernel(N, len(N[0]))
        if not K:
            return cls([], 0, [[int(i == j) for j in range(len(N[0]))] for i in range(len(N[0]))])
        return cls.from_vectors(K)

    @property
    def n(self) -> int:
        return len(self.T)

    def embed(self, y) -> list:
        """Point of ``Z^n`` with ``W``-coordinates ``y``."""
        return [sum(self.T[i][j] * int(y[j]) for j in range(self.dim)) for i in range(self.n)]

    def normals(self) -> list:
        if self.dim == 0:
            return [[int(i == j) for j in range(self.n)] for i in range(self.n)]
        return intlinalg.integer_kernel(self.basis, self.n)

    def key(self) -> tuple:
        return tuple(map(tuple, intlinalg.saturate(self.basis))) if self.dim else ()


def restrict(F: DecomposableForm, W: Subspace) -> DecomposableForm:
    """``F`` restricted to ``W`` in the coordinates given by ``T_W``."""
    if not 1 <= W.dim < F.n or W.n != F.n:
        raise FormError("subspace dimension must satisfy 1 <= dim W < n")
    T = np.array(W.T, dtype=float)
    rows = (F.factors @ T)[:, : W.dim]
    if np.any(np.linalg.norm(rows, axis=1) <= 1e-12 * np.linalg.norm(F.factors, axis=1)):
        raise FormError("a factor vanishes identically on the subspace")
    ints = None
    if F.int_coeffs is not None:
        full = compose_int_coeffs(F.int_coeffs, W.T)
        ints = {e[: W.dim]: c for e, c in full.items() if not any(e[W.dim:])}
    return make_form(rows, F.sign * F.scale, ints)


def intersect(A: Subspace, B: Subspace) -> Subspace:
    return Subspace.from_normals(A.normals() + B.normals())


def solutions_on(F: DecomposableForm, W: Subspace, m, box: int | None = None) -> set:
    """Solutions of ``|F(x)| <= m`` lying in ``W``, as tuples in ``Z^n``."""
    if W.dim == 0:
        return {(0,) * F.n}
    G = restrict(F, W)
    res = count_exact(G, m, strategy="auto", box=box, list_solutions=True)
    if not res.exhaustive:
        raise FormError("restriction to the subspace has no certified bound")
    return {tuple(W.embed(y)) for y in res.solutions}


@dataclass
class UnionCheck:
    union_count: int
    lower_bound: int
    single_counts: list
    pair_counts: dict
    holds: bool

    def to_dict(self) -> dict:
        return {
            "union_count": self.union_count,
            "lower_bound": self.lower_bound,
            "single_counts": self.single_counts,
            "pair_counts": {"%d,%d" % k: v for k, v in self.pair_counts.items()},
            "holds": self.holds,
        }


def union_count_check(F: DecomposableForm, m, subspaces: list) -> UnionCheck:
    """Compare the solutions in a union of subspaces with the two-term inclusion-exclusion bound."""
    if len({W.key() for W in subspaces}) != len(subspaces):
        raise FormError("subspaces must be distinct")
    sets = [solutions_on(F, W, m) for W in subspaces]
    singles = [len(s) for s in sets]
    pairs = {}
    for i, j in itertools.combinations(range(len(subspaces)), 2):
        V = intersect(subspaces[i], subspaces[j])
        pairs[(i, j)] = len(solutions_on(F, V, m)) if V.dim < F.n else singles[i]
    union = len(set().union(*sets))
    lower = sum(singles) - sum(pairs.values())
    return UnionCheck(union, lower, singles, pairs, union >= lower)


# ---------------------------------------------------------------- schedules


@dataclass
class GrowthProfile:
    ms: list
    counts: list
    stable: list
    history: list  # (box, counts per m)


def growth_profile(F: DecomposableForm, ms, max_box: int = 10**5) -> GrowthProfile:
    """Growth-strategy counts for a whole schedule from one enumeration per box.

    Each box is enumerated once at the largest ``m``; counts for smaller
    ``m`` come from the sorted exact values ``|F(x)|`` of those solutions.
    A count is stable once two consecutive boxes agree.
    """
    import bisect

    qs = [as_fraction(m) for m in ms]
    top = max(qs)
    history = []
    R = 10
    while R <= max_box:
        _, sols = count_in_box(F, top, R, collect=True)
        vals = sorted(abs(poly_eval_int(F.int_coeffs, x)) for x in sols)
        history.append((R, [bisect.bisect_right(vals, q) for q in qs]))
        if len(history) >= 2 and history[-1][1] == history[-2][1]:
            break
        R *= 10
    last = history[-1][1]
    stable = [len(history) >= 2 and history[-2][1][i] == last[i] for i in range(len(qs))]
    return GrowthProfile([str(q) for q in qs], last, stable, history)
