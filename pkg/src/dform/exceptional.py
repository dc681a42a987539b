"""Clusters of nearly dependent factors at a height minimizer.

``s_j(F)`` is the size of the largest set ``S`` of factor indices such that
every ``(j+1)``-tuple drawn from ``S`` (repetition allowed) has normalized
wedge below ``c1^{e_j}``.  Tuples with a repeated index have wedge zero, so
every set of at most ``j`` indices qualifies and ``s_j >= j``.  The
exceptional exponent ``a'`` is the largest ``s_j / j`` over ``j`` and over
the supplied minimizers.

Indices in this module are 0-based.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from dform.forms import DecomposableForm, FormError, Transform, compose
from dform.geometry import cluster_threshold, wedge_norm

GUARD = 1e-12


@dataclass
class ClusterValue:
    value: int
    witness: list
    boundary: bool = False  # some tuple sat within the guard band of the threshold
    cap_exceeded: bool = False  # value above floor(jd/n), which should be impossible


@dataclass
class ExceptionalReport:
    s_j: list
    witnesses: list
    s: float
    a_prime: float
    minimizers_examined: int
    per_minimizer: list = field(default_factory=list)
    boundary: bool = False
    cap_exceeded: bool = False
    note: str = "a' is a max over the minimizers found, hence a lower bound for the max over all minimizers"

    def to_dict(self) -> dict:
        return {
            "s_j": self.s_j,
            "witnesses": self.witnesses,
            "s": self.s,
            "a_prime": self.a_prime,
            "minimizers_examined": self.minimizers_examined,
            "s_per_minimizer": self.per_minimizer,
            "boundary": self.boundary,
            "cap_exceeded": self.cap_exceeded,
            "note": self.note,
        }


def tuple_ratios(F: DecomposableForm, j: int) -> dict:
    """Normalized wedge of every ``(j+1)``-subset of distinct unit factors."""
    U = F.unit_factors()
    return {c: wedge_norm(U[list(c)]) for c in itertools.combinations(range(F.d), j + 1)}


def _largest_cluster(d: int, j: int, good: set, top: int) -> list:
    for k in range(top, j, -1):
        for S in itertools.combinations(range(d), k):
            if all(c in good for c in itertools.combinations(S, j + 1)):
                return list(S)
    return list(range(j))


def s_j_compute(F_min: DecomposableForm, j: int) -> ClusterValue:
    """``s_j`` of a form that already sits at a height minimizer."""
    n, d = F_min.n, F_min.d
    if not 1 <= j <= n - 1:
        raise FormError("j must satisfy 1 <= j <= n-1")
    thr = cluster_threshold(n, d, j)
    ratios = tuple_ratios(F_min, j)
    strict = {c for c, r in ratios.items() if r < thr * (1 - GUARD)}
    loose = {c for c, r in ratios.items() if r < thr * (1 + GUARD)}
    cap = (j * d) // n
    # search one past the cap so that a violation would be seen, not hidden
    top = min(d, cap + 1)
    witness = _largest_cluster(d, j, strict, top)
    alt = _largest_cluster(d, j, loose, top)
    return ClusterValue(len(witness), witness, boundary=len(alt) != len(witness), cap_exceeded=len(witness) > cap)


def s_value(F_min: DecomposableForm) -> tuple[float, list]:
    vals = [s_j_compute(F_min, j) for j in range(1, F_min.n)]
    return max(v.value / j for j, v in enumerate(vals, start=1)), vals


def a_prime(F: DecomposableForm, minimizers: list) -> ExceptionalReport:
    if not minimizers:
        raise FormError("no minimizers supplied")
    if F.n < 2:
        raise FormError("a' needs n >= 2")
    best = None
    per = []
    for T in minimizers:
        if not isinstance(T, Transform):
            T = Transform.from_matrix(np.asarray(T, dtype=float))
        s, vals = s_value(compose(F, T))
        per.append(s)
        if best is None or s > best[0] + 1e-12:
            best = (s, vals)
    s, vals = best
    return ExceptionalReport(
        s_j=[v.value for v in vals],
        witnesses=[v.witness for v in vals],
        s=s,
        a_prime=max(per),
        minimizers_examined=len(minimizers),
        per_minimizer=per,
        boundary=any(v.boundary for v in vals),
        cap_exceeded=any(v.cap_exceeded for v in vals),
    )
