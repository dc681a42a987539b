"""Wedge norms, the explicit constant table and greedy factor selection."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg

from dform.forms import DecomposableForm, FormError


def wedge_norm(vectors) -> float:
    """Norm of ``v_1 ^ ... ^ v_k`` for complex vectors, i.e. sqrt(det Gram).

    Computed from a column-pivoted QR factorization, which stays accurate for
    nearly dependent tuples where a cofactor expansion of the Gram matrix
    would cancel badly.
    """
    V = np.atleast_2d(np.asarray(vectors, dtype=complex))
    k, n = V.shape
    if k == 0:
        return 1.0
    if k > n:
        return 0.0
    R = scipy.linalg.qr(V.T, mode="r", pivoting=True)[0]
    return float(np.prod(np.abs(np.diag(R)[:k])))


def abs_det(vectors) -> float:
    V = np.asarray(vectors, dtype=complex)
    return float(abs(np.linalg.det(V)))


def cluster_exponent(n: int, d: int, j: int) -> float:
    """Exponent ``(n-j)d / (n([jd/n]+1) - jd)`` applied to ``c1``."""
    fl = (j * d) // n
    return (n - j) * d / (n * (fl + 1) - j * d)


def c1_value(n: int, d: int) -> float:
    return (d / n) ** n / math.comb(d, n)


def cluster_threshold(n: int, d: int, j: int) -> float:
    """Threshold for the normalized ``(j+1)``-fold wedge in the definition of ``s_j``."""
    return c1_value(n, d) ** cluster_exponent(n, d, j)


def _sum_poly_geometric(k: int, x: float, tol: float = 1e-17) -> float:
    """sum_{l>=0} (l+1)^k x^l for 0 < x < 1."""
    total, l = 0.0, 0
    while True:
        term = (l + 1) ** k * x**l
        total += term
        l += 1
        if l > 10 and term < tol * total:
            return total


@dataclass(frozen=True)
class ConstantTable:
    n: int
    d: int
    a_prime: float
    c1: float
    c1j: list = field(default_factory=list)
    c2: float = 0.0
    c3: float = 0.0
    c4: float = 0.0
    c5: float = 0.0
    c6: float = 0.0
    c7: float = 0.0
    c8: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def c2_literal(n: int, d: int, a_prime: float) -> float:
    """c2 coded directly from its displayed product form."""
    c1 = c1_value(n, d)
    prod = 1.0
    for j in range(1, n):
        fl = (j * d) // n
        prod *= c1 ** ((j - n) * d / (n * (fl + 1) - j * d))
    return n ** (n * (d - n * a_prime) / 2) * (math.sqrt(math.factorial(n)) * prod) ** (d - (n - 1) * a_prime)


def constants(n: int, d: int, a_prime: float) -> ConstantTable:
    if not (2 <= n <= d):
        raise FormError("constants need 2 <= n <= d")
    if not (1 - 1e-12 <= a_prime <= d / n + 1e-12):
        raise FormError("a' must lie in [1, d/n]")
    c1 = c1_value(n, d)
    c1j = [cluster_threshold(n, d, j) / math.sqrt(j + 1) for j in range(1, n)]
    # c2 from the chain of c_{1,j}: prod_j 1/c_{1,j} = sqrt(n!) prod_j c1^{-e_j}
    c2 = n ** (n * (d - n * a_prime) / 2) * float(np.prod([1.0 / c for c in c1j])) ** (d - (n - 1) * a_prime)
    c3 = max(1.0, c2 ** (1.0 / a_prime))
    fact = math.factorial(n)
    binom = math.comb(d, n)
    c4 = binom * c3 * 2**n * n ** (n / 2) * fact**3 * n**3 * d ** (n - 2)
    c5 = binom * c3 * 3**n * 2 ** (n * (n - 1)) * n ** (n / 2) * fact**3 * n**3 * d ** (n - 2)
    c6 = 3**n * 2 ** (n * (n - 1) / 2) * fact + c5 * _sum_poly_geometric(n - 2, math.exp(-n / d))
    c7 = n ** (-1.5) / fact**2
    c8 = n ** (n + 0.5)
    return ConstantTable(n, d, float(a_prime), c1, c1j, c2, c3, c4, c5, c6, c7, c8)


@dataclass
class FactorSelection:
    indices: list  # i_1..i_n, 0-based
    exclusion_sets: list  # S_1..S_{n-1} as sorted index lists
    values: list  # |L_{i_j}(x)| for the normalized factors


def select_factors(F: DecomposableForm, x, table: ConstantTable, strict: bool = True) -> FactorSelection:
    """Greedy choice of ``n`` independent factors that are smallest at ``x``.

    Factors are normalized to unit length first.  ``i_1`` minimizes
    ``|L_i(x)|``; each next index minimizes over the complement of the
    previous exclusion set ``S_{j-1}``, where ``S_j`` collects every ``l``
    whose wedge with the chosen ``j`` factors, divided by the wedge of those
    ``j``, falls below ``c_{1,j}``.  Ties go to the lowest index.
    """
    n, d = F.n, F.d
    U = F.unit_factors()
    if np.linalg.matrix_rank(np.vstack([U.real, U.imag]), tol=1e-12) < n:
        raise FormError("factors do not span R^n")
    vals = np.abs(U @ np.asarray(x, dtype=float))
    chosen: list = []
    sets: list = []
    allowed = np.ones(d, dtype=bool)
    for j in range(1, n + 1):
        cand = np.flatnonzero(allowed)
        if cand.size == 0:
            raise FormError("selection exhausted all factors (V(F) infinite or degenerate input)")
        i_j = int(cand[np.argmin(vals[cand])])  # argmin returns the first (lowest) index on ties
        chosen.append(i_j)
        if j == n:
            break
        base = wedge_norm(U[chosen])
        if base == 0:
            raise FormError("chosen factors are dependent")
        thr = table.c1j[j - 1]
        S = []
        for l in range(d):
            r = wedge_norm(np.vstack([U[chosen], U[l]])) / base
            if (r < thr) if strict else (r <= thr):
                S.append(l)
        sets.append(S)
        allowed = np.ones(d, dtype=bool)
        allowed[S] = False
    return FactorSelection(chosen, sets, [float(vals[i]) for i in chosen])


def selection_sides(F: DecomposableForm, x, sel: FactorSelection, m_value: float, a_prime: float, c2: float,
                 norm_x: float | None = None) -> tuple[float, float]:
    """Logs of the two sides of the fundamental inequality at ``x``.

    Returns ``(log lhs, log rhs)``; the inequality holds when lhs <= rhs.
    ``norm_x`` overrides ``||x||`` (used for the ``T^{-1} x`` variant).
    """
    n, d = F.n, F.d
    A = F.absorbed_factors()
    x = np.asarray(x, dtype=float)
    idx = sel.indices
    det = abs_det(A[idx])
    prod = float(np.prod(np.abs(A[idx] @ x)))
    fx = abs(float(np.prod(np.abs(A @ x))))
    nx = float(np.linalg.norm(x)) if norm_x is None else norm_x
    if prod == 0.0:
        return -np.inf, 0.0
    lhs = a_prime * (math.log(prod) - math.log(det))
    rhs = math.log(c2) + math.log(fx) - (d - n * a_prime) * math.log(nx) - math.log(m_value)
    return lhs, rhs
