"""Heights of forms and their minimization over the special linear group.

``H(F)`` is the product of the factor norms.  The geometric height is the
minimum of ``H(F o T)`` over real ``T`` with ``|det T| = 1``.  Writing
``P = T T^t`` the objective ``sum_i log ||L_i T||`` is geodesically convex on
positive definite matrices of determinant one, so a Riemannian Newton
iteration ``T <- T expm(X)`` (``X`` symmetric and traceless, hence the
determinant constraint is exact) converges to the global minimum from any
seed.  Several seeds are still run so that distinct minimizers can be
reported.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from dform import intlinalg
from dform.forms import DecomposableForm, FormError, Transform, compose, integer_expansion
from dform.geometry import abs_det


def height(F: DecomposableForm) -> float:
    return F.scale * float(np.prod(np.linalg.norm(F.factors, axis=1)))


def log_height(F: DecomposableForm) -> float:
    return math.log(F.scale) + float(np.sum(np.log(np.linalg.norm(F.factors, axis=1))))


def _rank_real(A: np.ndarray) -> int:
    return int(np.linalg.matrix_rank(np.vstack([A.real, A.imag]), tol=1e-10 * max(1.0, np.abs(A).max())))


# ---------------------------------------------------------------- optimizer


@dataclass
class OptimizerConfig:
    seed: int = 0
    starts: int = 4
    max_iters: int = 200
    tol: float = 1e-12


@dataclass
class MinimizationResult:
    m_estimate: float
    T_opt: Transform
    tuple_sum_upper: float
    gs_start: float
    iterations: int
    converged: bool
    lower_bound: float = 0.0
    minimizers: list = field(default_factory=list)
    start_values: list = field(default_factory=list)

    @property
    def bracket(self) -> tuple[float, float]:
        return (self.lower_bound, self.m_estimate)

    def to_dict(self) -> dict:
        return {
            "m_estimate": self.m_estimate,
            "m_bracket": list(self.bracket),
            "T_opt": self.T_opt.entries.tolist(),
            "tuple_sum_upper": self.tuple_sum_upper,
            "gs_start": self.gs_start,
            "iterations": self.iterations,
            "converged": self.converged,
            "distinct_minimizers": len(self.minimizers),
        }


def _sym_basis(n: int) -> list:
    """Frobenius-orthonormal basis of traceless symmetric ``n x n`` matrices."""
    basis = []
    for i in range(n):
        for j in range(i + 1, n):
            E = np.zeros((n, n))
            E[i, j] = E[j, i] = 1 / math.sqrt(2)
            basis.append(E)
    for k in range(1, n):
        E = np.zeros((n, n))
        E[:k, :k] = np.eye(k)
        E[k, k] = -k
        basis.append(E / np.linalg.norm(E))
    return basis


def _objective(L: np.ndarray, T: np.ndarray) -> float:
    return float(np.sum(np.log(np.linalg.norm(L @ T, axis=1))))


def _newton_descent(L: np.ndarray, T: np.ndarray, cfg: OptimizerConfig) -> tuple[np.ndarray, int, bool]:
    n = L.shape[1]
    basis = _sym_basis(n)
    f = _objective(L, T)
    for it in range(1, cfg.max_iters + 1):
        W = L @ T
        nw2 = np.sum(np.abs(W) ** 2, axis=1)
        # first and second directional derivatives along each basis matrix
        WE = [W @ E for E in basis]
        first = np.array([[np.real(np.vdot(W[i], we[i])) / nw2[i] for i in range(len(W))] for we in WE])
        g = first.sum(axis=1)
        m = len(basis)
        Hs = np.zeros((m, m))
        for a in range(m):
            for b in range(a, m):
                cross = np.real(np.sum(np.conj(WE[a]) * WE[b], axis=1)) / nw2
                Hs[a, b] = Hs[b, a] = 2 * np.sum(cross - first[a] * first[b])
        gnorm = float(np.linalg.norm(g))
        if gnorm < cfg.tol:
            return T, it, True
        lam = 1e-12 * max(1.0, np.trace(Hs))
        try:
            step = -np.linalg.solve(Hs + lam * np.eye(m), g)
            if np.dot(step, g) >= 0:
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            step = -g
        snorm = float(np.linalg.norm(step))
        if snorm > 2.0:  # trust-region cap keeps expm well scaled
            step *= 2.0 / snorm
        t = 1.0
        while True:
            X = sum(s * E for s, E in zip(step, basis))
            with np.errstate(all="ignore"):
                Tn = T @ scipy.linalg.expm(t * X)
                fn = _objective(L, Tn)
            if not math.isfinite(fn):
                fn = math.inf
            if fn <= f + 1e-4 * t * float(np.dot(step, g)) or t < 1e-12:
                break
            t *= 0.5
        if t < 1e-12:
            return T, it, gnorm < 1e-7
        if f - fn < 1e-15 * max(1.0, abs(f)) and gnorm < 1e-8:
            return Tn, it, True
        T, f = Tn, fn
    return T, cfg.max_iters, False


def gram_schmidt_seed(F: DecomposableForm) -> np.ndarray:
    """Upper triangular ``T`` making the columns of ``M T`` orthonormal, rescaled to ``|det| = 1``."""
    M = F.factors
    G = np.real(M.conj().T @ M)
    R = np.linalg.cholesky(G).T  # G = R^t R, R upper triangular
    T = np.linalg.inv(R)
    return T / abs(np.linalg.det(T)) ** (1.0 / F.n)


def _random_sl(rng: np.random.Generator, n: int, spread: float = 0.7) -> np.ndarray:
    A = rng.normal(size=(n, n)) * spread
    S = 0.5 * (A + A.T)
    S -= np.trace(S) / n * np.eye(n)
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return scipy.linalg.expm(S) @ Q


def minimize_height_real(F: DecomposableForm, cfg: OptimizerConfig | None = None) -> MinimizationResult:
    """Estimate the geometric height with a certified lower bound."""
    cfg = cfg or OptimizerConfig()
    n = F.n
    if _rank_real(F.factors) < n:
        raise FormError("factor matrix is rank deficient: the infimum is not attained")
    L = F.factors
    rng = np.random.default_rng(cfg.seed)
    gs = gram_schmidt_seed(F)
    seeds = [np.eye(n), gs] + [_random_sl(rng, n) for _ in range(max(0, cfg.starts - 2))]
    logs = math.log(F.scale)
    runs = []
    total_it = 0
    for T0 in seeds:
        T, it, ok = _newton_descent(L, T0, cfg)
        total_it += it
        runs.append((math.exp(logs + _objective(L, T)), T, ok))
    best_val = min(r[0] for r in runs)
    best_i = next(i for i, r in enumerate(runs) if r[0] <= best_val * (1 + 1e-12))
    _, T_best, ok_best = runs[best_i]
    mins = []
    for val, T, ok in runs:
        if val <= best_val * (1 + 1e-7):
            P = T @ T.T
            if not any(np.allclose(P, Q @ Q.T, rtol=1e-5, atol=1e-7) for Q in mins):
                mins.append(T)
    return MinimizationResult(
        m_estimate=best_val,
        T_opt=Transform.from_matrix(T_best),
        tuple_sum_upper=tuple_sum_upper_bound(F),
        gs_start=height(compose(F, gs)),
        iterations=total_it,
        converged=bool(ok_best),
        lower_bound=min(hadamard_lower_bound(F), best_val),
        minimizers=[Transform.from_matrix(T) for T in mins],
        start_values=[r[0] for r in runs],
    )


# ---------------------------------------------------------------- certificates


def hadamard_lower_bound(F: DecomposableForm, max_orders: int = 2520) -> float:
    """Lower bound for the geometric height from Hadamard's inequality.

    For any family of ``n``-tuples in which every factor appears exactly
    ``k`` times, ``H(F o T)^k >= prod |det(tuple)|`` whenever ``|det T| = 1``.
    Families tried: partitions into disjoint ``n``-tuples when ``n | d`` and
    cyclic windows of length ``n`` around orderings of the factors.
    """
    A = F.absorbed_factors()
    n, d = F.n, F.d
    cache: dict = {}

    def logdet(t):
        key = tuple(sorted(t))
        if key not in cache:
            v = abs_det(A[list(key)])
            cache[key] = math.log(v) if v > 1e-300 else -math.inf
        return cache[key]

    best = -math.inf
    if d % n == 0:
        for part in _partitions(list(range(d)), n):
            best = max(best, sum(logdet(t) for t in part))
    if n <= d:
        orders = itertools.permutations(range(1, d))
        for count, rest in enumerate(orders):
            if count >= max_orders:
                break
            if d > 2 and rest[0] > rest[-1]:
                continue  # reversed cycles give the same windows
            cyc = (0,) + rest
            s = sum(logdet([cyc[(i + k) % d] for k in range(n)]) for i in range(d))
            best = max(best, s / n)
    return math.exp(best) if best > -math.inf else 0.0


def _partitions(items: list, size: int):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for comb in itertools.combinations(rest, size - 1):
        remaining = [x for x in rest if x not in comb]
        for p in _partitions(remaining, size):
            yield [(first,) + comb] + p


def conjugate_symmetrize(F: DecomposableForm, weights) -> np.ndarray:
    a = np.asarray(weights, dtype=float)
    return np.sqrt(a * a[list(F.pair)])


def tuple_determinant_sum(F: DecomposableForm, weights=None, brute: bool = False) -> float:
    """Sum over ordered ``n``-tuples (repetition allowed) of ``|det(a_i L_i ...)|^2``.

    Uses Cauchy-Binet (``n! det(M^* M)``) unless ``brute`` is set.
    """
    A = F.absorbed_factors()
    if weights is not None:
        A = A * np.asarray(weights, dtype=float)[:, None]
    n, d = F.n, F.d
    if brute:
        total = 0.0
        for t in itertools.product(range(d), repeat=n):
            total += abs(np.linalg.det(A[list(t)])) ** 2
        return total
    return math.factorial(n) * float(np.real(np.linalg.det(A.conj().T @ A)))


def tuple_sum_upper_bound(F: DecomposableForm, weights=None) -> float:
    """Upper bound for the geometric height from the tuple-determinant sum."""
    n, d = F.n, F.d
    if weights is not None:
        w = np.asarray(weights, dtype=float)
        if np.any(w <= 0):
            raise FormError("weights must be positive")
        if abs(float(np.sum(np.log(w)))) > 1e-9:
            raise FormError("weights must have product 1")
        weights = conjugate_symmetrize(F, w)
    S = tuple_determinant_sum(F, weights)
    return (n**n * S / (math.factorial(n) * d**n)) ** (d / (2 * n))


# ---------------------------------------------------------------- Q and NS


@dataclass
class QResult:
    value: float
    weights: np.ndarray
    unit_weight_value: float
    converged: bool


def q_invariant(F: DecomposableForm, maxiter: int = 500) -> QResult:
    """L2 norm of the tuple-determinant vector, minimized over conjugate-symmetric weights.

    ``log det(M^* diag(a^2) M)`` is convex in ``log a``, so a local minimum is
    global.
    """
    A = F.absorbed_factors()
    n, d = F.n, F.d
    groups = [[i] for i in F.real_indices] + [[i, F.pair[i]] for i in F.pair_leads]
    sizes = np.array([len(g) for g in groups], dtype=float)
    # free parameters z with sum(sizes * u) = 0
    basis = scipy.linalg.null_space(sizes[None, :])

    def expand_u(z):
        u_g = basis @ z
        u = np.zeros(d)
        for g, val in zip(groups, u_g):
            u[g] = val
        return u

    def fun(z):
        u = expand_u(z)
        W = A * np.exp(u)[:, None]
        G = W.conj().T @ W
        sign, ld = np.linalg.slogdet(G)
        Ginv = np.linalg.inv(G)
        lev = np.real(np.einsum("ij,jk,ik->i", W, Ginv, W.conj()))
        grad_u = 2 * lev
        grad_g = np.array([grad_u[g].sum() for g in groups])
        return float(np.real(ld)), basis.T @ grad_g

    z0 = np.zeros(basis.shape[1])
    if basis.shape[1] == 0:
        f0 = fun(z0)[0]
        v = math.sqrt(math.factorial(n) * math.exp(f0))
        return QResult(v, np.ones(d), v, True)
    res = scipy.optimize.minimize(fun, z0, jac=True, method="BFGS", options={"maxiter": maxiter, "gtol": 1e-10})
    f0 = fun(z0)[0]
    fbest = min(float(res.fun), f0)
    w = np.exp(expand_u(res.x)) if res.fun <= f0 else np.ones(d)
    return QResult(
        math.sqrt(math.factorial(n) * math.exp(fbest)),
        w,
        math.sqrt(math.factorial(n) * math.exp(f0)),
        bool(res.success),
    )


def ns_invariant(F: DecomposableForm, indep_tol: float = 1e-12) -> float:
    """Restricted product over ordered independent ``n``-tuples of normalized ``|det|``."""
    U = F.unit_factors()
    n, d = F.n, F.d
    total = 0.0
    found = False
    for t in itertools.combinations(range(d), n):
        r = abs_det(U[list(t)])
        if r > indep_tol:
            total += math.log(r)
            found = True
    if not found:
        raise FormError("no linearly independent n-tuple of factors: NS undefined")
    return math.exp(math.factorial(n) * total)


# ---------------------------------------------------------------- successive minima


@dataclass
class SuccessiveMinima:
    lambdas: list
    basis: list  # integer column vectors z_1..z_n
    S: Transform
    minima_vectors: list


def _enumerate_gauge(T: np.ndarray, R: float, budget: int) -> tuple[np.ndarray, np.ndarray]:
    n = T.shape[0]
    Tinv = np.linalg.inv(T)
    bounds = np.floor(R * np.abs(T).sum(axis=1) + 1e-9).astype(int)
    size = int(np.prod(2 * bounds + 1))
    if size > budget:
        raise FormError("enumeration budget exceeded (transform too skewed)")
    axes = [np.arange(-b, b + 1) for b in bounds]
    Z = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    Z = Z[np.any(Z != 0, axis=1)]
    g = np.abs(Z @ Tinv.T).max(axis=1)
    keep = g <= R * (1 + 1e-12)
    Z, g = Z[keep], g[keep]
    order = np.lexsort((np.arange(len(g)), g))
    return Z[order], g[order]


def successive_minima(T, budget: int = 5_000_000) -> SuccessiveMinima:
    """Successive minima of the parallelepiped ``{T a : |a|_inf <= 1}`` against ``Z^n``,
    with a lattice basis ``z_i`` of gauge at most ``i * lambda_i``."""
    T = T.entries if isinstance(T, Transform) else np.asarray(T, dtype=float)
    n = T.shape[0]
    R = 1.0
    while True:
        Z, g = _enumerate_gauge(T, R, budget)
        vecs, lams = [], []
        for z, gz in zip(Z, g):
            cand = vecs + [list(map(int, z))]
            if intlinalg.int_rank(intlinalg.transpose(cand)) == len(cand):
                vecs, lams = cand, lams + [float(gz)]
                if len(vecs) == n:
                    break
        if len(vecs) == n:
            break
        R *= 2
    Z, g = _enumerate_gauge(T, n * lams[-1] * (1 + 1e-9), budget)
    basis: list = []
    for i in range(1, n + 1):
        span = vecs[:i]
        limit = i * lams[i - 1] * (1 + 1e-9)
        for z, gz in zip(Z, g):
            if gz > limit:
                break
            zl = list(map(int, z))
            if intlinalg.int_rank(intlinalg.transpose(span + [zl])) != i:
                continue
            cols = basis + [zl]
            if intlinalg.int_rank(intlinalg.transpose(cols)) != i:
                continue
            if intlinalg.minors_gcd(cols) == 1:
                basis.append(zl)
                break
        else:
            raise FormError("no basis vector found within i * lambda_i (n too large?)")
    S = Transform.from_matrix(np.array(basis, dtype=float).T)
    return SuccessiveMinima(lams, basis, S, vecs)


# ---------------------------------------------------------------- integral reduction


@dataclass
class Reduction:
    S: Transform
    M_upper: float
    H_construction: float
    S_construction: Transform
    bound: float
    minima: SuccessiveMinima


def nonvanishing_on_integers(F: DecomposableForm) -> bool | None:
    """True/False for binary integral forms; None when undecidable here (n >= 3)."""
    if F.n == 1:
        return True
    if F.n != 2:
        return None
    import sympy

    x, y = sympy.symbols("x y")
    coeffs = integer_expansion(F)
    expr = sum(c * x ** e[0] * y ** e[1] for e, c in coeffs.items())
    _, facs = sympy.factor_list(sympy.Poly(expr, x, y))
    return not any(p.total_degree() == 1 for p, _ in facs)


def reduce_integral(F: DecomposableForm, result: MinimizationResult, assume_nonvanishing: bool = False,
                    improve: bool = True, max_moves: int = 10_000) -> Reduction:
    """Integral unimodular ``S`` built from the successive-minima basis of ``P(T_opt)``."""
    integer_expansion(F)  # raises if F carries no exact integer expansion
    nv = nonvanishing_on_integers(F)
    if nv is False:
        raise FormError("precondition violated: F vanishes at a nonzero integer point")
    if nv is None and not assume_nonvanishing:
        raise FormError("cannot certify that F does not vanish on Z^n \\ {0}; pass assume_nonvanishing")
    n, d = F.n, F.d
    sm = successive_minima(result.T_opt)
    S = np.array(sm.S.entries)
    h_construction = height(compose(F, sm.S))
    h = h_construction
    moves = 0
    while improve and moves < max_moves:
        better = False
        for i, j in itertools.permutations(range(n), 2):
            for s in (1, -1):
                S2 = S.copy()
                S2[:, i] += s * S2[:, j]
                h2 = height(compose(F, S2))
                if h2 < h * (1 - 1e-12):
                    S, h, better = S2, h2, True
                    moves += 1
        if not better:
            break
    bound = n ** (d * (n + 0.5)) * result.m_estimate**n
    return Reduction(Transform.from_matrix(S), h, h_construction, sm.S, bound, sm)
