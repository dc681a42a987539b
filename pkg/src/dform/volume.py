"""Volume of ``{x : |F(x)| <= 1}`` and the minimum of ``|F|`` on the unit sphere.

By homogeneity ``V(F) = (1/n) * integral over S^{n-1} of |F(u)|^{-n/d}``.
For ``n = 2`` this is ``integral_0^pi |F(cos t, sin t)|^{-2/d} dt``; for
``n = 3`` a nested quadrature over the upper hemisphere is used.  Both split
the domain at the directions where a factor is smallest so that the adaptive
rules see integrable endpoint singularities only.

Finiteness is decided combinatorially: the integral diverges exactly when
some real subspace ``W`` of dimension ``w`` is killed by at least
``d (n - w) / n`` of the factors (the transverse integrand then behaves like
``rho^{-c n / d}`` in ``n - w`` dimensions).
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.integrate
import scipy.linalg
import scipy.optimize
from scipy.special import gamma

from dform.forms import DecomposableForm, FormError, evaluate

RADIAL = "radial"
MONTE_CARLO = "monte-carlo"


@dataclass
class VolumeEstimate:
    value: float
    abs_error: float
    method: str
    infinite: bool = False
    converged: bool = True
    singular_directions: list = field(default_factory=list)
    samples_or_nodes: int = 0
    heavy_tail: bool = False
    witness: list | None = None  # basis of a subspace forcing divergence

    def to_dict(self) -> dict:
        return {
            "value": None if self.infinite else self.value,
            "infinite": self.infinite,
            "abs_error": None if self.infinite else self.abs_error,
            "method": self.method,
            "converged": self.converged,
            "singular_directions": [list(map(float, u)) for u in self.singular_directions],
            "samples_or_nodes": self.samples_or_nodes,
            "heavy_tail": self.heavy_tail,
            "divergence_witness": self.witness,
        }


# ---------------------------------------------------------------- finiteness


def _real_rows(L: np.ndarray) -> np.ndarray:
    rows = [L.real]
    im = L.imag
    keep = np.abs(im).max(axis=1) > 0
    if keep.any():
        rows.append(im[keep])
    return np.vstack(rows)


def _vanishes(L: np.ndarray, basis: np.ndarray, tol: float) -> np.ndarray:
    """Which unit factors vanish on the span of the orthonormal columns ``basis``."""
    return np.linalg.norm(L @ basis, axis=1) <= tol


def divergence_witness(F: DecomposableForm, power: float = 1.0, tol: float = 1e-9):
    """A subspace making ``integral |F|^{-power n/d}`` diverge, or ``None``.

    Every candidate ``W`` is the common kernel of at most ``n`` factors, since
    the set of factors vanishing on ``W`` has the same kernel as one of its
    subsets of size at most ``n``.
    """
    n, d = F.n, F.d
    U = F.unit_factors()
    seen = []
    for k in range(1, n + 1):
        for S in itertools.combinations(range(d), k):
            K = scipy.linalg.null_space(_real_rows(U[list(S)]), rcond=tol)
            w = K.shape[1]
            if w == 0 or any(w == K2.shape[1] and np.allclose(K2 @ (K2.T @ K), K, atol=1e-8) for K2 in seen):
                continue
            seen.append(K)
            c = int(_vanishes(U, K, tol).sum())
            if c * n * power >= d * (n - w) - 1e-12:
                return K.T.tolist()
    return None


def is_finite_volume(F: DecomposableForm) -> bool:
    return divergence_witness(F) is None


# ---------------------------------------------------------------- radial quadrature


def _integrand_2d(F: DecomposableForm):
    e = -2.0 / F.d

    def f(t):
        val = abs(float(evaluate(F, np.array([math.cos(t), math.sin(t)]))))
        return val**e if val > 0 else math.inf

    return f


def _min_angles(F: DecomposableForm) -> list:
    """Angle in [0, pi) where each factor is smallest on the unit circle."""
    out = []
    for L in F.factors:
        A = np.real(np.outer(L.conj(), L))
        _, V = np.linalg.eigh(A)
        v = V[:, 0]
        out.append(math.atan2(v[1], v[0]) % math.pi)
    return out


def _quad(f, a, b, tol, limit=400):
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.integrate.IntegrationWarning)
        try:
            val, err = scipy.integrate.quad(f, a, b, epsabs=0.0, epsrel=tol, limit=limit)
            return val, err, True
        except scipy.integrate.IntegrationWarning:
            pass
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        val, err = scipy.integrate.quad(f, a, b, epsabs=0.0, epsrel=tol, limit=limit)
    return val, err, False


def _radial_2d(F: DecomposableForm, tol: float) -> VolumeEstimate:
    f = _integrand_2d(F)
    angles = _min_angles(F)
    pts = sorted(set([0.0, math.pi] + [round(a, 15) for a in angles]))
    total = err = 0.0
    ok = True
    nodes = 0
    for a, b in zip(pts[:-1], pts[1:]):
        if b - a < 1e-15:
            continue
        v, e, good = _quad(f, a, b, tol * 0.1)
        total += v
        err += e
        ok &= good
        nodes += 1
    sing = [(math.cos(a), math.sin(a)) for a, L in zip(angles, F.factors) if np.all(np.abs(L.imag) == 0)]
    return VolumeEstimate(total, err, RADIAL, converged=ok and err <= tol * total,
                          singular_directions=sing, samples_or_nodes=nodes)


def _sph(phi, theta):
    s = math.sin(phi)
    return np.array([s * math.cos(theta), s * math.sin(theta), math.cos(phi)])


def _radial_3d(F: DecomposableForm, tol: float) -> VolumeEstimate:
    e = -3.0 / F.d
    U = F.unit_factors()
    real = [u.real for u in U if np.all(u.imag == 0)]
    points = []  # directions where a non-real factor vanishes
    for u in U:
        if np.any(u.imag != 0):
            k = scipy.linalg.null_space(np.vstack([u.real, u.imag]))[:, 0]
            points.append(k if k[2] >= 0 else -k)
    for a, b in itertools.combinations(real, 2):
        c = np.cross(a, b)
        if np.linalg.norm(c) > 1e-12:
            c /= np.linalg.norm(c)
            points.append(c if c[2] >= 0 else -c)

    outer = {0.0, math.pi / 2}
    for p in points:
        outer.add(math.acos(min(1.0, max(-1.0, p[2]))))
    for r in real:
        # latitude where the great circle r.u = 0 is tangent to a parallel
        h = math.hypot(r[0], r[1])
        outer.add(math.atan2(abs(r[2]), h) if h > 0 else 0.0)
        outer.add(math.pi / 2 - math.atan2(abs(r[2]), h) if h > 0 else 0.0)
    outer = sorted(x for x in outer if 0.0 <= x <= math.pi / 2)

    def inner_points(phi):
        pts = {0.0, 2 * math.pi}
        s, c = math.sin(phi), math.cos(phi)
        for r in real:
            R = math.hypot(r[0], r[1])
            if R * s <= 0:
                continue
            q = -r[2] * c / (R * s)
            if abs(q) <= 1:
                th0 = math.atan2(r[1], r[0])
                for sgn in (1, -1):
                    pts.add((th0 + sgn * math.acos(q)) % (2 * math.pi))
        for p in points:
            pts.add(math.atan2(p[1], p[0]) % (2 * math.pi))
        return sorted(pts)

    A = F.absorbed_factors()
    Ar, Ai = A.real.T.copy(), A.imag.T.copy()

    def g(theta, phi):
        u = _sph(phi, theta)
        val = float(np.prod(np.hypot(u @ Ar, u @ Ai)))
        return val**e if val > 0 else math.inf

    state = {"ok": True}
    trail = []  # (phi, inner error) at every outer node

    def inner(phi):
        if math.sin(phi) == 0:
            return 0.0
        pts = inner_points(phi)
        tot = er_tot = 0.0
        for a, b in zip(pts[:-1], pts[1:]):
            if b - a < 1e-14:
                continue
            v, er, _ = _quad(lambda t: g(t, phi), a, b, tol * 0.01, limit=200)
            tot += v
            er_tot += er
        trail.append((phi, er_tot * math.sin(phi)))
        return tot * math.sin(phi)

    total = err = 0.0
    for a, b in zip(outer[:-1], outer[1:]):
        if b - a < 1e-14:
            continue
        v, er, good = _quad(inner, a, b, tol * 0.1, limit=200)
        total += v
        err += er
        state["ok"] &= good
    if len(trail) > 1:
        ph, ee = np.array(sorted(trail)).T
        err += float(np.trapezoid(ee, ph))
    total *= 2.0 / 3.0
    err *= 2.0 / 3.0
    return VolumeEstimate(total, err, RADIAL, converged=err <= tol * total,
                          singular_directions=[p.tolist() for p in points], samples_or_nodes=len(outer) - 1)


def volume_radial(F: DecomposableForm, tol: float = 1e-8) -> VolumeEstimate:
    if F.n == 1:
        raise FormError("volume needs n >= 2")
    w = divergence_witness(F)
    if w is not None:
        return VolumeEstimate(math.inf, 0.0, RADIAL, infinite=True, witness=w)
    if F.n == 2:
        return _radial_2d(F, tol)
    if F.n == 3:
        return _radial_3d(F, max(tol, 1e-6))
    raise FormError("radial quadrature is implemented for n = 2 and n = 3; use Monte Carlo")


# ---------------------------------------------------------------- Monte Carlo


def _spikes_2d(F: DecomposableForm) -> list:
    """(angle, local exponent) for each real zero direction on the circle."""
    out: dict = {}
    for L in F.factors:
        if np.all(L.imag == 0):
            a = round(math.atan2(-L.real[0], L.real[1]) % math.pi, 12)
            out[a] = out.get(a, 0) + 1
    return [(a, 2.0 * k / F.d) for a, k in sorted(out.items())]


def _mc_2d(F: DecomposableForm, samples: int, rng: np.random.Generator) -> VolumeEstimate:
    spikes = _spikes_2d(F)
    th = rng.uniform(0.0, math.pi, samples)
    if not spikes:
        w = np.ones(samples) * math.pi
    else:
        angles = [a for a, _ in spikes]
        gaps = np.diff(sorted(angles) + [angles[0] + math.pi]) if len(angles) > 1 else [math.pi]
        h = min(math.pi / 4, 0.5 * float(np.min(gaps)))
        comp = rng.integers(0, len(spikes) + 1, samples)  # 0 is the uniform part
        for i, (a, beta) in enumerate(spikes, start=1):
            sel = comp == i
            k = int(sel.sum())
            t = h * rng.uniform(size=k) ** (1.0 / (1.0 - beta)) * rng.choice([-1.0, 1.0], k)
            th[sel] = (a + t) % math.pi
        # mixture density on [0, pi)
        q = np.full(samples, 1.0 / math.pi)
        for a, beta in spikes:
            t = (th - a + math.pi / 2) % math.pi - math.pi / 2
            inside = np.abs(t) < h
            dens = np.zeros(samples)
            dens[inside] = (1 - beta) / (2 * h ** (1 - beta)) * np.maximum(np.abs(t[inside]), 1e-300) ** (-beta)
            q = q + dens
        q /= len(spikes) + 1
        w = 1.0 / q
    X = np.stack([np.cos(th), np.sin(th)], axis=1)
    vals = np.abs(evaluate(F, X)) ** (-2.0 / F.d) * w
    return VolumeEstimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples)), MONTE_CARLO,
                          samples_or_nodes=samples)


def volume_monte_carlo(F: DecomposableForm, samples: int = 200_000, seed: int = 0) -> VolumeEstimate:
    """Unbiased sphere-sampling estimate with its standard error."""
    if F.n == 1:
        raise FormError("volume needs n >= 2")
    w = divergence_witness(F)
    if w is not None:
        return VolumeEstimate(math.inf, 0.0, MONTE_CARLO, infinite=True, witness=w)
    rng = np.random.default_rng(seed)
    if F.n == 2:
        return _mc_2d(F, samples, rng)
    n = F.n
    area = 2 * math.pi ** (n / 2) / gamma(n / 2)
    U = rng.normal(size=(samples, n))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    vals = np.abs(evaluate(F, U)) ** (-n / F.d) * (area / n)
    heavy = divergence_witness(F, power=2.0) is not None
    return VolumeEstimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples)), MONTE_CARLO,
                          samples_or_nodes=samples, heavy_tail=heavy)


# ---------------------------------------------------------------- sphere minimum


@dataclass
class SphereMin:
    value: float  # best value found, an upper bound for the true minimum
    certified_lower: float  # proven lower bound
    witness: list
    cells: int = 0


def _trig_coeffs(U: np.ndarray) -> np.ndarray:
    """``|L(cos t, sin t)|^2 = a0 + a1 cos 2t + a2 sin 2t`` for each row of ``U``."""
    A = np.real(np.einsum("ki,kj->kij", U.conj(), U))
    a0 = 0.5 * (A[:, 0, 0] + A[:, 1, 1])
    a1 = 0.5 * (A[:, 0, 0] - A[:, 1, 1])
    a2 = A[:, 0, 1]
    return np.stack([a0, a1, a2], axis=1)


def _polish(F: DecomposableForm, t0: float, r: float) -> tuple[float, float]:
    def f(t):
        return abs(float(evaluate(F, np.array([math.cos(t), math.sin(t)]))))

    res = scipy.optimize.minimize_scalar(f, bounds=(t0 - r, t0 + r), method="bounded",
                                         options={"xatol": 1e-14})
    return float(res.fun), float(res.x)


def sphere_min(F: DecomposableForm, eps_cert: float = 1e-6, budget: int = 4_000_000) -> SphereMin:
    """Minimum of ``|F|`` on the unit sphere with a branch-and-bound certificate.

    For ``n = 2`` each ``q_i(t) = |L_i(cos t, sin t)|^2`` is a trigonometric
    polynomial of degree 2 with ``|q_i''| <= 4 A_i`` (``A_i`` its amplitude),
    so on an arc of half-width ``r`` around ``t``
    ``q_i >= q_i(t) - |q_i'(t)| r - 2 A_i r^2``.  Multiplying the per-factor
    bounds gives a lower bound for ``|F|`` on the arc; arcs whose bound may
    fall under ``(1 - eps_cert)`` times the best value are bisected.  Any
    real factor, and for ``n >= 3`` any factor at all, has a real zero on
    the sphere.
    """
    n = F.n
    U = F.unit_factors()
    for u in U:
        if n >= 3 or np.all(u.imag == 0):
            k = scipy.linalg.null_space(_real_rows(u[None, :]))[:, 0]
            return SphereMin(0.0, 0.0, k.tolist())
    if n != 2:
        raise FormError("sphere minimum needs n >= 2")
    C = _trig_coeffs(F.factors)
    amp = np.hypot(C[:, 1], C[:, 2])
    N = 1024
    r = math.pi / (2 * N)
    centers = (np.arange(N) + 0.5) * (2 * r)
    cells = N
    wit = (math.inf, 0.0)
    while True:
        c2, s2 = np.cos(2 * centers)[:, None], np.sin(2 * centers)[:, None]
        q = C[:, 0] + C[:, 1] * c2 + C[:, 2] * s2
        dq = 2 * (C[:, 2] * c2 - C[:, 1] * s2)
        vals = F.scale * np.sqrt(np.prod(q, axis=1))
        lower = F.scale * np.sqrt(np.prod(np.maximum(q - np.abs(dq) * r - 2 * amp * r * r, 0.0), axis=1))
        i = int(np.argmin(vals))
        if vals[i] < wit[0]:
            wit = (float(vals[i]), float(centers[i]))
        target = wit[0] * (1 - eps_cert)
        keep = lower < target
        if not keep.any():
            val, t = _polish(F, wit[1], 4 * r)
            if val >= wit[0]:
                val, t = wit
            return SphereMin(val, min(target, val), [math.cos(t), math.sin(t)], cells)
        centers = np.concatenate([centers[keep] - r / 2, centers[keep] + r / 2])
        r /= 2
        cells += centers.size
        if cells > budget:
            raise FormError("sphere minimum certification budget exceeded")
