"""The transgression form Ψ on the sphere bundle of ``E = ν ⊕ ξ`` and the Euler form.

Everything is materialized as a pullback to a chart: a :class:`SphereBundleMap`
sends a source box to the sphere bundle through a base map into one geometry
chart and a unit vector ``u`` of frame components (ν first).  With
``θ = du + ω u`` the pieces are

    Ψ_j = Σ_τ sgn(τ) u_τ(0) θ_τ(1) ∧ ... ∧ θ_τ(n-2j) ∧ Ω_τ(n-2j+1)τ(n-2j+2) ∧ ... ∧ Ω_τ(n-1)τ(n)

summed literally over all permutations τ of ``{0..n}``, and

    Ψ = 1 / ((n-1)!! c_n) · Σ_j Ψ_j / (2^j j! (n-2j)!!),   c_n = vol(S^n).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .exterior import (ChartDomain, KForm, SmoothMap, differential, matwedge, multi_indices,
                       pullback, wedge_arrays)
from .geometry import FramedGeometry, StabilizedGeometry
from .quadrature import DEFAULT_SPEC, QuadratureSpec, integrate_over_atlas

UNIT_TOL = 1e-12
VANISHING_TOL = 1e-6


def double_factorial(k: int) -> int:
    """``k!!`` with ``(-1)!! = 0!! = 1``."""
    if k < -1:
        raise ValueError("double factorial is defined for k >= -1")
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


def sphere_volume(n: int) -> float:
    """Volume ``c_n`` of the unit sphere ``S^n``."""
    if n < 1:
        raise ValueError("sphere dimension must be at least 1")
    m = n // 2
    if n % 2 == 0:
        return 2 * (2 * math.pi) ** m / double_factorial(n - 1)
    return (2 * math.pi) ** (m + 1) / double_factorial(n - 1)


def psi_weights(n: int) -> tuple[Fraction, ...]:
    """Exact rational weights ``1 / ((n-1)!! 2^j j! (n-2j)!!)``; Ψ = Σ_j w_j Ψ_j / c_n."""
    return tuple(Fraction(1, double_factorial(n - 1) * 2 ** j * math.factorial(j)
                          * double_factorial(n - 2 * j))
                 for j in range(n // 2 + 1))


@lru_cache(maxsize=None)
def signed_permutations(r: int) -> tuple[tuple[tuple[int, ...], int], ...]:
    out = []
    for perm in itertools.permutations(range(r)):
        inv = sum(1 for a in range(r) for b in range(a + 1, r) if perm[a] > perm[b])
        out.append((perm, -1 if inv % 2 else 1))
    return tuple(out)


@dataclass(frozen=True)
class SphereBundleMap:
    """A map ``source → ξ̂``: base point via ``base_map`` into chart ``chart``, fibre point ``u``."""

    source: ChartDomain
    base_map: SmoothMap
    u: SmoothMap
    chart: int = 0

    def __post_init__(self):
        if self.base_map.source != self.source or self.u.source != self.source:
            raise ValueError("base_map and u must be defined on the bundle map's source")
        pts = self.source.sample(64, np.random.default_rng(0))
        dev = np.abs(np.linalg.norm(self.u(pts), axis=1) - 1.0).max()
        if dev > UNIT_TOL:
            raise ValueError(f"u is not unit length (max deviation {dev:.2e})")

    @property
    def n(self) -> int:
        return self.u.target_dim - 1


@dataclass(frozen=True)
class BundleSection:
    """A section of ξ̂ over a geometry: one unit-vector map per chart."""

    geometry: StabilizedGeometry
    u: tuple[SmoothMap, ...]

    def bundle_map(self, chart: int = 0) -> SphereBundleMap:
        dom = self.geometry.charts[chart].domain
        return SphereBundleMap(dom, SmoothMap.identity(dom), self.u[chart], chart)

    def pullback_psi(self, chart: int = 0) -> KForm:
        return psi(self.bundle_map(chart), self.geometry)

    def integrate_psi(self, spec: QuadratureSpec = DEFAULT_SPEC) -> tuple[float, float]:
        forms = [self.pullback_psi(c) for c in range(len(self.geometry.charts))]
        return integrate_over_atlas(forms, self.geometry, spec)


def _connection_for(bundle_map: SphereBundleMap, geometry) -> tuple[KForm, KForm]:
    omega, Omega = geometry.connection(bundle_map.chart)
    if omega.shape[0] != bundle_map.u.target_dim:
        raise ValueError(f"bundle of rank {omega.shape[0]} cannot carry a unit vector in "
                         f"R^{bundle_map.u.target_dim}")
    if bundle_map.base_map.target_dim != omega.domain.dim:
        raise ValueError("base map does not land in the geometry chart")
    return omega, Omega


def theta(bundle_map: SphereBundleMap, geometry) -> KForm:
    """``θ = du + ω u`` on the source box (vector of ``n+1`` one-forms)."""
    omega, _ = _connection_for(bundle_map, geometry)
    u0 = KForm.from_map(bundle_map.u)
    return differential(bundle_map.u) + matwedge(pullback(omega, bundle_map.base_map), u0)


def _psi_j_array(U: np.ndarray, T: np.ndarray, O: np.ndarray | None, j: int, dim: int) -> np.ndarray:
    """Literal permutation sum for Ψ_j on evaluated arrays.

    ``U`` (N, r), ``T`` (N, r, dim), ``O`` (N, r, r, C(dim, 2)) or None for Ω = 0.
    """
    r = U.shape[1]
    n = r - 1
    n_theta = n - 2 * j
    ncomp = len(multi_indices(dim, n))
    total = np.zeros((U.shape[0], ncomp))
    if j > 0 and O is None:
        return total
    for perm, sign in signed_permutations(r):
        term = U[:, perm[0], None]
        degree = 0
        for s in perm[1:1 + n_theta]:
            term = wedge_arrays(term, degree, T[:, s], 1, dim)
            degree += 1
        rest = perm[1 + n_theta:]
        for s, t in zip(rest[::2], rest[1::2]):
            term = wedge_arrays(term, degree, O[:, s, t], 2, dim)
            degree += 2
        total += sign * term
    return total


def psi_j(u: KForm, theta_form: KForm, Omega: KForm, j: int) -> KForm:
    """Ψ_j from the 0-form vector ``u``, the 1-form vector θ and the curvature matrix Ω."""
    r = u.shape[0]
    n = r - 1
    if not 0 <= j <= n // 2:
        raise ValueError(f"j must lie in 0..{n // 2} for n = {n}")
    if theta_form.shape != (r,) or Omega.shape != (r, r):
        raise ValueError("u, θ and Ω have inconsistent ranks")
    domain = u.domain
    if theta_form.domain != domain or Omega.domain != domain:
        raise ValueError("incompatible chart domains")
    if n > domain.dim or (j > 0 and Omega.is_zero):
        return KForm.zero(domain, n)

    def components(p):
        O = None if Omega.is_zero else Omega(p)
        return _psi_j_array(u(p)[..., 0], theta_form(p), O, j, domain.dim)

    return KForm(domain, n, components)


def psi(bundle_map: SphereBundleMap, geometry) -> KForm:
    """Pullback of the normalized transgression form Ψ along ``bundle_map``.

    ``geometry`` supplies the rank ``n+1`` connection: a :class:`StabilizedGeometry`
    (the ξ case) or any geometry whose bundle already has rank ``n+1``.
    """
    _, Omega = _connection_for(bundle_map, geometry)
    n = bundle_map.n
    domain = bundle_map.source
    if n > domain.dim:
        return KForm.zero(domain, n)
    coeffs = [float(w) / sphere_volume(n) for w in psi_weights(n)]
    u0 = KForm.from_map(bundle_map.u)
    th = theta(bundle_map, geometry)
    Om = pullback(Omega, bundle_map.base_map)

    def components(p):
        U, T = u0(p)[..., 0], th(p)
        O = None if Om.is_zero else Om(p)
        total = coeffs[0] * _psi_j_array(U, T, O, 0, domain.dim)
        if O is not None:
            for j in range(1, len(coeffs)):
                total += coeffs[j] * _psi_j_array(U, T, O, j, domain.dim)
        return total

    return KForm(domain, n, components)


def euler_form(Omega: KForm) -> KForm:
    """Euler curvature form ``(4π)^{-k} / k! · Σ_τ sgn(τ) Ω_τ(0)τ(1) ∧ ... `` for rank ``2k``."""
    r = Omega.shape[0]
    if len(Omega.shape) != 2 or r % 2:
        raise ValueError("Euler form requires even rank")
    k = r // 2
    domain = Omega.domain
    if Omega.is_zero or r > domain.dim:
        return KForm.zero(domain, r)
    scale = 1.0 / ((4 * math.pi) ** k * math.factorial(k))

    def components(p):
        O = Omega(p)
        total = np.zeros((p.shape[0], len(multi_indices(domain.dim, r))))
        for perm, sign in signed_permutations(r):
            term = O[:, perm[0], perm[1]]
            for a in range(1, k):
                term = wedge_arrays(term, 2 * a, O[:, perm[2 * a], perm[2 * a + 1]], 2, domain.dim)
            total += sign * term
        return scale * total

    return KForm(domain, r, components)


# -- sections and fibre maps ----------------------------------------------------

def _per_chart(value, count: int) -> list:
    if callable(value) or value is None:
        return [value] * count
    out = list(value)
    if len(out) != count:
        raise ValueError("need one evaluator per chart")
    return out


def _unit_map(domain: ChartDomain, raw: Callable[[np.ndarray], np.ndarray], r: int,
              step: float, sample: int = 1000) -> SmoothMap:
    pts = domain.sample(sample, np.random.default_rng(1))
    norms = np.linalg.norm(raw(pts), axis=1)
    if norms.min() <= VANISHING_TOL:
        bad = pts[np.argmin(norms)]
        raise ValueError(f"vector field vanishes on boundary (near chart point {bad.tolist()})")

    def value(p):
        v = raw(p)
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    return SmoothMap(domain, r, value, step=step)


def section_from_vector_field(geometry: StabilizedGeometry, normal, tangent) -> BundleSection:
    """Section α of ξ̂ = ΣM from ``V = a·ν + V_T``.

    ``normal(p)`` gives the outward-normal component ``a`` (shape ``(N,)``);
    ``tangent(p)`` gives ``V_T`` in chart coordinate components (``(N, dim)``).
    ``u = (a, ϑ(V_T)) / |(a, V_T)|`` with ϑ the orthonormal coframe.
    """
    base = geometry.base
    if not base.tangent:
        raise ValueError("vector-field sections need ξ = TM")
    normals = _per_chart(normal, len(base.charts))
    tangents = _per_chart(tangent, len(base.charts))
    maps = []
    for c, (chart, a_fn, t_fn) in enumerate(zip(base.charts, normals, tangents)):
        def raw(p, c=c, a_fn=a_fn, t_fn=t_fn):
            comps = np.einsum("naj,nj->na", base.coframe(c, p), t_fn(p))
            return np.concatenate([np.asarray(a_fn(p)).reshape(-1, 1), comps], axis=1)

        maps.append(_unit_map(chart.domain, raw, geometry.rank, base.step))
    return BundleSection(geometry, tuple(maps))


def ambient_frame(geometry, chart: int, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Outward unit normal ``(N, n+1)`` and ambient frame vectors ``(N, n+1, n)`` of a hypersurface chart.

    The normal is the unit vector making ``(normal, e_1, ..., e_n)`` positively oriented.
    """
    base = geometry.base if isinstance(geometry, StabilizedGeometry) else geometry
    c = base.charts[chart]
    if c.embedding is None or c.frame is None:
        raise ValueError(f"geometry {base.name!r} is not an embedded hypersurface")
    vecs = np.einsum("nki,nia->nka", c.embedding.jacobian(p), c.frame(p))
    amb = vecs.shape[1]
    if amb != vecs.shape[2] + 1:
        raise ValueError("ambient frame needs a hypersurface (codimension one)")
    cof = np.stack([(-1) ** i * np.linalg.det(np.delete(vecs, i, axis=1)) for i in range(amb)], axis=1)
    return cof / np.linalg.norm(cof, axis=1, keepdims=True), vecs


def section_from_ambient_field(geometry: StabilizedGeometry,
                               field: Callable[[np.ndarray], np.ndarray]) -> BundleSection:
    """Section from a vector field ``V̄`` on ``R^{n+1}`` restricted to an embedded boundary ``M``."""
    maps = []
    for c, chart in enumerate(geometry.charts):
        def raw(p, c=c, emb=chart.embedding):
            normal, vecs = ambient_frame(geometry, c, p)
            v = field(emb(p))
            return np.concatenate([np.sum(v * normal, axis=1, keepdims=True),
                                   np.einsum("nk,nka->na", v, vecs)], axis=1)

        maps.append(_unit_map(chart.domain, raw, geometry.rank, geometry.step))
    return BundleSection(geometry, tuple(maps))


def constant_section(geometry: StabilizedGeometry, vector) -> BundleSection:
    vec = np.asarray(vector, dtype=float)
    if vec.shape != (geometry.rank,) or abs(np.linalg.norm(vec) - 1) > UNIT_TOL:
        raise ValueError("constant section needs a unit vector of length n+1")
    return BundleSection(geometry, tuple(SmoothMap.constant(c.domain, vec) for c in geometry.charts))


def zero_section(geometry: StabilizedGeometry) -> BundleSection:
    return constant_section(geometry, np.eye(geometry.rank)[0])


def infinity_section(geometry: StabilizedGeometry) -> BundleSection:
    return constant_section(geometry, -np.eye(geometry.rank)[0])


def sphere_chart(k: int, step: float | None = None) -> SmoothMap:
    """Hyperspherical parametrization of ``S^k ⊂ R^{k+1}``, oriented as the boundary of the ball.

    Coordinates ``(ψ_1, ..., ψ_{k-1}, φ)`` on ``[0, π]^{k-1} × [0, 2π)``; the first
    axis of ``R^{k+1}`` is the polar axis.
    """
    if k < 1:
        raise ValueError("sphere dimension must be at least 1")
    dom = ChartDomain(((0.0, math.pi),) * (k - 1) + ((0.0, 2 * math.pi),), (False,) * (k - 1) + (True,))

    def value(p):
        out = np.empty((p.shape[0], k + 1), dtype=p.dtype)
        sines = np.ones(p.shape[0], dtype=p.dtype)
        for i in range(k - 1):
            out[:, i] = sines * np.cos(p[:, i])
            sines = sines * np.sin(p[:, i])
        out[:, k - 1] = sines * np.cos(p[:, k - 1])
        out[:, k] = sines * np.sin(p[:, k - 1])
        return out

    kwargs = {} if step is None else {"step": step}
    return SmoothMap(dom, k + 1, value, **kwargs)


def fiber_map(geometry, chart: int = 0, base_point=None, step: float | None = None) -> SphereBundleMap:
    """Orientation-preserving isometric inclusion of ``S^n`` into the fibre over ``base_point``."""
    n = geometry.rank - 1
    dom = geometry.charts[chart].domain
    point = (dom.lower + dom.upper) / 2 if base_point is None else np.asarray(base_point, float)
    sph = sphere_chart(n, geometry.step if step is None else step)
    return SphereBundleMap(sph.source, SmoothMap.constant(sph.source, point), sph, chart)
