"""Framed base geometries: charts, orthonormal frames, connections and curvature.

Conventions: ``frame`` returns the coordinate components of the frame vectors
as columns, ``F[:, i, a] = e_a^i``.  The connection matrix satisfies
``∇e_b = Σ_a ω[a, b] e_a`` so that a section ``v = Σ u_a e_a`` has covariant
derivative ``du + ω u``.  Curvature is ``Ω = dω + ω∧ω``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .exterior import (DEFAULT_STEP, ChartDomain, Evaluator, KForm, SmoothMap,
                       exterior_derivative, matwedge)

COMPLEX_STEP = 1e-30
POLE_MARGIN = 1e-3


@dataclass(frozen=True)
class Chart:
    name: str
    domain: ChartDomain
    omega: KForm
    Omega: KForm
    embedding: SmoothMap | None = None
    metric: Evaluator | None = None
    frame: Evaluator | None = None


@dataclass(frozen=True)
class Region:
    """An integration box inside one chart; regions of an atlas tile the manifold."""

    chart: int
    domain: ChartDomain


@dataclass(frozen=True)
class FramedGeometry:
    name: str
    dim: int
    rank: int
    charts: tuple[Chart, ...]
    regions: tuple[Region, ...]
    tangent: bool = True
    euler_characteristic: int | None = None
    step: float = DEFAULT_STEP

    def connection(self, chart: int = 0) -> tuple[KForm, KForm]:
        c = self.charts[chart]
        return c.omega, c.Omega

    def coframe(self, chart: int, points) -> np.ndarray:
        """Dual coframe ``ϑ^a = g(e_a, ·)`` in coordinates, shape ``(N, rank, dim)``."""
        c = self.charts[chart]
        if c.metric is None or c.frame is None:
            raise ValueError(f"geometry {self.name!r} carries no metric/frame on chart {c.name!r}")
        return _coframe(c.metric, c.frame, np.atleast_2d(points))


@dataclass(frozen=True)
class StabilizedGeometry:
    """``E = ν ⊕ ξ``: ν is the trivial line with trivial connection, placed first."""

    base: FramedGeometry
    omegaE: tuple[KForm, ...]
    OmegaE: tuple[KForm, ...]

    @property
    def n(self) -> int:
        return self.base.rank

    @property
    def rank(self) -> int:
        return self.base.rank + 1

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def name(self) -> str:
        return self.base.name

    @property
    def charts(self) -> tuple[Chart, ...]:
        return self.base.charts

    @property
    def regions(self) -> tuple[Region, ...]:
        return self.base.regions

    @property
    def step(self) -> float:
        return self.base.step

    def connection(self, chart: int = 0) -> tuple[KForm, KForm]:
        return self.omegaE[chart], self.OmegaE[chart]


def _coframe(metric: Evaluator, frame: Evaluator, p: np.ndarray) -> np.ndarray:
    return np.einsum("nia,nij->naj", frame(p), metric(p))


def _sample_points(domain: ChartDomain, count: int, seed: int) -> np.ndarray:
    return domain.sample(count, np.random.default_rng(seed))


def check_metric_and_frame(metric: Evaluator, frame: Evaluator, domain: ChartDomain,
                           count: int = 64, seed: int = 0, tol: float = 1e-8) -> None:
    pts = _sample_points(domain, count, seed)
    g = np.asarray(metric(pts))
    for p, gp in zip(pts, g):
        if not np.allclose(gp, gp.T, atol=1e-12):
            raise ValueError(f"metric is not symmetric at point {p.tolist()}")
        try:
            np.linalg.cholesky(gp)
        except np.linalg.LinAlgError:
            raise ValueError(f"metric is not positive definite at point {p.tolist()}") from None
    f = np.asarray(frame(pts))
    gram = np.einsum("nia,nij,njb->nab", f, g, f)
    bad = np.abs(gram - np.eye(f.shape[2])).max(axis=(1, 2)) > tol
    if bad.any():
        raise ValueError(f"frame is not orthonormal at point {pts[bad][0].tolist()}")
    if f.shape[1] == f.shape[2] and np.any(np.linalg.det(f) <= 0):
        raise ValueError("frame is not positively oriented")


def levi_civita_from_metric(metric: Evaluator, chart: ChartDomain, frame: Evaluator,
                            step: float = DEFAULT_STEP, derivative: str = "complex") -> KForm:
    """Levi-Civita connection matrix of ``metric`` in the orthonormal ``frame``.

    Solves the torsion-free structure equations ``dϑ^a = -ω[a,b]∧ϑ^b`` for the
    antisymmetric ω.  The coframe derivative uses a complex step by default
    (evaluators must then accept complex points); ``derivative="central"`` uses
    central differences with ``step``.
    """
    if derivative not in ("complex", "central"):
        raise ValueError("derivative must be 'complex' or 'central'")
    check_metric_and_frame(metric, frame, chart)
    dim = chart.dim

    def dcoframe(p):
        # (N, rank, dim_j, dim_k) = ∂_k ϑ^a_j
        parts = []
        for k in range(dim):
            if derivative == "complex":
                shifted = p.astype(complex)
                shifted[:, k] += 1j * COMPLEX_STEP
                parts.append(_coframe(metric, frame, shifted).imag / COMPLEX_STEP)
            else:
                e = np.zeros(dim)
                e[k] = step
                parts.append((_coframe(metric, frame, p + e) - _coframe(metric, frame, p - e)) / (2 * step))
        return np.stack(parts, axis=-1)

    def components(p):
        p = chart.wrap(p)
        th = _coframe(metric, frame, p)
        f = frame(p)
        dth = dcoframe(p)
        d2 = np.swapaxes(dth, 2, 3) - dth  # D[a, i, j] = ∂_i ϑ^a_j - ∂_j ϑ^a_i
        c = np.einsum("naij,nib,njc->nabc", d2, f, f)
        w = 0.5 * (np.einsum("nyzx->nxyz", c) - np.einsum("nzxy->nxyz", c) + c)
        return np.einsum("nxyz,nzj->nxyj", w, th)

    r = frame(chart.lower[None, :] * 0.5 + chart.upper[None, :] * 0.5).shape[2]
    return KForm(chart, 1, components, (r, r))


def torsion_residual(metric: Evaluator, frame: Evaluator, omega: KForm, points,
                     step: float = DEFAULT_STEP) -> float:
    """Max |dϑ^a + ω[a,b]∧ϑ^b| with dϑ from central differences (independent check)."""
    domain = omega.domain
    theta = KForm(domain, 1, lambda p: _coframe(metric, frame, domain.wrap(p)), omega.shape[:1])
    residual = exterior_derivative(theta, step) + matwedge(omega, theta)
    return float(np.abs(residual(points)).max())


def curvature_from_connection(omega: KForm, step: float = DEFAULT_STEP) -> KForm:
    return exterior_derivative(omega, step) + matwedge(omega, omega)


def _pad_first(form: KForm) -> KForm:
    r = form.shape[0]
    shape = (r + 1, r + 1)
    if form.is_zero:
        return KForm.zero(form.domain, form.degree, shape)

    def components(p):
        inner = form(p)
        out = np.zeros((inner.shape[0],) + shape + inner.shape[-1:], dtype=inner.dtype)
        out[:, 1:, 1:] = inner
        return out

    return KForm(form.domain, form.degree, components, shape)


def stabilize(geom: FramedGeometry) -> StabilizedGeometry:
    return StabilizedGeometry(
        geom,
        tuple(_pad_first(c.omega) for c in geom.charts),
        tuple(_pad_first(c.Omega) for c in geom.charts),
    )


def check_rotation_field(g: SmoothMap, rank: int, count: int = 100, seed: int = 0) -> None:
    pts = _sample_points(g.source, count, seed)
    mats = g(pts).reshape(-1, rank, rank)
    err = np.abs(np.einsum("nji,njk->nik", mats, mats) - np.eye(rank)).max(axis=(1, 2))
    bad = (err >= 1e-9) | (np.linalg.det(mats) <= 0)
    if bad.any():
        raise ValueError(f"frame change is not SO({rank})-valued at point {pts[bad][0].tolist()}")


def frame_change(geom: FramedGeometry, g: SmoothMap | Sequence[SmoothMap]) -> FramedGeometry:
    """Replace the frame ``e`` by ``e g``: ``ω ↦ g⁻¹ω g + g⁻¹dg``, ``Ω ↦ g⁻¹Ω g``.

    ``g`` maps each chart into row-major ``rank × rank`` matrices.
    """
    maps = [g] * len(geom.charts) if isinstance(g, SmoothMap) else list(g)
    if len(maps) != len(geom.charts):
        raise ValueError("need one frame-change map per chart")
    r = geom.rank
    charts = []
    for chart, gm in zip(geom.charts, maps):
        if gm.source != chart.domain or gm.target_dim != r * r:
            raise ValueError(f"frame change on chart {chart.name!r} has the wrong domain or size")
        check_rotation_field(gm, r)
        G = KForm.from_map(gm, (r, r))
        Gt = G.transpose()
        dG = KForm(chart.domain, 1,
                   lambda p, gm=gm: gm.jacobian(p).reshape(p.shape[0], r, r, -1), (r, r))
        omega = matwedge(matwedge(Gt, chart.omega), G) + matwedge(Gt, dG)
        Omega = matwedge(matwedge(Gt, chart.Omega), G)
        frame = None
        if chart.frame is not None:
            frame = (lambda p, f=chart.frame, gm=gm:
                     np.einsum("nia,nab->nib", f(p), gm(p).reshape(-1, r, r)))
        charts.append(replace(chart, omega=omega, Omega=Omega, frame=frame))
    return replace(geom, name=geom.name + "+frame_change", charts=tuple(charts))


# -- built-in geometries -------------------------------------------------------

def _positive(**params):
    for key, val in params.items():
        if not val > 0:
            raise ValueError(f"geometry parameter {key} must be positive, got {val}")


def _polar_regions(margin: float) -> tuple[Region, ...]:
    """Pole caps and the band of a colatitude/longitude chart; disjoint, covering."""
    out = []
    for lo, hi in ((0.0, margin), (margin, np.pi - margin), (np.pi - margin, np.pi)):
        out.append(Region(0, ChartDomain(((lo, hi), (0.0, 2 * np.pi)), (False, True))))
    return tuple(out)


SPHERE_CHART = ChartDomain(((0.0, np.pi), (0.0, 2 * np.pi)), (False, True))


def circle_flat(radius: float = 1.0, step: float = DEFAULT_STEP) -> FramedGeometry:
    _positive(radius=radius)
    dom = ChartDomain(((0.0, 2 * np.pi),), (True,))
    emb = SmoothMap(dom, 2, lambda p: radius * np.stack([np.cos(p[:, 0]), np.sin(p[:, 0])], -1),
                    lambda p: radius * np.stack([-np.sin(p[:, 0]), np.cos(p[:, 0])], -1)[:, :, None],
                    step=step)
    chart = Chart("angle", dom, KForm.zero(dom, 1, (1, 1)), KForm.zero(dom, 2, (1, 1)), emb,
                  metric=lambda p: np.full((p.shape[0], 1, 1), radius ** 2),
                  frame=lambda p: np.full((p.shape[0], 1, 1), 1.0 / radius))
    return FramedGeometry("circle_flat", 1, 1, (chart,), (Region(0, dom),), True, 0, step)


def _sphere_embedding(radii, step):
    a, b, c = radii

    def value(p):
        t, f = p[:, 0], p[:, 1]
        return np.stack([a * np.sin(t) * np.cos(f), b * np.sin(t) * np.sin(f), c * np.cos(t)], -1)

    def jacobian(p):
        t, f = p[:, 0], p[:, 1]
        d_t = np.stack([a * np.cos(t) * np.cos(f), b * np.cos(t) * np.sin(f), -c * np.sin(t)], -1)
        d_f = np.stack([-a * np.sin(t) * np.sin(f), b * np.sin(t) * np.cos(f), 0 * t], -1)
        return np.stack([d_t, d_f], -1)

    return SmoothMap(SPHERE_CHART, 3, value, jacobian, step=step)


def sphere_round(radius: float = 1.0, step: float = DEFAULT_STEP,
                 pole_margin: float = POLE_MARGIN) -> FramedGeometry:
    """Round sphere in colatitude/longitude with the closed-form connection ``ω[0,1] = -cos t dφ``."""
    _positive(radius=radius)
    dom = SPHERE_CHART
    emb = _sphere_embedding((radius,) * 3, step)

    def metric(p):
        out = np.zeros((p.shape[0], 2, 2), dtype=p.dtype)
        out[:, 0, 0] = radius ** 2
        out[:, 1, 1] = (radius * np.sin(p[:, 0])) ** 2
        return out

    def frame(p):
        out = np.zeros((p.shape[0], 2, 2), dtype=p.dtype)
        out[:, 0, 0] = 1.0 / radius
        out[:, 1, 1] = 1.0 / (radius * np.sin(p[:, 0]))
        return out

    w = KForm.from_coeffs(dom, 1, {(1,): lambda p: -np.cos(p[:, 0])})
    omega = KForm.stack([[None, w], [-w, None]], dom, 1)
    chart = Chart("colatitude_longitude", dom, omega, curvature_from_connection(omega, step),
                  emb, metric, frame)
    return FramedGeometry(f"sphere_round({radius:g})", 2, 2, (chart,), _polar_regions(pole_margin),
                          True, 2, step)


def ellipsoid(a: float, b: float, c: float, step: float = DEFAULT_STEP,
              pole_margin: float = POLE_MARGIN) -> FramedGeometry:
    """Ellipsoid with induced metric; Gram-Schmidt frame and Levi-Civita connection computed numerically."""
    _positive(a=a, b=b, c=c)
    dom = SPHERE_CHART
    emb = _sphere_embedding((a, b, c), step)

    def metric(p):
        j = emb._jacobian(p)
        return np.einsum("nki,nkj->nij", j, j)

    def frame(p):
        # e1 = ∂t/|∂t|; e2 from ∂φ/sin t, which stays smooth through the poles
        t, f = p[:, 0], p[:, 1]
        d_t = np.stack([a * np.cos(t) * np.cos(f), b * np.cos(t) * np.sin(f), -c * np.sin(t)], -1)
        d_fs = np.stack([-a * np.sin(f), b * np.cos(f), 0 * t], -1)
        gtt = np.sum(d_t * d_t, -1)
        gtf_s = np.sum(d_t * d_fs, -1)
        gff_s = np.sum(d_fs * d_fs, -1)
        norm_w = np.sqrt(gff_s - gtf_s ** 2 / gtt)  # |∂φ - proj| / sin t
        out = np.zeros((p.shape[0], 2, 2), dtype=np.result_type(p, float))
        out[:, 0, 0] = 1.0 / np.sqrt(gtt)
        out[:, 0, 1] = -gtf_s / gtt / norm_w
        out[:, 1, 1] = 1.0 / (np.sin(t) * norm_w)
        return out

    omega = levi_civita_from_metric(metric, dom, frame, step)
    chart = Chart("colatitude_longitude", dom, omega, curvature_from_connection(omega, step),
                  emb, metric, frame)
    return FramedGeometry(f"ellipsoid({a:g},{b:g},{c:g})", 2, 2, (chart,), _polar_regions(pole_margin),
                          True, 2, step)


def torus_flat(r1: float = 1.0, r2: float = 1.0, step: float = DEFAULT_STEP) -> FramedGeometry:
    """Flat torus ``R²/(2πr1 Z × 2πr2 Z)`` in angle coordinates (Clifford embedding into R⁴)."""
    _positive(r1=r1, r2=r2)
    dom = ChartDomain(((0.0, 2 * np.pi), (0.0, 2 * np.pi)), (True, True))

    def value(p):
        x, y = p[:, 0], p[:, 1]
        return np.stack([r1 * np.cos(x), r1 * np.sin(x), r2 * np.cos(y), r2 * np.sin(y)], -1)

    def jacobian(p):
        x, y = p[:, 0], p[:, 1]
        z = 0 * x
        return np.stack([np.stack([-r1 * np.sin(x), r1 * np.cos(x), z, z], -1),
                         np.stack([z, z, -r2 * np.sin(y), r2 * np.cos(y)], -1)], -1)

    diag_m, diag_f = np.diag([r1 ** 2, r2 ** 2]), np.diag([1 / r1, 1 / r2])
    chart = Chart("angles", dom, KForm.zero(dom, 1, (2, 2)), KForm.zero(dom, 2, (2, 2)),
                  SmoothMap(dom, 4, value, jacobian, step=step),
                  lambda p: np.broadcast_to(diag_m, (p.shape[0], 2, 2)),
                  lambda p: np.broadcast_to(diag_f, (p.shape[0], 2, 2)))
    return FramedGeometry(f"torus_flat({r1:g},{r2:g})", 2, 2, (chart,), (Region(0, dom),), True, 0, step)


def trivial_bundle(base: FramedGeometry, rank: int = 2) -> FramedGeometry:
    """``base × R^rank`` with the trivial flat connection."""
    charts = tuple(Chart(c.name, c.domain, KForm.zero(c.domain, 1, (rank, rank)),
                         KForm.zero(c.domain, 2, (rank, rank)), c.embedding)
                   for c in base.charts)
    return FramedGeometry(f"trivial{rank}({base.name})", base.dim, rank, charts, base.regions,
                          False, base.euler_characteristic, base.step)


def flat_box(rank: int, dim: int = 1, step: float = DEFAULT_STEP) -> FramedGeometry:
    """Trivial flat rank-``rank`` bundle over the box ``[-1, 1]^dim``."""
    dom = ChartDomain(((-1.0, 1.0),) * dim)
    chart = Chart("box", dom, KForm.zero(dom, 1, (rank, rank)), KForm.zero(dom, 2, (rank, rank)))
    return FramedGeometry(f"flat_box({rank},{dim})", dim, rank, (chart,), (Region(0, dom),),
                          False, None, step)


def generic_connection(rank: int, dim: int, seed: int = 0, amplitude: float = 0.7,
                       step: float = DEFAULT_STEP) -> FramedGeometry:
    """Trivial rank-``rank`` bundle over ``[-1, 1]^dim`` with a random smooth so(rank) connection.

    ``ω[i, j] = Σ_k A_ijk sin(B_ijk · x + C_ijk) dx_k`` antisymmetrized; analytic
    coefficients, curvature by central differences.
    """
    rng = np.random.default_rng(seed)
    amp = rng.normal(size=(rank, rank, dim)) * amplitude
    freq = rng.normal(size=(rank, rank, dim, dim))
    phase = rng.uniform(0, 2 * np.pi, size=(rank, rank, dim))
    dom = ChartDomain(((-1.0, 1.0),) * dim)

    def components(p):
        arg = (p @ freq.reshape(-1, dim).T).reshape(p.shape[0], rank, rank, dim)
        raw = amp[None] * np.sin(arg + phase[None])
        return raw - np.swapaxes(raw, 1, 2)

    omega = KForm(dom, 1, components, (rank, rank))
    chart = Chart("box", dom, omega, curvature_from_connection(omega, step))
    return FramedGeometry(f"generic_connection({rank},{dim},{seed})", dim, rank, (chart,),
                          (Region(0, dom),), False, None, step)


_BUILTINS: dict[str, Callable[..., FramedGeometry]] = {
    "circle_flat": circle_flat,
    "sphere_round": sphere_round,
    "torus_flat": torus_flat,
    "ellipsoid": ellipsoid,
}


def builtin_geometry(name: str, step: float = DEFAULT_STEP, **params) -> FramedGeometry:
    """Look up a named geometry. ``trivial_plane`` is the trivial rank-2 bundle over the round sphere."""
    if name == "trivial_plane":
        return trivial_bundle(sphere_round(step=step, **params), 2)
    if name not in _BUILTINS:
        raise ValueError(f"unknown geometry {name!r}; available: "
                         f"{', '.join(sorted(_BUILTINS) + ['trivial_plane'])}")
    return _BUILTINS[name](step=step, **params)
