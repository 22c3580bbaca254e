"""Verifiers: each runs one family of identities and returns a :class:`Report`.

Every check compares a computed left side to a reference right side.  Values
from quadrature get a companion ``<id>.quadrature_resolved`` check whose
tolerance is half the main one; a failure there marks the result inconclusive.
"""
from __future__ import annotations

from dataclasses import replace
from typing import Callable, Mapping

import numpy as np

from ..exterior import DEFAULT_STEP, ChartDomain, KForm, SmoothMap, pullback
from ..geometry import (FramedGeometry, StabilizedGeometry, circle_flat, ellipsoid, flat_box,
                        frame_change, generic_connection, sphere_round, stabilize, torus_flat,
                        trivial_bundle)
from ..indices import DET_TOL, index_by_degree, index_nondegenerate, sum_indices, winding_number
from ..quadrature import (QuadratureSpec, boundary_integral, integrate, integrate_over_atlas)
from ..transgression import (SphereBundleMap, euler_form, fiber_map, infinity_section, psi,
                             section_from_ambient_field, section_from_vector_field, zero_section)
from .report import Check, Report
from .scenarios import Expectation, Scenario, ScenarioError

POINTWISE_SAMPLES = 1000
CUBE_SAFETY = 10.0


def _expectations(defaults: list[Expectation], scenario: Scenario | None) -> dict[str, Expectation]:
    merged = {e.id: e for e in defaults}
    if scenario is not None:
        for e in scenario.expected:
            if e.id not in merged:
                raise ScenarioError(f"scenario {scenario.name!r}: unknown expected id {e.id!r}; "
                                    f"known: {', '.join(merged)}")
            merged[e.id] = e
    return merged


def _add(report: Report, exp: Expectation, lhs: float, estimate: float | None = None,
         note: str = "") -> None:
    report.add(Check.compare(exp.id, lhs, exp.value, exp.tol, exp.provenance, exp.oracle, note))
    if estimate is not None:
        resolved = Check.compare(exp.id + ".quadrature_resolved", estimate, 0.0, exp.tol / 2,
                                 "TRIVIAL", None, "error estimate within half the tolerance")
        if not resolved.passed:
            resolved = replace(resolved, note="inconclusive: refine quadrature")
        report.add(resolved)


def _report(name: str, spec: QuadratureSpec, step: float) -> Report:
    return Report(name, quadrature={"order": spec.order, "subdivision": spec.subdivision,
                                    "periodic_factor": spec.periodic_factor}, fd_step=step)


# -- boundary index identity ---------------------------------------------------

def _index_sum_oracle(field, n: int, spec: QuadratureSpec, step: float) -> tuple[int, str]:
    """Σ ind from the boundary alone: winding number (planar) or the degree of V/|V| on M."""
    if n == 1:
        return winding_number(field, np.zeros(2), 1.0), "winding_number"
    return index_by_degree(field, np.zeros(n + 1), 1.0, n + 1, spec, step), "boundary_degree"


def verify_boundary_index_identity(scenario: Scenario, spec: QuadratureSpec | None = None,
                                   step: float = DEFAULT_STEP) -> Report:
    """Σ ind = χ(X) + ∫_M α*Ψ for odd ``n``, Σ ind = ∫_M α*Ψ for even ``n``.

    ``M`` is the unit sphere bounding the ball ``X``; ``α`` is built from the
    scenario field split into outward-normal and tangential parts.  The scenario
    must state ``index_sum`` and ``boundary_integral``; ``identity`` may override
    the default tolerance.
    """
    spec = scenario.quadrature if spec is None else spec
    missing = {"index_sum", "boundary_integral"} - set(scenario.expectations)
    if missing:
        raise ScenarioError(f"scenario {scenario.name!r} must state {sorted(missing)}")
    report = _report(scenario.name, spec, step)
    field = scenario.vector_field()
    geom = stabilize(scenario.build_geometry(step))
    n = geom.n

    integral, est = section_from_ambient_field(geom, field).integrate_psi(spec)
    total = sum_indices(scenario.zeros, field, spec, step)
    rhs = (scenario.chi + integral) if n % 2 else integral
    defaults = [Expectation("identity", rhs, 1e-6, "PAPER"),
                Expectation("index_sum", 0.0, 0.0, "TRIVIAL"),
                Expectation("boundary_integral", 0.0, 1e-6, "TRIVIAL")]
    exps = _expectations(defaults, scenario)
    ident = replace(exps["identity"], value=rhs)
    _add(report, ident, total,
         note=f"sum of indices vs {'chi + ' if n % 2 else ''}boundary integral, n = {n}")
    _add(report, exps["index_sum"], total)
    _add(report, exps["boundary_integral"], integral, est)

    oracle_sum, oracle = _index_sum_oracle(field, n, spec, step)
    report.add(Check.compare("index_sum_oracle", total, oracle_sum, 0.0, "DERIVED", oracle,
                             "sum of indices vs a count from the boundary alone"))
    for k, z in enumerate(scenario.zeros):
        if z.jacobian is not None and abs(np.linalg.det(np.asarray(z.jacobian))) > DET_TOL:
            by_degree = index_by_degree(field, z.location, z.isolation_radius / 2, z.dim, spec, step)
            report.add(Check.compare(f"zero_{k}.index_agreement", index_nondegenerate(z), by_degree, 0.0,
                                     "DERIVED", "jacobian_sign", "Jacobian sign vs degree integral"))
    return report


# -- random cubes in sphere bundles --------------------------------------------

def _unit_vector_map(src: ChartDomain, rng: np.random.Generator, r: int) -> SmoothMap:
    """``u = w/|w|`` with ``w(t) = 3 w0 + B t + ½ sin(K t + φ)``, analytic Jacobian."""
    d = src.dim
    w0 = rng.normal(size=r)
    w0 /= np.linalg.norm(w0)
    B = rng.normal(size=(r, d))
    K = rng.normal(size=(r, d)) * 3
    ph = rng.uniform(0, 2 * np.pi, size=r)

    def raw(p):
        return 3 * w0 + p @ B.T + 0.5 * np.sin(p @ K.T + ph)

    def value(p):
        w = raw(p)
        return w / np.linalg.norm(w, axis=1, keepdims=True)

    def jacobian(p):
        w = raw(p)
        nw = np.linalg.norm(w, axis=1)
        u = w / nw[:, None]
        jw = B[None] + 0.5 * np.cos(p @ K.T + ph)[:, :, None] * K[None]
        proj = np.eye(r)[None] - u[:, :, None] * u[:, None, :]
        return proj @ jw / nw[:, None, None]

    return SmoothMap(src, r, value, jacobian)


def random_cube_map(rng: np.random.Generator, base_domain: ChartDomain, n: int, scale: float,
                    inset: float = 0.4) -> SphereBundleMap:
    """Smooth map of the cube ``[0, s]^{n+1}`` into the sphere bundle over a chart.

    The base image stays ``inset`` away from the chart walls.
    """
    src = ChartDomain(((0.0, scale),) * (n + 1))
    d = base_domain.dim
    lo = base_domain.lower + np.where(base_domain.periodic, 0.0, inset)
    hi = base_domain.upper - np.where(base_domain.periodic, 0.0, inset)
    center = rng.uniform(lo, hi)
    A = rng.normal(size=(d, n + 1))
    A *= min(1.0, 0.8 * inset / (scale * np.abs(A).sum(axis=1).max()))
    base = SmoothMap.affine(src, A, center)
    return SphereBundleMap(src, base, _unit_vector_map(src, rng, n + 1))


def closed_bundle(n: int, step: float, seed: int = 0) -> StabilizedGeometry:
    """``ν ⊕ ξ`` with ``ξ`` of rank ``n``: a circle, the round sphere, or a curved rank-3 bundle."""
    if n == 1:
        return stabilize(circle_flat(step=step))
    if n == 2:
        return stabilize(sphere_round(step=step))
    if n == 3:
        return stabilize(generic_connection(3, 2, seed=seed, step=step))
    raise ValueError("closedness cubes are available for n = 1, 2, 3")


def cube_closedness(n: int, count: int, spec: QuadratureSpec, step: float, seed: int = 0,
                    scales=(0.1, 0.4)) -> tuple[float, float, float]:
    """Worst ``|∮Ψ| / s^{n+1}`` over random cubes; returns ``(ratio, boundary value, scale)``."""
    geom = closed_bundle(n, step, seed)
    rng = np.random.default_rng(seed)
    worst = (-1.0, 0.0, 0.0)
    for _ in range(count):
        s = rng.uniform(*scales)
        bmap = random_cube_map(rng, geom.charts[0].domain, n, s)
        value, _ = boundary_integral(psi(bmap, geom), spec=spec)
        ratio = abs(value) / s ** (n + 1)
        if ratio > worst[0]:
            worst = (ratio, value, s)
    return worst


def cube_transgression(n: int, count: int, spec: QuadratureSpec, step: float, seed: int = 0,
                       scales=(0.2, 0.5)) -> list[dict]:
    """``∮Ψ`` and ``-∫E(Ω)`` on random cubes in a bundle with a generic so(n+1) connection.

    Each record carries the combined tolerance
    ``CUBE_SAFETY·(quadrature estimates + |R(h) - R(2h)|) + 1e-12``
    where ``R = ∮Ψ + ∫E`` and ``R(2h)`` repeats the computation at twice the step.
    """
    if n % 2 == 0:
        raise ValueError("the Euler form needs even rank, so n must be odd")
    geoms = [generic_connection(n + 1, n + 1, seed=seed, step=h) for h in (step, 2 * step)]
    rng = np.random.default_rng(seed + 1)
    out = []
    for _ in range(count):
        s = rng.uniform(*scales)
        bmap = random_cube_map(rng, geoms[0].charts[0].domain, n, s)
        vals = []
        for geom in geoms:
            b, eb = boundary_integral(psi(bmap, geom), spec=spec)
            e, ee = integrate(pullback(euler_form(geom.charts[0].Omega), bmap.base_map), spec=spec)
            vals.append((b, e, eb + ee))
        (b, e, q), (b2, e2, _) = vals
        trunc = abs((b + e) - (b2 + e2))
        out.append({"boundary": b, "euler": e, "scale": s,
                    "tolerance": CUBE_SAFETY * (q + trunc) + 1e-12})
    return out


# -- fibre normalization, closedness, transgression ----------------------------

def fiber_bundle(n: int, step: float, geometry: str = "default") -> StabilizedGeometry:
    if n == 1:
        return stabilize(circle_flat(step=step))
    if n == 2:
        base = ellipsoid(1, 1, 1.2, step=step) if geometry == "ellipsoid" else sphere_round(step=step)
        return stabilize(base)
    if n == 3:
        return stabilize(flat_box(3, 1, step))
    raise ValueError("fibre integrals are available for n = 1, 2, 3")


def fiber_integral(n: int, spec: QuadratureSpec, step: float = DEFAULT_STEP,
                   geometry: str = "default") -> tuple[float, float]:
    geom = fiber_bundle(n, step, geometry)
    fmap = fiber_map(geom)
    return integrate(psi(fmap, geom), spec=spec)


def verify_fiber_normalization(spec: QuadratureSpec, step: float = DEFAULT_STEP,
                               scenario: Scenario | None = None) -> Report:
    """Ψ integrates to 1 over a fibre for n = 1, 2, 3."""
    defaults = [Expectation(f"fiber_integral_n{n}", 1.0, 1e-8, "PAPER") for n in (1, 2, 3)]
    exps = _expectations(defaults, scenario)
    report = _report(scenario.name if scenario else "fiber_normalization", spec, step)
    for n in (1, 2, 3):
        value, est = fiber_integral(n, spec, step)
        _add(report, exps[f"fiber_integral_n{n}"], value, est)
    return report


def verify_closedness(spec: QuadratureSpec, step: float = DEFAULT_STEP, scenario: Scenario | None = None,
                      count: int | None = None) -> Report:
    """Boundary integrals of Ψ for ``ξ`` on random small cubes vanish relative to ``scale^{n+1}``."""
    params = scenario.params if scenario else {}
    count = int(params.get("cubes_per_rank", 100) if count is None else count)
    defaults = [Expectation(f"closedness_n{n}_worst", 0.0, 1e-5, "DERIVED", "Stokes on cubes")
                for n in (1, 2, 3)]
    exps = _expectations(defaults, scenario)
    report = _report(scenario.name if scenario else "closedness_cubes", spec, step)
    for n in (1, 2, 3):
        ratio, value, s = cube_closedness(n, count, spec, step, seed=int(params.get("seed", 0)))
        _add(report, exps[f"closedness_n{n}_worst"], ratio,
             note=f"max over {count} cubes of |boundary integral| / scale^{n + 1}; "
                  f"worst cube scale {s:.3f}, boundary integral {value:.3e}")
    return report


def verify_odd_transgression(spec: QuadratureSpec, step: float = DEFAULT_STEP,
                             scenario: Scenario | None = None, count: int | None = None) -> Report:
    """``∮_{∂C} Ψ = -∫_C E(Ω)`` on random cubes for n = 1 and 3 with a generic connection.

    Reports the cube with the largest residual relative to its combined tolerance.
    """
    params = scenario.params if scenario else {}
    count = int(params.get("cubes_per_rank", 20) if count is None else count)
    report = _report(scenario.name if scenario else "odd_transgression_cubes", spec, step)
    known = {f"transgression_n{n}_worst" for n in (1, 3)}
    if scenario is not None and set(scenario.expectations) - known:
        raise ScenarioError(f"scenario {scenario.name!r}: unknown expected ids "
                            f"{sorted(set(scenario.expectations) - known)}")
    for n in (1, 3):
        recs = cube_transgression(n, count, spec, step, seed=int(params.get("seed", 0)))
        worst = max(recs, key=lambda r: abs(r["boundary"] + r["euler"]) / r["tolerance"])
        report.add(Check.compare(f"transgression_n{n}_worst", worst["boundary"], -worst["euler"],
                                 worst["tolerance"], "PAPER", None,
                                 f"worst of {count} cubes; tolerance = {CUBE_SAFETY:g} x (quadrature "
                                 f"estimates + step-doubling difference); scale {worst['scale']:.3f}"))
    return report


def verify_transgression_properties(spec: QuadratureSpec, step: float = DEFAULT_STEP) -> Report:
    """Fibre normalization, closedness on cubes, and the odd-rank transgression identity together."""
    report = _report("transgression_properties", spec, step)
    for sub in (verify_fiber_normalization(spec, step), verify_closedness(spec, step),
                verify_odd_transgression(spec, step)):
        report.checks.extend(sub.checks)
    return report


# -- sections over surfaces ----------------------------------------------------

def surface(name: str, step: float) -> FramedGeometry:
    if name == "sphere_round":
        return sphere_round(step=step)
    if name == "ellipsoid":
        return ellipsoid(1, 1, 1.2, step=step)
    raise ScenarioError(f"section checks need sphere_round or ellipsoid, not {name!r}")


def _sample_band(domain: ChartDomain, count: int, margin: float = 0.05, seed: int = 3) -> np.ndarray:
    rng = np.random.default_rng(seed)
    pts = domain.sample(count, rng)
    pts[:, 0] = margin + (np.pi - 2 * margin) * pts[:, 0] / np.pi
    return pts


def pointwise_deviation(a: KForm, b: KForm | None, points: np.ndarray) -> float:
    va = a(points)
    vb = 0.0 if b is None or b.is_zero else b(points)
    return float(np.max(np.abs(va - vb)))


def special_case_deviations(base: FramedGeometry, step: float) -> dict[str, float]:
    """Max pointwise deviations for transversal and tangent boundary fields."""
    out = {}
    geom = stabilize(base)
    pts = _sample_band(base.charts[0].domain, POINTWISE_SAMPLES)
    outward = section_from_vector_field(
        geom, lambda p: 1.0 + 0.5 * np.sin(p[:, 1]) * np.sin(p[:, 0]),
        lambda p: np.zeros((p.shape[0], 2)))
    out["outward_half_euler"] = pointwise_deviation(
        outward.pullback_psi(), euler_form(base.charts[0].Omega) * 0.5, pts)
    tangent = section_from_vector_field(
        geom, lambda p: np.zeros(p.shape[0]),
        lambda p: np.stack([0.3 * np.sin(p[:, 1]), np.ones(p.shape[0])], axis=1))
    out["tangent_sphere"] = pointwise_deviation(tangent.pullback_psi(), None, pts)

    circle = stabilize(circle_flat(step=step))
    cpts = circle.charts[0].domain.sample(POINTWISE_SAMPLES, np.random.default_rng(4))
    out["tangent_circle"] = pointwise_deviation(
        section_from_vector_field(circle, lambda p: np.zeros(p.shape[0]),
                                  lambda p: (1.5 + np.cos(p))).pullback_psi(), None, cpts)
    out["outward_circle"] = pointwise_deviation(
        section_from_vector_field(circle, lambda p: 2.0 + np.sin(p[:, 0]),
                                  lambda p: np.zeros_like(p)).pullback_psi(), None, cpts)

    torus = stabilize(torus_flat(step=step))
    tpts = torus.charts[0].domain.sample(POINTWISE_SAMPLES, np.random.default_rng(5))
    out["tangent_torus"] = pointwise_deviation(
        section_from_vector_field(torus, lambda p: np.zeros(p.shape[0]),
                                  lambda p: np.stack([np.cos(p[:, 0]), 2 + np.sin(p[:, 1] + p[:, 0])],
                                                     axis=1)).pullback_psi(), None, tpts)
    return out


def verify_section_properties(spec: QuadratureSpec, step: float = DEFAULT_STEP,
                              scenario: Scenario | None = None, geometry: str = "sphere_round") -> Report:
    """Section integrals over a sphere-topology surface and the pointwise special cases.

    ∞-section of ``TS²`` gives -1, its 0-section +1, the ∞-section of the trivial
    plane bundle 0, and a fibre 1.  Outward fields pull Ψ back to half the Euler
    form (n = 2) or to zero (n = 1); tangent fields pull it back to zero.
    """
    if scenario is not None and scenario.geometry:
        geometry = scenario.geometry["name"]
    pointwise_tol = 1e-8 if geometry == "sphere_round" else 1e-5
    defaults = [
        Expectation("infinity_section_TS2", -1.0, 1e-6, "PAPER"),
        Expectation("zero_section_TS2", 1.0, 1e-6, "DERIVED", "half Euler form quadrature"),
        Expectation("infinity_section_trivial", 0.0, 1e-6, "PAPER"),
        Expectation("fiber_integral", 1.0, 1e-6, "PAPER"),
        Expectation("outward_half_euler", 0.0, pointwise_tol, "PAPER"),
        Expectation("outward_circle", 0.0, pointwise_tol, "PAPER"),
        Expectation("tangent_circle", 0.0, pointwise_tol, "PAPER"),
        Expectation("tangent_sphere", 0.0, pointwise_tol, "PAPER"),
        Expectation("tangent_torus", 0.0, pointwise_tol, "PAPER"),
    ]
    exps = _expectations(defaults, scenario)
    report = _report(scenario.name if scenario else f"section_properties_{geometry}", spec, step)
    base = surface(geometry, step)
    tangent = stabilize(base)
    trivial = stabilize(trivial_bundle(base, 2))
    v, e = infinity_section(tangent).integrate_psi(spec)
    _add(report, exps["infinity_section_TS2"], v, e)
    v, e = zero_section(tangent).integrate_psi(spec)
    _add(report, exps["zero_section_TS2"], v, e)
    v, e = infinity_section(trivial).integrate_psi(spec)
    _add(report, exps["infinity_section_trivial"], v, e)
    v, e = integrate(psi(fiber_map(tangent), tangent), spec=spec)
    _add(report, exps["fiber_integral"], v, e)
    for key, dev in special_case_deviations(base, step).items():
        _add(report, exps[key], dev, note="max abs deviation over sample points")
    return report


def verify_thom_shadow(spec: QuadratureSpec, step: float = DEFAULT_STEP,
                       scenario: Scenario | None = None) -> Report:
    """``Ψ + ½ σ*E(Ω_ξ)`` integrates to 0 over the ∞-section and to 1 over a fibre."""
    defaults = [
        Expectation("infinity_section_TS2", 0.0, 1e-6, "DERIVED", "sum of section and Euler quadratures"),
        Expectation("fiber_TS2", 1.0, 1e-6, "DERIVED", "base form vanishes on a fibre"),
        Expectation("infinity_section_trivial", 0.0, 1e-6, "TRIVIAL"),
        Expectation("fiber_trivial", 1.0, 1e-6, "DERIVED", "base form vanishes on a fibre"),
    ]
    exps = _expectations(defaults, scenario)
    report = _report(scenario.name if scenario else "thom_shadow", spec, step)
    base = sphere_round(step=step)
    for label, geom in (("TS2", stabilize(base)), ("trivial", stabilize(trivial_bundle(base, 2)))):
        euler = euler_form(geom.base.charts[0].Omega)

        def combined(bmap: SphereBundleMap, geom=geom, euler=euler) -> KForm:
            return psi(bmap, geom) + pullback(euler, bmap.base_map) * 0.5

        section = infinity_section(geom)
        v, e = integrate_over_atlas(lambda c: combined(section.bundle_map(c)), geom, spec)
        _add(report, exps[f"infinity_section_{label}"], v, e)
        v, e = integrate(combined(fiber_map(geom)), spec=spec)
        _add(report, exps[f"fiber_{label}"], v, e)
    return report


def verify_gauss_bonnet(spec: QuadratureSpec, step: float = DEFAULT_STEP,
                        scenario: Scenario | None = None) -> Report:
    """``(1/2π) ∫ Ω₁₂`` equals the Euler characteristic on the built-in surfaces."""
    cases = {
        "sphere_round": sphere_round(step=step),
        "ellipsoid": ellipsoid(1, 1, 1.2, step=step),
        "torus_flat": torus_flat(step=step),
    }
    defaults = [Expectation(f"gauss_bonnet_{k}", v, 1e-6, "TRIVIAL")
                for k, v in (("sphere_round", 2.0), ("ellipsoid", 2.0), ("torus_flat", 0.0))]
    exps = _expectations(defaults, scenario)
    report = _report(scenario.name if scenario else "gauss_bonnet", spec, step)
    for key, geom in cases.items():
        v, e = integrate_over_atlas(lambda c, geom=geom: geom.charts[c].Omega[0, 1] * (0.5 / np.pi),
                                    geom, spec)
        _add(report, exps[f"gauss_bonnet_{key}"], v, e)
    return report


# -- frame changes -------------------------------------------------------------

def random_rotation_field(domain: ChartDomain, rank: int, rng: np.random.Generator,
                          amplitude: float = 1.0) -> SmoothMap:
    """Smooth SO(rank)-valued map as a product of plane rotations, analytic Jacobian.

    Periodic axes get integer frequencies so the field is single-valued.
    """
    d = domain.dim
    planes = [(i, j) for i in range(rank) for j in range(i + 1, rank)]
    m = len(planes)
    freq = rng.normal(size=(m, d)) * 1.5
    per = list(domain.periodic)
    freq[:, per] = rng.choice([-2, -1, 1, 2], size=(m, sum(per)))
    amp = rng.normal(size=m) * amplitude
    phase = rng.uniform(0, 2 * np.pi, size=m)
    offset = rng.uniform(0, 2 * np.pi, size=m)

    def rot(angle, i, j, derivative=False):
        N = angle.shape[0]
        c, s = np.cos(angle), np.sin(angle)
        out = np.zeros((N, rank, rank)) if derivative else np.broadcast_to(np.eye(rank), (N, rank, rank)).copy()
        if derivative:
            c, s = -s, c
        out[:, i, i], out[:, j, j], out[:, i, j], out[:, j, i] = c, c, -s, s
        return out

    def angles(p):
        arg = p @ freq.T + phase
        return offset + amp * np.sin(arg), (amp * np.cos(arg))[:, :, None] * freq[None]

    def value(p):
        a, _ = angles(p)
        g = np.broadcast_to(np.eye(rank), (p.shape[0], rank, rank))
        for k, (i, j) in enumerate(planes):
            g = g @ rot(a[:, k], i, j)
        return g.reshape(p.shape[0], -1)

    def jacobian(p):
        a, da = angles(p)
        rots = [rot(a[:, k], i, j) for k, (i, j) in enumerate(planes)]
        drots = [rot(a[:, k], i, j, True) for k, (i, j) in enumerate(planes)]
        N = p.shape[0]
        out = np.zeros((N, rank, rank, d))
        for k in range(m):
            left = np.broadcast_to(np.eye(rank), (N, rank, rank))
            for q in range(k):
                left = left @ rots[q]
            right = np.broadcast_to(np.eye(rank), (N, rank, rank))
            for q in range(k + 1, m):
                right = right @ rots[q]
            out += (left @ drots[k] @ right)[..., None] * da[:, k, None, None, :]
        return out.reshape(N, rank * rank, d)

    return SmoothMap(domain, rank * rank, value, jacobian)


def _rotated_bundle_map(bmap: SphereBundleMap, g: SmoothMap, rank: int, pad: bool) -> SphereBundleMap:
    """The same bundle point written in the rotated frame: ``u' = Ĝᵀ u``, ``Ĝ = diag(1, g)`` if padded."""
    r = bmap.u.target_dim

    def full(m):
        if not pad:
            return m
        out = np.zeros(m.shape[:1] + (r, r) + m.shape[3:])
        out[:, 1:, 1:] = m
        if m.ndim == 3:
            out[:, 0, 0] = 1.0
        return out

    def G(p):
        return full(g(bmap.base_map(p)).reshape(-1, rank, rank))

    def value(p):
        return np.einsum("nab,na->nb", G(p), bmap.u(p))

    def jacobian(p):
        dg = g.jacobian(bmap.base_map(p)).reshape(p.shape[0], rank, rank, -1)
        dG = full(np.einsum("nabk,nki->nabi", dg, bmap.base_map.jacobian(p)))
        return (np.einsum("nabi,na->nbi", dG, bmap.u(p))
                + np.einsum("nab,nai->nbi", G(p), bmap.u.jacobian(p)))

    return SphereBundleMap(bmap.source, bmap.base_map, SmoothMap(bmap.source, r, value, jacobian), bmap.chart)


def frame_change_deviation(geom: FramedGeometry, changes: int, seed: int = 0,
                           samples: int = 200, scale: float = 0.3) -> float:
    """Max pointwise change of Ψ under random smooth frame rotations of ``geom``."""
    rng = np.random.default_rng(seed)
    pad = geom.tangent
    bundle = stabilize(geom) if pad else geom
    n = bundle.rank - 1 if pad else geom.rank - 1
    worst = 0.0
    for _ in range(changes):
        g = random_rotation_field(geom.charts[0].domain, geom.rank, rng)
        rotated = frame_change(geom, g)
        rbundle = stabilize(rotated) if pad else rotated
        bmap = random_cube_map(rng, geom.charts[0].domain, n, scale)
        pts = bmap.source.sample(samples, rng)
        before = psi(bmap, bundle)(pts)
        after = psi(_rotated_bundle_map(bmap, g, geom.rank, pad), rbundle)(pts)
        worst = max(worst, float(np.max(np.abs(before - after))))
    return worst


def verify_frame_equivariance(spec: QuadratureSpec, step: float = DEFAULT_STEP,
                              scenario: Scenario | None = None) -> Report:
    """Ψ is unchanged pointwise when the frame of ``ξ`` is rotated by a smooth SO(n) field."""
    params = scenario.params if scenario else {}
    changes = int(params.get("changes", 20))
    cases = {
        "torus_flat_SO2": torus_flat(step=step),
        "flat_box_SO3": flat_box(3, 3, step),
        "ellipsoid_SO2": ellipsoid(1, 1, 1.2, step=step),
    }
    defaults = [Expectation("frame_change_torus_flat_SO2", 0.0, 1e-9, "PAPER"),
                Expectation("frame_change_flat_box_SO3", 0.0, 1e-9, "PAPER"),
                Expectation("frame_change_ellipsoid_SO2", 0.0, 1e-6, "PAPER")]
    exps = _expectations(defaults, scenario)
    report = _report(scenario.name if scenario else "frame_equivariance", spec, step)
    for k, (key, geom) in enumerate(cases.items()):
        dev = frame_change_deviation(geom, changes, seed=int(params.get("seed", 0)) + k)
        _add(report, exps[f"frame_change_{key}"], dev,
             note=f"max abs change of Psi over {changes} random frame rotations")
    return report


# -- dispatch ------------------------------------------------------------------

VERIFIERS: Mapping[str, Callable[..., Report]] = {
    "fiber_normalization": verify_fiber_normalization,
    "closedness": verify_closedness,
    "odd_transgression": verify_odd_transgression,
    "section_properties": verify_section_properties,
    "thom_shadow": verify_thom_shadow,
    "gauss_bonnet": verify_gauss_bonnet,
    "frame_equivariance": verify_frame_equivariance,
}


def run_scenario(scenario: Scenario, step: float = DEFAULT_STEP) -> Report:
    if scenario.kind == "boundary_index":
        return verify_boundary_index_identity(scenario, scenario.quadrature, step)
    return VERIFIERS[scenario.kind](scenario.quadrature, step, scenario=scenario)


def sweep_quantity(scenario: Scenario, spec: QuadratureSpec, step: float = DEFAULT_STEP) -> tuple[float, float]:
    """The main quadrature value of a scenario, for convergence tables."""
    kind = scenario.kind
    if kind == "boundary_index":
        geom = stabilize(scenario.build_geometry(step))
        return section_from_ambient_field(geom, scenario.vector_field()).integrate_psi(spec)
    if kind == "fiber_normalization":
        return fiber_integral(int(scenario.params.get("sweep_n", 2)), spec, step)
    if kind == "section_properties":
        geom = stabilize(surface(scenario.geometry["name"] if scenario.geometry else "sphere_round", step))
        return infinity_section(geom).integrate_psi(spec)
    if kind == "gauss_bonnet":
        geom = sphere_round(step=step)
        return integrate_over_atlas(lambda c: geom.charts[c].Omega[0, 1] * (0.5 / np.pi), geom, spec)
    raise ScenarioError(f"scenario {scenario.name!r} of kind {kind!r} has no single swept quantity")
