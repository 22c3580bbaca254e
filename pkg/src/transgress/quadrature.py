"""Tensor-product quadrature of top-degree forms over chart boxes, atlases and cube boundaries.

Non-periodic axes use Gauss-Legendre on ``subdivision`` equal cells; periodic
axes use the trapezoid rule, which is spectrally accurate for smooth periodic
integrands.  Every integral is returned with an error estimate: the
difference from the same rule two points coarser.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .exterior import ChartDomain, KForm

CHUNK = 32768


@dataclass(frozen=True)
class QuadratureSpec:
    order: int = 24
    subdivision: int = 1
    periodic_factor: int = 4  # trapezoid points per periodic axis = order * factor

    def __post_init__(self):
        if self.order < 2:
            raise ValueError("quadrature order must be at least 2")
        if self.subdivision < 1:
            raise ValueError("subdivision must be at least 1")
        if self.periodic_factor < 1:
            raise ValueError("periodic_factor must be at least 1")

    @property
    def coarse_order(self) -> int:
        return max(self.order - 2, 1)


DEFAULT_SPEC = QuadratureSpec()


@lru_cache(maxsize=None)
def _gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def axis_rule(lo: float, hi: float, periodic: bool, spec: QuadratureSpec,
              order: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    order = spec.order if order is None else order
    if periodic:
        count = order * spec.periodic_factor * spec.subdivision
        nodes = lo + (hi - lo) * np.arange(count) / count
        return nodes, np.full(count, (hi - lo) / count)
    x, w = _gauss_legendre(order)
    edges = np.linspace(lo, hi, spec.subdivision + 1)
    half = np.diff(edges) / 2
    mids = (edges[:-1] + edges[1:]) / 2
    nodes = (mids[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def tensor_grid(domain: ChartDomain, spec: QuadratureSpec,
                order: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    rules = [axis_rule(lo, hi, per, spec, order) for (lo, hi), per in zip(domain.bounds, domain.periodic)]
    nodes = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    weights = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    points = np.stack([n.ravel() for n in nodes], axis=-1)
    return points, np.prod(np.stack([w.ravel() for w in weights]), axis=0)


def _quadrature_sum(fn: Callable[[np.ndarray], np.ndarray], points: np.ndarray,
                    weights: np.ndarray) -> float:
    total = 0.0
    for start in range(0, points.shape[0], CHUNK):  # fixed-order reduction
        sl = slice(start, start + CHUNK)
        total += float(np.dot(weights[sl], fn(points[sl])))
    return total


def integrate_function(fn: Callable[[np.ndarray], np.ndarray], domain: ChartDomain,
                       spec: QuadratureSpec = DEFAULT_SPEC) -> tuple[float, float]:
    """Integrate a scalar function of chart coordinates against ``dx_1 ... dx_d``."""
    value = _quadrature_sum(fn, *tensor_grid(domain, spec))
    coarse = _quadrature_sum(fn, *tensor_grid(domain, spec, spec.coarse_order))
    return value, abs(value - coarse)


def _top_coefficient(form: KForm, domain: ChartDomain) -> Callable[[np.ndarray], np.ndarray]:
    if form.shape:
        raise ValueError("only scalar forms can be integrated")
    if form.degree != domain.dim:
        raise ValueError(f"cannot integrate a {form.degree}-form over a {domain.dim}-dimensional domain")
    return lambda p: form(p)[:, 0]


def integrate(form: KForm, domain: ChartDomain | None = None,
              spec: QuadratureSpec = DEFAULT_SPEC) -> tuple[float, float]:
    """Integral of a top-degree form over ``domain`` (default: the form's own chart).

    Returns ``(value, error_estimate)``.
    """
    domain = form.domain if domain is None else domain
    if domain.dim != form.domain.dim:
        raise ValueError("integration box and form live in different dimensions")
    if form.is_zero:
        _top_coefficient(form, domain)
        return 0.0, 0.0
    return integrate_function(_top_coefficient(form, domain), domain, spec)


def _boxes_overlap(a: ChartDomain, b: ChartDomain) -> bool:
    return all(min(ah, bh) - max(al, bl) > 1e-12 for (al, ah), (bl, bh) in zip(a.bounds, b.bounds))


def check_disjoint(regions: Sequence) -> None:
    """Raise if two regions of the same chart overlap in positive measure."""
    for i, ri in enumerate(regions):
        for rj in regions[i + 1:]:
            if ri.chart == rj.chart and _boxes_overlap(ri.domain, rj.domain):
                raise ValueError(f"overlapping integration ranges in chart {ri.chart}: "
                                 f"{ri.domain.bounds} and {rj.domain.bounds}")


def integrate_over_atlas(forms: Sequence[KForm] | Callable[[int], KForm], geometry,
                         spec: QuadratureSpec = DEFAULT_SPEC) -> tuple[float, float]:
    """Sum of per-region integrals; ``forms[c]`` is the top form on chart ``c``."""
    regions = geometry.regions
    check_disjoint(regions)
    get = forms if callable(forms) else forms.__getitem__
    value = err = 0.0
    for region in regions:
        v, e = integrate(get(region.chart), region.domain, spec)
        value += v
        err += e
    return value, err + getattr(geometry, "uncovered_bound", 0.0)


def face_domains(domain: ChartDomain):
    """Yield ``(axis, side, sign, face_domain)`` for the faces of a box.

    ``sign`` is the boundary orientation relative to the increasing coordinates of
    the face (outward normal first): ``(-1)**axis`` on the upper face, opposite on
    the lower one.
    """
    for axis in range(domain.dim):
        rest = tuple(b for i, b in enumerate(domain.bounds) if i != axis)
        per = tuple(p for i, p in enumerate(domain.periodic) if i != axis)
        for side, s in ((0, -1), (1, 1)):
            yield axis, side, s * (-1) ** axis, ChartDomain(rest, per)


def boundary_integral(form: KForm, domain: ChartDomain | None = None,
                      spec: QuadratureSpec = DEFAULT_SPEC) -> tuple[float, float]:
    """Signed sum of the face integrals of a ``(k-1)``-form over the boundary of a ``k``-box."""
    domain = form.domain if domain is None else domain
    k = domain.dim
    if form.degree != k - 1 or form.shape:
        raise ValueError("boundary_integral needs a scalar (dim-1)-form")
    if k < 2:
        lo, hi = domain.bounds[0]
        vals = form(np.array([[hi], [lo]]))[:, 0]
        return float(vals[0] - vals[1]), 0.0
    if form.is_zero:
        return 0.0, 0.0
    lookup = {idx: n for n, idx in enumerate(form.indices)}
    value = err = 0.0
    for axis, side, sign, face in face_domains(domain):
        n = lookup[tuple(i for i in range(k) if i != axis)]
        fixed = domain.bounds[axis][side]

        def coeff(p, axis=axis, fixed=fixed, n=n):
            full = np.insert(p, axis, fixed, axis=1)
            return form(full)[:, n]

        v, e = integrate_function(coeff, face, spec)
        value += sign * v
        err += e
    return value, err


def convergence_sweep(compute: Callable[[QuadratureSpec], tuple[float, float]],
                      orders: Sequence[int], base: QuadratureSpec = DEFAULT_SPEC):
    """Rows ``(order, value, error_estimate)`` for a quantity computed at several orders."""
    rows = []
    for order in orders:
        value, err = compute(replace(base, order=int(order)))
        rows.append((int(order), value, err))
    return rows
