"""Indices of isolated zeros of vector fields.

Nondegenerate zeros use the sign of the Jacobian determinant.  The general
route computes the degree of ``V/|V|`` on a small sphere by integrating the
pulled-back Ψ of a flat trivial bundle, i.e. the normalized volume form of
the target sphere.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .exterior import DEFAULT_STEP, SmoothMap
from .geometry import flat_box
from .quadrature import DEFAULT_SPEC, QuadratureSpec, integrate
from .transgression import SphereBundleMap, psi, sphere_chart

Field = Callable[[np.ndarray], np.ndarray]

DEGREE_RESIDUAL = 1e-3
DET_TOL = 1e-8


@dataclass(frozen=True)
class IsolatedZero:
    location: tuple[float, ...]
    isolation_radius: float
    jacobian: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "location", tuple(float(x) for x in self.location))
        if self.jacobian is not None:
            jac = np.asarray(self.jacobian, dtype=float)
            if jac.shape != (len(self.location),) * 2:
                raise ValueError("jacobian must be a square matrix matching the location")
            object.__setattr__(self, "jacobian", tuple(map(tuple, jac)))
        if not self.isolation_radius > 0:
            raise ValueError("isolation_radius must be positive")

    @property
    def dim(self) -> int:
        return len(self.location)


class DegreeNotResolved(ArithmeticError):
    pass


def index_nondegenerate(zero: IsolatedZero) -> int:
    if zero.jacobian is None:
        raise ValueError("zero has no Jacobian; use degree integral")
    det = np.linalg.det(np.asarray(zero.jacobian))
    if abs(det) <= DET_TOL:
        raise ValueError(f"near-singular Jacobian (det = {det:.2e}); use degree integral")
    return 1 if det > 0 else -1


def degree_integral(field: Field, center, radius: float, dim: int,
                    spec: QuadratureSpec = DEFAULT_SPEC,
                    step: float = DEFAULT_STEP) -> tuple[float, float]:
    """Unrounded ``∫_{S^{dim-1}} (V/|V|)^* Ψ`` on the sphere of ``radius`` about ``center``."""
    if dim < 2:
        raise ValueError("degree integrals need dim >= 2")
    center = np.asarray(center, dtype=float)
    sph = sphere_chart(dim - 1, step)
    dom = sph.source

    def value(p):
        v = np.asarray(field(center + radius * sph(p)))
        norm = np.linalg.norm(v, axis=1, keepdims=True)
        if norm.min() == 0:
            raise ValueError("field vanishes on the degree sphere")
        return v / norm

    bundle = flat_box(dim, 1, step)
    bmap = SphereBundleMap(dom, SmoothMap.constant(dom, [0.0]), SmoothMap(dom, dim, value, step=step))
    return integrate(psi(bmap, bundle), spec=spec)


def index_by_degree(field: Field, center, radius: float, dim: int,
                    spec: QuadratureSpec = DEFAULT_SPEC, step: float = DEFAULT_STEP) -> int:
    value, _ = degree_integral(field, center, radius, dim, spec, step)
    rounded = int(round(value))
    if abs(value - rounded) >= DEGREE_RESIDUAL:
        raise DegreeNotResolved(f"degree not resolved; refine quadrature (integral {value:.6f})")
    return rounded


def winding_number(field: Field, center, radius: float, samples: int = 4096) -> int:
    """Planar winding number by accumulating the angle of ``V`` around a sampled circle."""
    t = np.linspace(0.0, 2 * np.pi, samples + 1)
    pts = np.asarray(center, dtype=float) + radius * np.stack([np.cos(t), np.sin(t)], axis=1)
    v = np.asarray(field(pts))
    angle = np.unwrap(np.arctan2(v[:, 1], v[:, 0]))
    return int(round((angle[-1] - angle[0]) / (2 * np.pi)))


def check_isolation(zero: IsolatedZero, field: Field, samples: int = 2000, seed: int = 0) -> None:
    """Sampled check that the field does not vanish on the punctured isolation ball."""
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(samples, zero.dim))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    r = zero.isolation_radius * rng.uniform(0.05, 1.0, size=(samples, 1))
    norms = np.linalg.norm(field(np.asarray(zero.location) + r * d), axis=1)
    if norms.min() <= 1e-8:
        raise ValueError(f"zero at {zero.location} is not isolated within radius {zero.isolation_radius}")


def index(zero: IsolatedZero, field: Field, spec: QuadratureSpec = DEFAULT_SPEC,
          step: float = DEFAULT_STEP) -> int:
    """Nondegenerate sign when a usable Jacobian is declared, degree integral otherwise."""
    if zero.jacobian is not None and abs(np.linalg.det(np.asarray(zero.jacobian))) > DET_TOL:
        return index_nondegenerate(zero)
    return index_by_degree(field, zero.location, zero.isolation_radius / 2, zero.dim, spec, step)


def sum_indices(zeros: Sequence[IsolatedZero], field: Field, spec: QuadratureSpec = DEFAULT_SPEC,
                step: float = DEFAULT_STEP) -> int:
    for i, a in enumerate(zeros):
        for b in zeros[i + 1:]:
            gap = np.linalg.norm(np.subtract(a.location, b.location))
            if gap < a.isolation_radius + b.isolation_radius:
                raise ValueError(f"isolation balls of zeros at {a.location} and {b.location} overlap")
    for z in zeros:
        check_isolation(z, field)
    return sum(index(z, field, spec, step) for z in zeros)
