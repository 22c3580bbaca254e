"""Declarative verification scenarios loaded from JSON."""
from __future__ import annotations

import json
from dataclasses import dataclass, field as dataclass_field, replace
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np

from ..geometry import builtin_geometry
from ..indices import IsolatedZero
from ..quadrature import DEFAULT_SPEC, QuadratureSpec

PROVENANCE_TAGS = ("PAPER", "DERIVED", "TRIVIAL")
KINDS = (
    "boundary_index",
    "fiber_normalization",
    "closedness",
    "odd_transgression",
    "section_properties",
    "thom_shadow",
    "gauss_bonnet",
    "frame_equivariance",
)
BOUNDARY_SAMPLES = 1000


class ScenarioError(ValueError):
    """A scenario file or command-line configuration that cannot be run."""


@dataclass(frozen=True)
class Expectation:
    id: str
    value: float
    tol: float
    provenance: str
    oracle: str | None = None

    def __post_init__(self):
        if self.provenance not in PROVENANCE_TAGS:
            raise ScenarioError(f"expected value {self.id!r} has unknown provenance {self.provenance!r}")
        if self.provenance == "DERIVED" and not self.oracle:
            raise ScenarioError(f"derived value {self.id!r} must name its oracle")
        if not self.tol >= 0:
            raise ScenarioError(f"expected value {self.id!r} needs a non-negative tolerance")

    @classmethod
    def from_dict(cls, d: dict) -> "Expectation":
        try:
            return cls(str(d["id"]), float(d["value"]), float(d["tol"]), str(d["provenance"]),
                       d.get("oracle"))
        except KeyError as exc:
            raise ScenarioError(f"expected entry missing field {exc}") from None


# -- vector fields ---------------------------------------------------------------

def complex_power_field(power: int) -> Callable[[np.ndarray], np.ndarray]:
    """``z^d`` on the plane, or ``conj(z)^|d|`` for negative ``d``."""
    def field_fn(p):
        z = p[:, 0] + 1j * p[:, 1]
        w = z ** power if power >= 0 else np.conj(z) ** (-power)
        w = np.broadcast_to(w, z.shape)
        return np.stack([w.real, w.imag], axis=1)

    return field_fn


def polynomial_field(coefficients) -> Callable[[np.ndarray], np.ndarray]:
    """Polynomial vector field; component ``i`` is ``Σ c · x^e`` over its ``[c, e]`` terms."""
    comps = []
    for terms in coefficients:
        coefs = np.array([float(t[0]) for t in terms])
        exps = np.array([list(t[1]) for t in terms], dtype=int)
        comps.append((coefs, exps))
    dims = {e.shape[1] for _, e in comps if e.size}
    if len(dims) != 1 or dims.pop() != len(comps):
        raise ScenarioError("polynomial field needs one exponent per coordinate and one component per axis")

    def field_fn(p):
        return np.stack([np.prod(p[:, None, :] ** e[None], axis=2) @ c for c, e in comps], axis=1)

    return field_fn


def build_field(spec: dict) -> tuple[Callable[[np.ndarray], np.ndarray], int]:
    kind = spec.get("kind")
    if kind == "complex_power":
        return complex_power_field(int(spec["power"])), 2
    if kind == "polynomial":
        coefficients = spec["coefficients"]
        return polynomial_field(coefficients), len(coefficients)
    raise ScenarioError(f"unknown field kind {kind!r}")


# -- scenarios -------------------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    name: str
    kind: str
    description: str = ""
    geometry: dict | None = None
    field: dict | None = None
    zeros: tuple[IsolatedZero, ...] = ()
    chi: int | None = None
    parity: str | None = None
    quadrature: QuadratureSpec = DEFAULT_SPEC
    expected: tuple[Expectation, ...] = ()
    params: dict = dataclass_field(default_factory=dict)

    def __hash__(self):
        return hash(self.name)

    @property
    def expectations(self) -> dict[str, Expectation]:
        return {e.id: e for e in self.expected}

    def with_quadrature(self, order: int | None = None, subdivision: int | None = None) -> "Scenario":
        changes = {}
        if order is not None:
            changes["order"] = order
        if subdivision is not None:
            changes["subdivision"] = subdivision
        try:
            return replace(self, quadrature=replace(self.quadrature, **changes))
        except ValueError as exc:
            raise ScenarioError(str(exc)) from None

    def vector_field(self) -> Callable[[np.ndarray], np.ndarray]:
        if self.field is None:
            raise ScenarioError(f"scenario {self.name!r} has no vector field")
        return build_field(self.field)[0]

    def build_geometry(self, step: float):
        if self.geometry is None:
            raise ScenarioError(f"scenario {self.name!r} has no geometry")
        try:
            return builtin_geometry(self.geometry["name"], step=step, **self.geometry.get("params", {}))
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"scenario {self.name!r}: {exc}") from None

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        try:
            name, kind = str(d["name"]), str(d["kind"])
        except KeyError as exc:
            raise ScenarioError(f"scenario missing field {exc}") from None
        if kind not in KINDS:
            raise ScenarioError(f"scenario {name!r} has unknown kind {kind!r}")
        quad = d.get("quadrature", {})
        try:
            spec = QuadratureSpec(**quad)
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"scenario {name!r} quadrature: {exc}") from None
        zeros = tuple(IsolatedZero(z["location"], z["radius"], z.get("jacobian")) for z in d.get("zeros", []))
        expected = tuple(Expectation.from_dict(e) for e in d.get("expected", []))
        ids = [e.id for e in expected]
        if len(ids) != len(set(ids)):
            raise ScenarioError(f"scenario {name!r} repeats an expected id")
        scenario = cls(name, kind, d.get("description", ""), d.get("geometry"), d.get("field"), zeros,
                       d.get("chi"), d.get("parity"), spec, expected, dict(d.get("params", {})))
        if kind == "boundary_index":
            scenario.validate_boundary_problem()
        return scenario

    def validate_boundary_problem(self) -> None:
        """Parity matches the boundary dimension and the field is nowhere zero on the boundary."""
        if self.chi is None:
            raise ScenarioError(f"scenario {self.name!r} must supply the Euler characteristic chi")
        geom = self.build_geometry(1e-5)
        fn, width = build_field(self.field or {})
        n = geom.dim
        if width != n + 1:
            raise ScenarioError(f"scenario {self.name!r}: field has {width} components, boundary needs {n + 1}")
        expected_parity = "odd" if n % 2 else "even"
        if self.parity is not None and self.parity != expected_parity:
            raise ScenarioError(f"scenario {self.name!r} declares parity {self.parity} "
                                f"but the boundary has dimension {n}")
        for z in self.zeros:
            if z.dim != n + 1:
                raise ScenarioError(f"scenario {self.name!r}: zero {z.location} has the wrong dimension")
        rng = np.random.default_rng(0)
        for chart in geom.charts:
            if chart.embedding is None:
                raise ScenarioError(f"scenario {self.name!r}: boundary geometry is not embedded")
            pts = chart.embedding(chart.domain.sample(BOUNDARY_SAMPLES, rng))
            norms = np.linalg.norm(fn(pts), axis=1)
            if norms.min() <= 1e-8:
                bad = pts[np.argmin(norms)]
                raise ScenarioError(f"scenario {self.name!r}: field vanishes on the boundary near {bad.tolist()}")


def _data_dir():
    return resources.files("transgress.harness").joinpath("data/scenarios")


def load_scenario_file(path) -> Scenario:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from None
    return Scenario.from_dict(data)


def builtin_scenarios() -> dict[str, Scenario]:
    out = {}
    for entry in sorted(_data_dir().iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".json"):
            s = Scenario.from_dict(json.loads(entry.read_text()))
            if s.name in out:
                raise ScenarioError(f"duplicate scenario name {s.name!r}")
            out[s.name] = s
    return out


def get_scenario(name: str) -> Scenario:
    registry = builtin_scenarios()
    if name not in registry:
        raise ScenarioError(f"unknown scenario {name!r}; available: {', '.join(registry)}")
    return registry[name]
