"""Coordinate exterior calculus on rectangular chart domains.

A :class:`KForm` is lazy: it wraps one vectorized function that maps an
``(N, dim)`` array of points to *all* coefficients at once, laid out as
``(N, *shape, C(dim, k))``.  The last axis runs over increasing multi-indices
in the order produced by ``itertools.combinations(range(dim), k)``; ``shape``
is the value shape (``()`` for scalar forms, ``(r, r)`` for connection and
curvature matrices).  Axes are numbered from 0.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Mapping, Sequence

import numpy as np

DEFAULT_STEP = 1e-5

Evaluator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ChartDomain:
    """Closed box ``prod [lo_i, hi_i]``; periodic axes identify their endpoints."""

    bounds: tuple[tuple[float, float], ...]
    periodic: tuple[bool, ...] = ()

    def __post_init__(self):
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        if not bounds:
            raise ValueError("a chart domain needs at least one axis")
        for lo, hi in bounds:
            if not hi > lo:
                raise ValueError(f"axis interval [{lo}, {hi}] must have positive length")
        periodic = tuple(bool(p) for p in self.periodic) or (False,) * len(bounds)
        if len(periodic) != len(bounds):
            raise ValueError("periodic flags must match the number of axes")
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "periodic", periodic)

    @classmethod
    def box(cls, *bounds, periodic=()) -> "ChartDomain":
        return cls(tuple(bounds), tuple(periodic))

    @property
    def dim(self) -> int:
        return len(self.bounds)

    @property
    def lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.bounds])

    @property
    def upper(self) -> np.ndarray:
        return np.array([hi for _, hi in self.bounds])

    def wrap(self, points: np.ndarray) -> np.ndarray:
        """Reduce periodic coordinates into ``[lo, hi)``; works on complex points too."""
        if not any(self.periodic):
            return points
        pts = np.array(points, copy=True)
        for i, (per, (lo, hi)) in enumerate(zip(self.periodic, self.bounds)):
            if per:
                period = hi - lo
                pts[..., i] -= np.floor((pts[..., i].real - lo) / period) * period
        return pts

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(count, self.dim))

    def contains(self, other: "ChartDomain") -> bool:
        return other.dim == self.dim and all(
            lo >= a - 1e-12 and hi <= b + 1e-12
            for (lo, hi), (a, b) in zip(other.bounds, self.bounds)
        )


def _as_points(points, dim: int) -> np.ndarray:
    pts = np.asarray(points)
    if pts.dtype.kind not in "fc":
        pts = pts.astype(float)
    if pts.ndim == 1:
        pts = pts.reshape(1, dim) if dim > 1 or pts.size == 1 else pts.reshape(-1, 1)
    if pts.shape[-1] != dim:
        raise ValueError(f"expected points with {dim} coordinates, got shape {pts.shape}")
    return pts


class SmoothMap:
    """A smooth map from a chart domain into ``R^target_dim``.

    ``value`` takes an ``(N, source.dim)`` array and returns ``(N, target_dim)``.
    The Jacobian comes from ``jacobian`` when given (shape
    ``(N, target_dim, source.dim)``), otherwise from central differences with
    step ``step``.
    """

    def __init__(self, source: ChartDomain, target_dim: int, value: Evaluator,
                 jacobian: Evaluator | None = None, step: float = DEFAULT_STEP):
        if target_dim < 1:
            raise ValueError("target_dim must be positive")
        if step <= 0:
            raise ValueError("finite-difference step must be positive")
        self.source = source
        self.target_dim = int(target_dim)
        self._value = value
        self._jacobian = jacobian
        self.step = float(step)

    @property
    def analytic(self) -> bool:
        return self._jacobian is not None

    def __call__(self, points) -> np.ndarray:
        pts = _as_points(points, self.source.dim)
        out = np.asarray(self._value(self.source.wrap(pts)))
        return out.reshape(pts.shape[0], self.target_dim)

    def jacobian(self, points) -> np.ndarray:
        pts = _as_points(points, self.source.dim)
        n, d = pts.shape
        if self._jacobian is not None:
            jac = np.asarray(self._jacobian(self.source.wrap(pts)))
            return jac.reshape(n, self.target_dim, d)
        h = self.step
        offsets = np.concatenate([np.eye(d) * h, -np.eye(d) * h])
        shifted = (pts[None, :, :] + offsets[:, None, :]).reshape(-1, d)
        vals = self(shifted).reshape(2, d, n, self.target_dim)
        return np.transpose((vals[0] - vals[1]) / (2 * h), (1, 2, 0))

    def compose(self, inner: "SmoothMap") -> "SmoothMap":
        """``self ∘ inner``; the Jacobian follows the chain rule."""
        if inner.target_dim != self.source.dim:
            raise ValueError("cannot compose: dimension mismatch")

        def value(p):
            return self(inner(p))

        def jacobian(p):
            return np.einsum("nij,njk->nik", self.jacobian(inner(p)), inner.jacobian(p))

        return SmoothMap(inner.source, self.target_dim, value, jacobian, step=inner.step)

    @classmethod
    def identity(cls, domain: ChartDomain) -> "SmoothMap":
        d = domain.dim
        return cls(domain, d, lambda p: p,
                   lambda p: np.broadcast_to(np.eye(d), (p.shape[0], d, d)))

    @classmethod
    def constant(cls, domain: ChartDomain, point) -> "SmoothMap":
        point = np.asarray(point, dtype=float).ravel()
        t, d = point.size, domain.dim
        return cls(domain, t, lambda p: np.broadcast_to(point, (p.shape[0], t)),
                   lambda p: np.zeros((p.shape[0], t, d)))

    @classmethod
    def affine(cls, domain: ChartDomain, matrix, offset) -> "SmoothMap":
        a = np.atleast_2d(np.asarray(matrix, dtype=float))
        b = np.asarray(offset, dtype=float).ravel()
        if a.shape != (b.size, domain.dim):
            raise ValueError("affine map matrix/offset shapes disagree with the domain")
        return cls(domain, b.size, lambda p: p @ a.T + b,
                   lambda p: np.broadcast_to(a, (p.shape[0],) + a.shape))


@lru_cache(maxsize=None)
def multi_indices(dim: int, degree: int) -> tuple[tuple[int, ...], ...]:
    if degree < 0:
        raise ValueError("degree must be non-negative")
    return tuple(itertools.combinations(range(dim), degree))


def _permutation_sign(seq: Sequence[int]) -> int:
    seq = list(seq)
    inversions = sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])
    return -1 if inversions % 2 else 1


@lru_cache(maxsize=None)
def _wedge_table(dim: int, ka: int, kb: int) -> tuple[tuple[int, int, int, int], ...]:
    """Entries ``(ia, ib, ik, sign)`` with ``dx_I ∧ dx_J = sign dx_K``."""
    lookup = {idx: n for n, idx in enumerate(multi_indices(dim, ka + kb))}
    table = []
    for ia, a in enumerate(multi_indices(dim, ka)):
        for ib, b in enumerate(multi_indices(dim, kb)):
            if set(a) & set(b):
                continue
            table.append((ia, ib, lookup[tuple(sorted(a + b))], _permutation_sign(a + b)))
    return tuple(table)


@lru_cache(maxsize=None)
def _derivative_table(dim: int, k: int) -> tuple[tuple[int, int, int, int], ...]:
    """Entries ``(axis, iI, iK, sign)`` with ``dx_axis ∧ dx_I = sign dx_K``."""
    lookup = {idx: n for n, idx in enumerate(multi_indices(dim, k + 1))}
    table = []
    for i_idx, idx in enumerate(multi_indices(dim, k)):
        for axis in range(dim):
            if axis in idx:
                continue
            before = sum(1 for j in idx if j < axis)
            table.append((axis, i_idx, lookup[tuple(sorted(idx + (axis,)))], -1 if before % 2 else 1))
    return tuple(table)


def wedge_arrays(a: np.ndarray, ka: int, b: np.ndarray, kb: int, dim: int,
                 subscripts: str | None = None) -> np.ndarray:
    """Wedge two evaluated coefficient arrays (last axis = multi-index).

    Value axes broadcast elementwise, or contract with ``subscripts`` (an
    einsum spec for the value axes, e.g. ``"nij,njk->nik"``).
    """
    if ka + kb > dim:
        raise ValueError("degree exceeds chart dimension")
    ncomp = len(multi_indices(dim, ka + kb))
    out = None
    for ia, ib, ik, sign in _wedge_table(dim, ka, kb):
        if subscripts is None:
            term = a[..., ia] * b[..., ib]
        elif subscripts == "nij,njk->nik":
            term = a[..., ia] @ b[..., ib]
        elif subscripts == "nij,nj->ni":
            term = (a[..., ia] @ b[..., ib, None])[..., 0]
        else:
            term = np.einsum(subscripts, a[..., ia], b[..., ib])
        if out is None:
            out = np.zeros(term.shape + (ncomp,), dtype=np.result_type(a, b))
        if sign > 0:
            out[..., ik] += term
        else:
            out[..., ik] -= term
    if out is None:  # no disjoint index pairs cannot happen when ka + kb <= dim
        raise AssertionError("empty wedge table")
    return out


class KForm:
    """A (possibly matrix- or vector-valued) differential k-form on a chart domain.

    ``components=None`` is the canonical zero form; degrees above ``domain.dim``
    are always zero.
    """

    def __init__(self, domain: ChartDomain, degree: int, components: Evaluator | None = None,
                 shape: tuple[int, ...] = ()):
        if degree < 0:
            raise ValueError("degree must be non-negative")
        self.domain = domain
        self.degree = int(degree)
        self.shape = tuple(int(s) for s in shape)
        self._components = None if degree > domain.dim else components

    # -- construction -------------------------------------------------------
    @classmethod
    def zero(cls, domain: ChartDomain, degree: int, shape: tuple[int, ...] = ()) -> "KForm":
        return cls(domain, degree, None, shape)

    @classmethod
    def from_coeffs(cls, domain: ChartDomain, degree: int,
                    coeffs: Mapping[tuple[int, ...], Evaluator | float]) -> "KForm":
        """Scalar form from ``{increasing multi-index: evaluator or constant}``."""
        indices = multi_indices(domain.dim, degree)
        position = {idx: n for n, idx in enumerate(indices)}
        entries = {}
        for idx, fn in coeffs.items():
            idx = tuple(idx)
            if idx not in position:
                raise ValueError(f"{idx} is not an increasing multi-index of length {degree} "
                                 f"in dimension {domain.dim}")
            if not callable(fn):
                if fn == 0:
                    continue
                const = float(fn)
                fn = (lambda c: lambda p: np.full(p.shape[0], c))(const)
            entries[position[idx]] = fn
        if not entries:
            return cls.zero(domain, degree)

        def components(p):
            p = domain.wrap(p)
            out = np.zeros((p.shape[0], len(indices)))
            for n, fn in entries.items():
                out[:, n] = np.asarray(fn(p)).reshape(p.shape[0])
            return out

        return cls(domain, degree, components)

    @classmethod
    def function(cls, domain: ChartDomain, fn: Evaluator) -> "KForm":
        return cls.from_coeffs(domain, 0, {(): fn})

    @classmethod
    def from_map(cls, f: SmoothMap, shape: tuple[int, ...] | None = None) -> "KForm":
        """The vector (or reshaped matrix) valued 0-form of a smooth map."""
        shape = (f.target_dim,) if shape is None else tuple(shape)
        if int(np.prod(shape)) != f.target_dim:
            raise ValueError("shape does not match the map's target dimension")
        return cls(f.source, 0, lambda p: f(p).reshape((p.shape[0],) + shape + (1,)), shape)

    @classmethod
    def stack(cls, entries, domain: ChartDomain, degree: int) -> "KForm":
        """Assemble a vector/matrix valued form from nested lists of scalar forms (``None`` = 0)."""
        nested = isinstance(entries[0], (list, tuple))
        arr = np.empty((len(entries), len(entries[0])) if nested else (len(entries),), dtype=object)
        for pos in np.ndindex(arr.shape):
            item = entries[pos[0]][pos[1]] if nested else entries[pos[0]]
            if item is not None and (item.domain != domain or item.degree != degree or item.shape):
                raise ValueError("stack entries must be scalar forms of one degree on one domain")
            arr[pos] = item
        live = [(pos, arr[pos]) for pos in np.ndindex(arr.shape)
                if arr[pos] is not None and not arr[pos].is_zero]
        if not live:
            return cls.zero(domain, degree, arr.shape)
        ncomp = len(multi_indices(domain.dim, degree))

        def components(p):
            out = np.zeros((p.shape[0],) + arr.shape + (ncomp,))
            for pos, form in live:
                out[(slice(None),) + pos] = form(p)
            return out

        return cls(domain, degree, components, arr.shape)

    # -- inspection ---------------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return self._components is None

    @property
    def indices(self) -> tuple[tuple[int, ...], ...]:
        return multi_indices(self.domain.dim, self.degree) if self.degree <= self.domain.dim else ()

    def __call__(self, points) -> np.ndarray:
        pts = _as_points(points, self.domain.dim)
        if self._components is None:
            return np.zeros((pts.shape[0],) + self.shape + (len(self.indices),))
        return self._components(pts)

    def coeff(self, index: Sequence[int]) -> Evaluator:
        index = tuple(index)
        if index not in self.indices:
            raise ValueError(f"{index} is not an increasing multi-index of this form")
        n = self.indices.index(index)
        return lambda p: self(p)[..., n]

    def evaluate(self, points, vectors) -> np.ndarray:
        """Evaluate as an alternating multilinear map on ``k`` tangent vectors.

        ``vectors`` has shape ``(k, dim)`` (shared) or ``(N, k, dim)``.
        """
        pts = _as_points(points, self.domain.dim)
        vecs = np.asarray(vectors, dtype=float)
        if vecs.ndim == 2:
            vecs = np.broadcast_to(vecs, (pts.shape[0],) + vecs.shape)
        if vecs.shape[1] != self.degree:
            raise ValueError(f"a {self.degree}-form takes {self.degree} vectors")
        coeffs = self(pts)
        if self.degree == 0:
            return coeffs[..., 0]
        idx = np.array(self.indices)
        dets = np.linalg.det(np.transpose(vecs[:, :, idx], (0, 2, 1, 3)))  # (N, nI)
        dets = dets.reshape((pts.shape[0],) + (1,) * len(self.shape) + (len(self.indices),))
        return np.sum(coeffs * dets, axis=-1)

    def __getitem__(self, key) -> "KForm":
        if not self.shape:
            raise TypeError("scalar forms are not indexable")
        key = key if isinstance(key, tuple) else (key,)
        sub_shape = np.empty(self.shape)[key].shape
        if self.is_zero:
            return KForm.zero(self.domain, self.degree, sub_shape)
        return KForm(self.domain, self.degree,
                     lambda p: self(p)[(slice(None),) + key], sub_shape)

    # -- linear structure ---------------------------------------------------
    def _check_compatible(self, other: "KForm"):
        if self.domain != other.domain:
            raise ValueError("incompatible chart domains")
        if self.degree != other.degree or self.shape != other.shape:
            raise ValueError("forms differ in degree or value shape")

    def __add__(self, other: "KForm") -> "KForm":
        self._check_compatible(other)
        if other.is_zero:
            return self
        if self.is_zero:
            return other
        return KForm(self.domain, self.degree, lambda p: self(p) + other(p), self.shape)

    def __neg__(self) -> "KForm":
        return self * -1.0

    def __sub__(self, other: "KForm") -> "KForm":
        return self + (-other)

    def __mul__(self, scalar: float) -> "KForm":
        scalar = float(scalar)
        if self.is_zero or scalar == 0.0:
            return KForm.zero(self.domain, self.degree, self.shape)
        return KForm(self.domain, self.degree, lambda p: scalar * self(p), self.shape)

    __rmul__ = __mul__

    def transpose(self) -> "KForm":
        if len(self.shape) != 2:
            raise ValueError("transpose needs a matrix-valued form")
        if self.is_zero:
            return KForm.zero(self.domain, self.degree, self.shape[::-1])
        return KForm(self.domain, self.degree,
                     lambda p: np.swapaxes(self(p), 1, 2), self.shape[::-1])

    def __repr__(self):
        kind = "zero " if self.is_zero else ""
        shape = f", shape={self.shape}" if self.shape else ""
        return f"KForm({kind}degree={self.degree}, dim={self.domain.dim}{shape})"


def wedge(a: KForm, b: KForm) -> KForm:
    """Exterior product; value shapes broadcast elementwise."""
    if a.domain != b.domain:
        raise ValueError("incompatible chart domains")
    shape = np.broadcast_shapes(a.shape, b.shape)
    degree, dim = a.degree + b.degree, a.domain.dim
    if a.is_zero or b.is_zero or degree > dim:
        return KForm.zero(a.domain, degree, shape)

    def components(p):
        av, bv = a(p), b(p)
        # align value axes for broadcasting, keep the trailing multi-index axis
        av = av.reshape((av.shape[0],) + (1,) * (len(shape) - len(a.shape)) + av.shape[1:])
        bv = bv.reshape((bv.shape[0],) + (1,) * (len(shape) - len(b.shape)) + bv.shape[1:])
        return wedge_arrays(av, a.degree, bv, b.degree, dim)

    return KForm(a.domain, degree, components, shape)


def matwedge(a: KForm, b: KForm) -> KForm:
    """Matrix product of form-valued matrices, multiplying entries by ``∧``.

    ``a`` must be matrix valued; ``b`` a matrix or a vector.
    """
    if a.domain != b.domain:
        raise ValueError("incompatible chart domains")
    if len(a.shape) != 2 or len(b.shape) not in (1, 2) or a.shape[1] != b.shape[0]:
        raise ValueError(f"cannot multiply value shapes {a.shape} and {b.shape}")
    shape = a.shape[:1] + b.shape[1:]
    degree, dim = a.degree + b.degree, a.domain.dim
    if a.is_zero or b.is_zero or degree > dim:
        return KForm.zero(a.domain, degree, shape)
    subscripts = "nij,njk->nik" if len(b.shape) == 2 else "nij,nj->ni"
    return KForm(a.domain, degree,
                 lambda p: wedge_arrays(a(p), a.degree, b(p), b.degree, dim, subscripts), shape)


def exterior_derivative(a: KForm, step: float = DEFAULT_STEP) -> KForm:
    """``d`` by central differences of the coefficients (truncation ``O(step²)``)."""
    dim = a.domain.dim
    if a.is_zero or a.degree >= dim:
        return KForm.zero(a.domain, a.degree + 1, a.shape)
    table = _derivative_table(dim, a.degree)
    ncomp = len(multi_indices(dim, a.degree + 1))
    h = float(step)

    def components(p):
        n = p.shape[0]
        offsets = np.concatenate([np.eye(dim) * h, -np.eye(dim) * h])
        shifted = (p[None, :, :] + offsets[:, None, :]).reshape(-1, dim)
        vals = a(shifted).reshape((2, dim, n) + a.shape + (-1,))
        partial = (vals[0] - vals[1]) / (2 * h)  # (dim, N, *shape, nI)
        out = np.zeros((n,) + a.shape + (ncomp,), dtype=partial.dtype)
        for axis, i_idx, k_idx, sign in table:
            out[..., k_idx] += sign * partial[axis, ..., i_idx]
        return out

    return KForm(a.domain, a.degree + 1, components, a.shape)


def differential(f: SmoothMap) -> KForm:
    """``df`` of a smooth map as an ``R^target_dim``-valued 1-form (from its Jacobian)."""
    return KForm(f.source, 1, f.jacobian, (f.target_dim,))


def pullback(a: KForm, f: SmoothMap) -> KForm:
    """``f^* a`` on ``f.source``: coefficients composed with ``f`` times Jacobian minors."""
    if f.target_dim != a.domain.dim:
        raise ValueError(f"map target dimension {f.target_dim} does not match the form's "
                         f"chart dimension {a.domain.dim}")
    source, k = f.source, a.degree
    if a.is_zero or k > source.dim:
        return KForm.zero(source, k, a.shape)
    if k == 0:
        return KForm(source, 0, lambda p: a(f(p)), a.shape)
    rows = np.array(a.indices)
    cols = np.array(multi_indices(source.dim, k))

    def components(p):
        jac = f.jacobian(p)  # (N, D, d)
        sub = jac[:, rows[:, None, :, None], cols[None, :, None, :]]  # (N, nI, nJ, k, k)
        minors = np.linalg.det(sub)
        return np.einsum("n...i,nij->n...j", a(f(p)), minors)

    return KForm(source, k, components, a.shape)
