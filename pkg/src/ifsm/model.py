"""The IFSm triple: a box, finitely many maps, an a-priori measure and weights.

The weights of branch ``θ`` at ``x`` are ``μ(θ) J(x, θ)``; they either come
from a density family ``J`` or from a positive potential ``ψ`` through
``J(x, θ) = ψ(τ_θ(x))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import expr as ex
from .errors import (
    EmptyParameterSet,
    MapEscapesDomain,
    NonPositiveDensity,
    OutOfDomain,
    UnknownParameter,
    ValidationError,
)
from .grid import DomainBox, Grid

MAP_SLACK = 1e-9


@dataclass(frozen=True)
class ParameterSet:
    """Finite ordered parameter labels with a-priori probability weights."""

    labels: tuple
    weights: tuple

    def __post_init__(self):
        labels = tuple(str(s) for s in self.labels)
        weights = np.asarray(self.weights, dtype=float).ravel()
        if len(labels) == 0:
            raise EmptyParameterSet("parameter set is empty")
        if len(labels) != len(weights):
            raise ValidationError("one a-priori weight per label is required")
        if len(set(labels)) != len(labels):
            raise ValidationError("parameter labels must be distinct")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise ValidationError("a-priori weights must be nonnegative")
        total = float(np.sum(weights))
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"a-priori weights sum to {total}, not 1")
        # within rounding of 1 the weights are kept as given, so that
        # normalising is idempotent and configs round-trip bit for bit
        if abs(total - 1.0) > 4 * len(weights) * np.finfo(float).eps:
            weights = weights / total
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "weights", tuple(float(w) for w in weights))

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def mu(self) -> np.ndarray:
        return np.array(self.weights)

    def index(self, label) -> int:
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise UnknownParameter(f"unknown parameter {label!r}") from None

    @classmethod
    def uniform(cls, labels: Sequence[str]) -> "ParameterSet":
        return cls(tuple(labels), tuple([1.0 / len(labels)] * len(labels)))


# -- maps ----------------------------------------------------------------


@dataclass(frozen=True)
class AffineMap:
    """``x -> A x + b``; evaluation order is fixed so scalar and array paths agree bitwise."""

    matrix: tuple
    offset: tuple

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        b = np.atleast_1d(np.asarray(self.offset, dtype=float))
        if a.shape != (len(b), len(b)):
            raise ValidationError("affine map needs a square matrix matching its offset")
        object.__setattr__(self, "matrix", tuple(tuple(r) for r in a.tolist()))
        object.__setattr__(self, "offset", tuple(b.tolist()))

    @property
    def dimension(self) -> int:
        return len(self.offset)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        out = np.empty_like(points)
        for k, (row, b) in enumerate(zip(self.matrix, self.offset)):
            acc = row[0] * points[:, 0]
            for l in range(1, len(row)):
                acc = acc + row[l] * points[:, l]
            out[:, k] = acc + b
        return out


@dataclass(frozen=True)
class ExprMap:
    """Coordinate-wise expression map, e.g. ``("0.5*x", "0.5*y + 0.5")``."""

    exprs: tuple
    asts: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        exprs = tuple(str(e) for e in self.exprs)
        object.__setattr__(self, "exprs", exprs)
        object.__setattr__(self, "asts", tuple(ex.parse_expression(e) for e in exprs))

    @property
    def dimension(self) -> int:
        return len(self.exprs)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        env = _env(points)
        cols = [np.broadcast_to(ex.evaluate(a, env), points.shape[:1]) for a in self.asts]
        return np.stack(cols, axis=1).astype(float)


def _env(points):
    env = {"x": points[:, 0]}
    if points.shape[1] > 1:
        env["y"] = points[:, 1]
    return env


# -- weights -------------------------------------------------------------


@dataclass(frozen=True)
class Potential:
    """Positive potential ψ given by an expression or a vectorised callable."""

    expr: Optional[str] = None
    fn: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if (self.expr is None) == (self.fn is None):
            raise ValidationError("potential needs exactly one of expr or fn")
        if self.expr is not None:
            object.__setattr__(self, "_ast", ex.parse_expression(self.expr))

    def __call__(self, points: np.ndarray) -> np.ndarray:
        if self.fn is not None:
            out = self.fn(points)
        else:
            out = ex.evaluate(self._ast, _env(points))
        return np.broadcast_to(np.asarray(out, dtype=float), points.shape[:1]).copy()


class DensityFamily:
    """``J(x, θ)``: evaluating on ``(k, d)`` points returns a ``(k, n)`` array."""

    constant_values = None  # set when J does not depend on x

    def __call__(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class ExprDensity(DensityFamily):
    def __init__(self, exprs: Sequence[str]):
        self.exprs = tuple(str(e) for e in exprs)
        self.asts = tuple(ex.parse_expression(e) for e in self.exprs)
        if not any(ex.variables(a) for a in self.asts):
            self.constant_values = np.array([float(ex.evaluate(a)) for a in self.asts])

    def __call__(self, points):
        env = _env(points)
        cols = [np.broadcast_to(ex.evaluate(a, env), points.shape[:1]) for a in self.asts]
        return np.stack(cols, axis=1).astype(float)

    def __eq__(self, other):
        return isinstance(other, ExprDensity) and other.exprs == self.exprs

    def __hash__(self):
        return hash(self.exprs)

    def __repr__(self):
        return f"ExprDensity({list(self.exprs)!r})"


class ConstantDensity(DensityFamily):
    def __init__(self, values: Sequence[float]):
        self.constant_values = np.asarray(values, dtype=float)

    def __call__(self, points):
        return np.tile(self.constant_values, (points.shape[0], 1))

    def __repr__(self):
        return f"ConstantDensity({self.constant_values.tolist()!r})"


class CallableDensity(DensityFamily):
    def __init__(self, fn: Callable):
        self.fn = fn

    def __call__(self, points):
        return np.asarray(self.fn(points), dtype=float)


# -- the system ----------------------------------------------------------


@dataclass(frozen=True)
class SystemSpec:
    """An IFSm. Exactly one of ``density`` and ``potential`` is set."""

    domain: DomainBox
    params: ParameterSet
    maps: tuple
    density: Optional[DensityFamily] = None
    potential: Optional[Potential] = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        if len(self.maps) != self.params.n:
            raise ValidationError(f"{len(self.maps)} maps for {self.params.n} parameters")
        for mp in self.maps:
            if mp.dimension != self.domain.dimension:
                raise ValidationError("map dimension does not match domain")
        if (self.density is None) == (self.potential is None):
            raise ValidationError("give exactly one of density or potential")

    @property
    def dimension(self) -> int:
        return self.domain.dimension

    @property
    def n(self) -> int:
        return self.params.n

    def _points(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.dimension:
            pts = pts.reshape(-1, self.dimension)
        bad = self.domain.excess(pts) > MAP_SLACK
        if np.any(bad):
            raise OutOfDomain(f"point {pts[np.argmax(bad)].tolist()} lies outside the domain")
        return self.domain.clamp(pts)

    def apply(self, index: int, points) -> np.ndarray:
        """Image of ``points`` under map ``index``, clamped after the slack check."""
        pts = self._points(points)
        out = self.maps[index](pts)
        esc = self.domain.excess(out)
        if np.any(esc > MAP_SLACK):
            k = int(np.argmax(esc))
            raise MapEscapesDomain(
                f"map {self.params.labels[index]!r} sends {pts[k].tolist()} to "
                f"{out[k].tolist()}, outside the domain"
            )
        return self.domain.clamp(out)

    def images(self, points) -> np.ndarray:
        """All branch images, shape ``(n, k, d)``."""
        pts = self._points(points)
        return np.stack([self.apply(t, pts) for t in range(self.n)])

    def density_at(self, points, images=None) -> np.ndarray:
        """``J(x, θ)`` as a ``(k, n)`` array."""
        pts = self._points(points)
        if self.density is not None:
            return np.asarray(self.density(pts), dtype=float).reshape(len(pts), self.n)
        if images is None:
            images = self.images(pts)
        return np.stack([self.potential(images[t]) for t in range(self.n)], axis=1)

    def branch_weights(self, points, images=None) -> np.ndarray:
        """``μ(θ) J(x, θ)`` as a ``(k, n)`` array."""
        return self.density_at(points, images) * self.params.mu

    def q_mass(self, points) -> np.ndarray:
        return np.sum(self.branch_weights(points), axis=1)

    @property
    def constant_density(self):
        """Branch densities when they do not depend on x, else None."""
        if self.density is not None:
            return self.density.constant_values
        return None

    def with_density(self, density: DensityFamily, name: str | None = None) -> "SystemSpec":
        return SystemSpec(self.domain, self.params, self.maps, density=density,
                          name=self.name if name is None else name)

    def apriori(self) -> "SystemSpec":
        """The unweighted system ``J ≡ 1`` with the same maps and a-priori measure."""
        return self.with_density(ConstantDensity(np.ones(self.n)), name=f"{self.name}/apriori")


@dataclass(frozen=True)
class ValidationReport:
    sup_q: float
    inf_q: float
    maps_contained: bool
    max_escape: float
    normalized: bool
    max_normalization_error: float
    nodes: int

    @property
    def passed(self) -> bool:
        return self.inf_q > 0 and math.isfinite(self.sup_q) and self.maps_contained

    def to_dict(self):
        return {
            "sup_q": self.sup_q,
            "inf_q": self.inf_q,
            "maps_contained": self.maps_contained,
            "max_escape": self.max_escape,
            "normalized": self.normalized,
            "max_normalization_error": self.max_normalization_error,
            "nodes": self.nodes,
            "passed": self.passed,
        }


def validate_system(spec: SystemSpec, grid_resolution, normalized_tol: float = 1e-12,
                    strict: bool = True) -> ValidationReport:
    """Sample the standing hypotheses on a uniform grid.

    With ``strict`` the first violated hypothesis raises; otherwise the report
    carries the failure and ``passed`` is False.
    """
    if spec.params.n == 0:
        raise EmptyParameterSet("parameter set is empty")
    grid = grid_resolution if isinstance(grid_resolution, Grid) else Grid(spec.domain, grid_resolution)
    nodes = grid.nodes
    raw = np.stack([spec.maps[t](nodes) for t in range(spec.n)])
    escape = float(np.max(spec.domain.excess(raw.reshape(-1, spec.dimension))))
    contained = escape <= MAP_SLACK
    if strict and not contained:
        raise MapEscapesDomain(f"a map leaves the domain by {escape:g}")
    images = spec.domain.clamp(raw)
    if spec.density is not None:
        dens = np.asarray(spec.density(nodes), dtype=float).reshape(len(nodes), spec.n)
    else:
        dens = np.stack([spec.potential(images[t]) for t in range(spec.n)], axis=1)
    if strict and not np.all(dens > 0):
        raise NonPositiveDensity("density or potential is not strictly positive on the grid")
    q = dens @ spec.params.mu
    err = float(np.max(np.abs(q - 1.0)))
    return ValidationReport(
        sup_q=float(np.max(q)),
        inf_q=float(np.min(q)),
        maps_contained=contained,
        max_escape=escape,
        normalized=err <= normalized_tol,
        max_normalization_error=err,
        nodes=grid.m,
    )


def q_mass(spec: SystemSpec, x) -> float:
    """Total branch weight ``q_x(Θ)`` at a single point."""
    return float(spec.q_mass(np.atleast_1d(np.asarray(x, dtype=float)))[0])


def evaluate_map(spec: SystemSpec, label, x) -> np.ndarray:
    index = spec.params.index(label)
    return spec.apply(index, np.atleast_1d(np.asarray(x, dtype=float)))[0]
