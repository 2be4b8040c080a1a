"""Uniform tensor grids, grid functions, grid measures and interpolation."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .errors import GridMismatch

INTERP_MODES = ("multilinear", "nearest")


@dataclass(frozen=True)
class DomainBox:
    """Axis-aligned box ``[lower, upper]`` in one or two dimensions."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lo) != len(hi) or len(lo) not in (1, 2):
            raise ValueError("domain bounds must both have dimension 1 or 2")
        if any(a >= b for a, b in zip(lo, hi)):
            raise ValueError("domain needs lower < upper on every axis")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dimension(self) -> int:
        return len(self.lower)

    @property
    def lo(self):
        return np.array(self.lower)

    @property
    def hi(self):
        return np.array(self.upper)

    def excess(self, points):
        """Per-point distance (sup norm) by which ``points`` leave the box."""
        points = np.atleast_2d(points)
        below = np.maximum(self.lo - points, 0.0)
        above = np.maximum(points - self.hi, 0.0)
        return np.max(np.maximum(below, above), axis=1)

    def clamp(self, points):
        return np.clip(points, self.lo, self.hi)


@dataclass(frozen=True)
class Grid:
    """Tensor product of uniform subdivisions of ``domain``, endpoints included.

    Nodes are enumerated in C order over the axes, so in 2D the node with axis
    indices ``(i, j)`` has flat index ``i * shape[1] + j``.
    """

    domain: DomainBox
    shape: tuple

    def __post_init__(self):
        shape = tuple(int(s) for s in np.atleast_1d(self.shape))
        if len(shape) == 1 and self.domain.dimension == 2:
            shape = shape * 2
        if len(shape) != self.domain.dimension:
            raise ValueError("grid shape does not match domain dimension")
        if min(shape) < 2:
            raise ValueError("need at least 2 nodes per axis")
        object.__setattr__(self, "shape", shape)

    @property
    def dimension(self) -> int:
        return self.domain.dimension

    @property
    def m(self) -> int:
        return int(np.prod(self.shape))

    @cached_property
    def axes(self):
        return [
            lo + (hi - lo) * np.arange(n) / (n - 1)
            for lo, hi, n in zip(self.domain.lower, self.domain.upper, self.shape)
        ]

    @cached_property
    def nodes(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([c.ravel() for c in mesh], axis=1)

    @property
    def spacing(self):
        return (self.domain.hi - self.domain.lo) / (np.array(self.shape) - 1)

    def check_same(self, other: "Grid"):
        if self != other:
            raise GridMismatch(f"grid {self.shape} does not match {other.shape}")

    def interpolation_matrix(self, points, mode: str = "multilinear") -> sp.csr_matrix:
        """Sparse ``(k, m)`` matrix of interpolation coefficients at ``points``.

        Rows are nonnegative and sum to one. Points are clipped to the box.
        """
        if mode not in INTERP_MODES:
            raise ValueError(f"unknown interpolation mode {mode!r}")
        points = np.atleast_2d(np.asarray(points, dtype=float))
        k = points.shape[0]
        t = (points - self.domain.lo) / (self.domain.hi - self.domain.lo)
        t = np.clip(t, 0.0, 1.0) * (np.array(self.shape) - 1)
        strides = np.cumprod((1,) + self.shape[::-1])[:-1][::-1]
        if mode == "nearest":
            idx = np.rint(t).astype(np.int64) @ strides
            return sp.csr_matrix((np.ones(k), (np.arange(k), idx)), shape=(k, self.m))
        base = np.minimum(np.floor(t).astype(np.int64), np.array(self.shape) - 2)
        frac = t - base
        cols, vals = [], []
        for corner in np.ndindex(*(2,) * self.dimension):
            c = np.array(corner)
            w = np.prod(np.where(c == 1, frac, 1.0 - frac), axis=1)
            cols.append((base + c) @ strides)
            vals.append(w)
        rows = np.repeat(np.arange(k), len(cols))
        cols = np.stack(cols, axis=1).ravel()
        vals = np.stack(vals, axis=1).ravel()
        return sp.csr_matrix((vals, (rows, cols)), shape=(k, self.m))

    def function(self, fn: Callable) -> "DiscreteFunction":
        """Sample ``fn(points) -> values`` on the nodes."""
        return DiscreteFunction(self, np.asarray(fn(self.nodes), dtype=float).reshape(self.m))

    def constant(self, value: float = 1.0) -> "DiscreteFunction":
        return DiscreteFunction(self, np.full(self.m, float(value)))

    def point_mass(self, index: int) -> "DiscreteMeasure":
        w = np.zeros(self.m)
        w[index] = 1.0
        return DiscreteMeasure(self, w)

    def uniform_measure(self) -> "DiscreteMeasure":
        return DiscreteMeasure(self, np.full(self.m, 1.0 / self.m))

    def random_smooth(self, rng: np.random.Generator, modes: int = 3, scale: float = 1.0) -> "DiscreteFunction":
        """A few random low-frequency sines per axis, sup norm at most ``scale``."""
        rel = (self.nodes - self.domain.lo) / (self.domain.hi - self.domain.lo)
        vals = np.zeros(self.m)
        for _ in range(modes):
            k = rng.integers(1, 4, size=self.dimension)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            vals += rng.normal() * np.sin(np.pi * rel @ k + phase)
        top = float(np.max(np.abs(vals)))
        return DiscreteFunction(self, vals * (scale / top if top > 0 else 0.0))

    def random_measure(self, rng: np.random.Generator) -> "DiscreteMeasure":
        w = rng.exponential(size=self.m)
        return DiscreteMeasure(self, w / w.sum())


@dataclass(frozen=True, eq=False)
class DiscreteFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.m,):
            raise GridMismatch(f"expected {self.grid.m} values, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function has non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def at(self, points, mode: str = "multilinear") -> np.ndarray:
        return self.grid.interpolation_matrix(points, mode) @ self.values

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    grid: Grid
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.grid.m,):
            raise GridMismatch(f"expected {self.grid.m} weights, got {w.shape}")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("measure weights must be finite and nonnegative")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def mass(self) -> float:
        return float(np.sum(self.weights))

    @property
    def is_probability(self) -> bool:
        return abs(self.mass - 1.0) <= 1e-12

    def normalized(self) -> "DiscreteMeasure":
        return DiscreteMeasure(self.grid, self.weights / self.mass)

    def integrate(self, f) -> float:
        """``∫ f dm`` for a DiscreteFunction or a node-value array."""
        if isinstance(f, DiscreteFunction):
            self.grid.check_same(f.grid)
            f = f.values
        return float(np.dot(self.weights, f))
