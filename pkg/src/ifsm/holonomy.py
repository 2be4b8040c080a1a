"""Holonomic measures on nodes × parameters, their lifts and disintegrations."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyOrbit, NotNormalized
from .grid import DiscreteFunction, DiscreteMeasure, Grid
from .model import ParameterSet, SystemSpec
from .operators import assemble_transfer


@dataclass(frozen=True, eq=False)
class Atoms:
    """Point masses ``(points[j], labels[j])`` with weights ``weights[j]``."""

    points: np.ndarray
    labels: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True, eq=False)
class HolonomicMeasure:
    """Weights ``w[i, θ]`` on grid nodes × parameters, total mass one.

    Empirical measures also keep their exact atoms so residuals can be taken
    at the orbit points rather than at the splatted nodes.
    """

    grid: Grid
    params: ParameterSet
    weights: np.ndarray
    atoms: Optional[Atoms] = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.grid.m, self.params.n):
            raise ValueError(f"weights must have shape {(self.grid.m, self.params.n)}")
        if np.any(w < 0):
            raise ValueError("holonomic weights must be nonnegative")
        if abs(float(np.sum(w)) - 1.0) > 1e-12:
            raise ValueError(f"holonomic measure has mass {np.sum(w)!r}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def marginal(self) -> DiscreteMeasure:
        return DiscreteMeasure(self.grid, np.sum(self.weights, axis=1))

    def combine(self, others: Sequence["HolonomicMeasure"], coeffs: Sequence[float]) -> "HolonomicMeasure":
        """Convex combination of ``self`` and ``others``; ``coeffs`` covers all of them."""
        parts = [self, *others]
        coeffs = np.asarray(coeffs, dtype=float)
        if len(coeffs) != len(parts) or np.any(coeffs < 0) or abs(coeffs.sum() - 1) > 1e-12:
            raise ValueError("coefficients must be a probability vector over all measures")
        w = sum(c * p.weights for c, p in zip(coeffs, parts))
        atoms = None
        if all(p.atoms is not None for p in parts):
            atoms = Atoms(
                np.concatenate([p.atoms.points for p in parts]),
                np.concatenate([p.atoms.labels for p in parts]),
                np.concatenate([c * p.atoms.weights for c, p in zip(coeffs, parts)]),
            )
        return HolonomicMeasure(self.grid, self.params, w / w.sum(), atoms)


@dataclass(frozen=True, eq=False)
class Disintegration:
    """Marginal on nodes and per-node conditionals over parameters.

    ``conditionals[i]`` is NaN where the marginal vanishes.
    """

    marginal: DiscreteMeasure
    conditionals: np.ndarray

    @property
    def defined(self) -> np.ndarray:
        return self.marginal.weights > 0

    def recombine(self) -> np.ndarray:
        w = np.zeros_like(self.conditionals)
        d = self.defined
        w[d] = self.marginal.weights[d, None] * self.conditionals[d]
        return w


def holonomic_lift(spec: SystemSpec, nu: DiscreteMeasure, normalized_tol: float = 1e-8,
                   invariance_tol: float = 1e-8) -> HolonomicMeasure:
    """``w[i, θ] = ν_i μ(θ) J(x_i, θ)`` for a normalised system.

    Warns if ``ν`` is not invariant for the system's Markov matrix on
    ``ν.grid``, since the lift is then not holonomic.
    """
    grid = nu.grid
    probs = spec.branch_weights(grid.nodes)
    err = float(np.max(np.abs(probs.sum(axis=1) - 1.0)))
    if err > normalized_tol:
        raise NotNormalized(f"system is not normalised on the grid (error {err:.3e})")
    weights = nu.weights[:, None] * probs
    B = assemble_transfer(spec, grid)
    defect = float(np.sum(np.abs(B.matrix.T @ nu.weights - nu.weights)))
    if defect > invariance_tol:
        warnings.warn(f"lifted measure is not invariant (L1 defect {defect:.3e})", stacklevel=2)
    return HolonomicMeasure(grid, spec.params, weights / weights.sum())


def holonomy_residual(hm: HolonomicMeasure, spec: SystemSpec, test_fns: Sequence[DiscreteFunction],
                      use_atoms: bool = True) -> float:
    """``max_f |Σ w(i, θ) (f(τ_θ x_i) − f(x_i))|`` with ``f`` interpolated off the grid."""
    for f in test_fns:
        hm.grid.check_same(f.grid)
    if use_atoms and hm.atoms is not None:
        return _atom_residual(hm.atoms, spec, test_fns)
    nodes = hm.grid.nodes
    images = spec.images(nodes)
    worst = 0.0
    for f in test_fns:
        total = 0.0
        for t in range(spec.n):
            diff = f.at(images[t]) - f.values
            total += float(np.dot(hm.weights[:, t], diff))
        worst = max(worst, abs(total))
    return worst


def _atom_residual(atoms: Atoms, spec, test_fns) -> float:
    nxt = np.empty_like(atoms.points)
    for t in range(spec.n):
        sel = atoms.labels == t
        if np.any(sel):
            nxt[sel] = spec.apply(t, atoms.points[sel])
    worst = 0.0
    for f in test_fns:
        terms = atoms.weights * (f.at(nxt) - f.at(atoms.points))
        worst = max(worst, abs(math.fsum(terms)))
    return worst


def empirical_holonomic(orbit, grid: Grid) -> HolonomicMeasure:
    """Orbit average ``(1/N) Σ δ(Z_j, θ_j)``; atoms are splatted onto nodes by interpolation."""
    n = len(orbit.labels)
    if n == 0:
        raise EmptyOrbit("orbit has no steps")
    points = orbit.points[:n]
    coeff = grid.interpolation_matrix(points)
    n_params = orbit.params.n
    onehot = np.zeros((n, n_params))
    onehot[np.arange(n), orbit.labels] = 1.0 / n
    weights = np.asarray(coeff.T @ onehot)
    atoms = Atoms(points, np.asarray(orbit.labels), np.full(n, 1.0 / n))
    return HolonomicMeasure(grid, orbit.params, weights / weights.sum(), atoms)


def disintegrate(hm: HolonomicMeasure) -> Disintegration:
    nu = hm.marginal
    cond = np.full_like(hm.weights, np.nan)
    d = nu.weights > 0
    cond[d] = hm.weights[d] / nu.weights[d, None]
    return Disintegration(nu, cond)
