"""Spectral radius, positive eigenfunction, eigenmeasure and normalisation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import DegenerateOperator, NoConvergence, NonPositiveEigenfunction
from .grid import DiscreteFunction, DiscreteMeasure, Grid
from .model import DensityFamily, SystemSpec, validate_system
from .operators import TransferMatrix, check_nondegenerate


@dataclass(frozen=True, eq=False)
class SpectralResult:
    rho: float
    log_rho: float
    eigenfunction: DiscreteFunction
    iterations: int
    residual: float


@dataclass(frozen=True, eq=False)
class EigenmeasureResult:
    rho_star: float
    measure: DiscreteMeasure
    residual: float
    iterations: int


class GelfandStep(NamedTuple):
    N: int
    estimate: float
    spread: float


def spectral_radius_gelfand(B: TransferMatrix, n_max: int) -> list:
    """``(1/N) ln B^N(1)`` at the max and min node for ``N = 1..n_max``.

    The iterate is renormalised by its maximum each step and the log scale is
    carried separately, so large or tiny spectral radii do not overflow.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    check_nondegenerate(B)
    v = np.ones(B.m)
    log_scale = 0.0
    out = []
    for n in range(1, n_max + 1):
        v = B.matrix @ v
        top = float(np.max(v))
        low = float(np.min(v))
        if low <= 0:
            raise DegenerateOperator(f"B^{n}(1) vanishes at node {int(np.argmin(v))}")
        log_top = log_scale + math.log(top)
        out.append(GelfandStep(n, log_top / n, (math.log(top) - math.log(low)) / n))
        log_scale = log_top
        v = v / top
    return out


def power_iteration(B: TransferMatrix, tol: float = 1e-12, max_iter: int = 100_000,
                    start: Optional[np.ndarray] = None) -> SpectralResult:
    """Positive eigenfunction ``h`` (sup-normalised) and eigenvalue ``ρ``.

    Stops once ``‖B h − ρ h‖∞ ≤ tol ρ`` with ``ρ = max(B h)``. If the iterate
    keeps moving (for instance a peripheral eigenvalue of modulus ρ) this
    raises NoConvergence instead of averaging.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    check_nondegenerate(B)
    v = np.ones(B.m) if start is None else np.asarray(start, dtype=float).copy()
    if np.any(v <= 0):
        raise ValueError("start vector must be strictly positive")
    v = v / np.max(v)
    residual = math.inf
    for it in range(1, max_iter + 1):
        w = B.matrix @ v
        rho = float(np.max(w))
        residual = float(np.max(np.abs(w - rho * v)))
        if residual <= tol * rho:
            if np.min(v) <= 0:
                raise NonPositiveEigenfunction("eigenfunction is not strictly positive")
            return SpectralResult(rho, math.log(rho), DiscreteFunction(B.grid, v), it, residual)
        v = w / rho
    raise NoConvergence(f"power iteration stalled at residual {residual:.3e}", residual=residual)


def eigenmeasure(B: TransferMatrix, tol: float = 1e-12, max_iter: int = 100_000,
                 start: Optional[np.ndarray] = None) -> EigenmeasureResult:
    """Fixed point of ``γ ↦ Bᵀγ / mass(Bᵀγ)`` on grid probabilities."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    check_nondegenerate(B)
    g = np.full(B.m, 1.0 / B.m) if start is None else np.asarray(start, dtype=float)
    g = g / np.sum(g)
    residual = math.inf
    for it in range(1, max_iter + 1):
        w = B.matrix.T @ g
        rho = float(np.sum(w))
        residual = float(np.sum(np.abs(w - rho * g)))
        if residual <= tol * rho:
            return EigenmeasureResult(rho, DiscreteMeasure(B.grid, g / np.sum(g)), residual, it)
        g = w / rho
    raise NoConvergence(f"eigenmeasure iteration stalled at residual {residual:.3e}",
                        residual=residual)


def uniqueness_check(B: TransferMatrix, starts, tol: float = 1e-12) -> dict:
    """Run power iteration from several positive starts and compare the limits."""
    results = [power_iteration(B, tol=tol, start=s) for s in starts]
    ref = results[0]
    rho_gap = max(abs(r.rho - ref.rho) for r in results)
    h_gap = max(float(np.max(np.abs(r.eigenfunction.values - ref.eigenfunction.values)))
                for r in results)
    return {"rhos": [r.rho for r in results], "rho_gap": rho_gap, "eigenfunction_gap": h_gap,
            "unique": rho_gap <= 10 * tol * ref.rho and h_gap <= 1e-6}


class NormalizedDensity(DensityFamily):
    """``J(x, θ) h(τ_θ x) / (ρ h(x))`` with ``h`` interpolated off the grid."""

    def __init__(self, base: SystemSpec, eigenfunction: DiscreteFunction, rho: float):
        self.base = base
        self.h = eigenfunction
        self.rho = float(rho)
        if base.constant_density is not None and np.ptp(eigenfunction.values) == 0:
            self.constant_values = base.constant_density / self.rho

    def __call__(self, points):
        images = self.base.images(points)
        dens = self.base.density_at(points, images)
        h_here = self.h.at(points)
        h_next = np.stack([self.h.at(images[t]) for t in range(self.base.n)], axis=1)
        return dens * h_next / (self.rho * h_here[:, None])


def normalize_system(spec: SystemSpec, s: SpectralResult, grid: Grid | None = None,
                     tol: float = 1e-8) -> SystemSpec:
    """Normalisation of ``spec`` by its eigendata; q_x(Θ) = 1 on the grid within ``tol``."""
    h = s.eigenfunction
    if grid is not None:
        h.grid.check_same(grid)
    if np.min(h.values) <= 0:
        raise NonPositiveEigenfunction("eigenfunction must be strictly positive")
    out = spec.with_density(NormalizedDensity(spec, h, s.rho), name=f"{spec.name}/normalized")
    report = validate_system(out, h.grid, normalized_tol=tol)
    if not report.normalized:
        raise NoConvergence(
            f"normalised system deviates from a probability by {report.max_normalization_error:.3e}",
            residual=report.max_normalization_error, stage="normalize")
    return out
