"""Entropies, topological pressure, equilibrium states and the pressure functional."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import (
    AbsoluteContinuityViolated,
    NoConvergence,
    NonPositiveFunction,
    NumericalError,
    OptimizerDiverged,
)
from .grid import DiscreteFunction, DiscreteMeasure, Grid
from .holonomy import Disintegration, HolonomicMeasure, disintegrate, holonomic_lift
from .model import ParameterSet, Potential, SystemSpec
from .operators import TransferMatrix, apriori_transfer, assemble_transfer
from .spectral import eigenmeasure, normalize_system, power_iteration


@dataclass(frozen=True)
class OptimizerParams:
    max_iter: int = 5000
    rel_tol: float = 1e-10
    step: float = 1.0
    max_step: float = 1e6
    shrink: float = 0.5
    armijo: float = 1e-4


@dataclass(frozen=True, eq=False)
class EntropyReport:
    h_v: float
    h_v_optimizer_trace: list
    h_a: Optional[float]
    optimal_function_used: bool
    minimizer: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def gap(self) -> Optional[float]:
        return None if self.h_a is None else self.h_v - self.h_a

    def to_dict(self):
        return {
            "h_v": self.h_v,
            "h_a": self.h_a,
            "gap": self.gap,
            "optimal_function_used": self.optimal_function_used,
            "iterations": len(self.h_v_optimizer_trace) - 1,
        }


@dataclass(frozen=True, eq=False)
class ThermoReport:
    rho: float
    log_rho: float
    pressure: float
    variational_lower_bound: float
    equilibrium_defect: float
    marginal: DiscreteMeasure
    entropy: float
    potential_integral: float
    rho_star: float
    entropy_optimizer: Optional[float] = None

    def to_dict(self):
        return {
            "rho": self.rho,
            "log_rho": self.log_rho,
            "pressure": self.pressure,
            "variational_lower_bound": self.variational_lower_bound,
            "equilibrium_defect": self.equilibrium_defect,
            "entropy": self.entropy,
            "entropy_optimizer": self.entropy_optimizer,
            "potential_integral": self.potential_integral,
            "rho_star": self.rho_star,
            "marginal_mass": self.marginal.mass,
        }


# -- entropies -----------------------------------------------------------


def entropy_average(dis: Disintegration, params: ParameterSet) -> float:
    """``−Σ_i ν_i Σ_θ ν_i(θ) ln(ν_i(θ) / μ(θ))`` over nodes where ν_i > 0."""
    d = dis.defined
    cond = dis.conditionals[d]
    mu = params.mu
    if np.any((cond > 0) & (mu == 0)):
        raise AbsoluteContinuityViolated("conditional charges a parameter with zero a-priori weight")
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(cond > 0, cond * np.log(cond / np.where(mu > 0, mu, 1.0)), 0.0)
    return float(-np.dot(dis.marginal.weights[d], terms.sum(axis=1)))


def entropy_closed_form(phi: DiscreteFunction, nu: DiscreteMeasure, B_mu: TransferMatrix) -> float:
    """``∫ ln(B_μ φ / φ) dν``."""
    if np.any(phi.values <= 0):
        raise NonPositiveFunction("phi must be strictly positive")
    B_mu.grid.check_same(phi.grid)
    return nu.integrate(np.log((B_mu.matrix @ phi.values) / phi.values))


def log_ratio_functional(B: TransferMatrix, nu: DiscreteMeasure, u: np.ndarray):
    """``F(u) = ∫ ln(B e^u) dν − ∫ u dν`` and its gradient in ``u``."""
    w = nu.weights
    u = u - np.max(u)
    g = np.exp(u)
    Bg = B.matrix @ g
    value = float(w @ np.log(Bg) - w @ u)
    grad = g * (B.matrix.T @ (w / Bg)) - w
    return value, grad


def minimize_log_ratio(B: TransferMatrix, nu: DiscreteMeasure, starts=None,
                       opt: OptimizerParams = OptimizerParams()):
    """Gradient descent with Armijo backtracking on ``F``; returns (value, u, trace).

    ``starts`` is a list of initial ``u`` vectors; the best of them seeds the
    descent (``u = 0`` is always included). The returned value is the best
    value seen, hence an upper bound on the infimum.
    """
    candidates = [np.zeros(B.m)] + [np.asarray(s, dtype=float) for s in (starts or [])]
    scored = [(log_ratio_functional(B, nu, u), u) for u in candidates]
    (value, grad), u = min(scored, key=lambda s: s[0][0])
    trace = [value]
    step = opt.step
    for _ in range(opt.max_iter):
        direction = -grad
        slope = float(grad @ direction)
        if slope == 0.0:
            break
        s = step
        while True:
            new_value, new_grad = log_ratio_functional(B, nu, u + s * direction)
            if not math.isfinite(new_value):
                if s < 1e-30:
                    raise OptimizerDiverged("objective is not finite along the descent path")
            elif new_value <= value + opt.armijo * s * slope:
                break
            s *= opt.shrink
            if s < 1e-30:
                return value, u, trace
        u = u + s * direction
        decrease = value - new_value
        value, grad = new_value, new_grad
        trace.append(value)
        step = min(2.0 * s, opt.max_step)
        if decrease <= opt.rel_tol * max(1.0, abs(value)):
            break
    if not math.isfinite(value):
        raise OptimizerDiverged("objective diverged")
    return value, u, trace


def entropy_variational(hm: HolonomicMeasure, B_mu: TransferMatrix,
                        opt: OptimizerParams = OptimizerParams(), starts=None,
                        optimal_function: Optional[DiscreteFunction] = None) -> EntropyReport:
    """Upper estimate of ``inf_g ∫ ln(B_μ g / g) dν`` for the marginal of ``hm``.

    ``B_μ`` is the unweighted transfer matrix (``J ≡ 1``). The descent starts
    from ``u = 0``, where the objective is ``∫ ln B_μ(1) dν = 0``, so the result
    never exceeds zero. If ``optimal_function`` is given it joins the starts.
    """
    hm.grid.check_same(B_mu.grid)
    nu = hm.marginal
    starts = list(starts or [])
    if optimal_function is not None:
        starts.append(np.log(optimal_function.values))
    value, u, trace = minimize_log_ratio(B_mu, nu, starts, opt)
    h_a = entropy_average(disintegrate(hm), hm.params)
    return EntropyReport(value, trace, h_a, optimal_function is not None, u)


# -- pressure and equilibrium -------------------------------------------


def _stage(fn, stage, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except NumericalError as err:
        err.stage = stage
        raise


def potential_integral(spec: SystemSpec, hm: HolonomicMeasure) -> float:
    """``∫ log ψ dν``; for density-weighted systems ``Σ w(i, θ) ln J(x_i, θ)``.

    The second form equals the first for a potential and a holonomic ``w``.
    """
    nodes = hm.grid.nodes
    if spec.potential is not None:
        return hm.marginal.integrate(np.log(spec.potential(nodes)))
    return float(np.sum(hm.weights * np.log(spec.density_at(nodes))))


def sup_inf_value(B_q: TransferMatrix, nu: DiscreteMeasure, starts=None,
                  opt: OptimizerParams = OptimizerParams()) -> float:
    """``inf_g ∫ ln(B_q g / g) dν`` estimated by descent; an upper bound on the infimum."""
    value, _, _ = minimize_log_ratio(B_q, nu, starts, opt)
    return value


def equilibrium_state(spec: SystemSpec, grid: Grid | int, tol: float = 1e-12,
                      opt: OptimizerParams = OptimizerParams(), candidates=None,
                      run_optimizer: bool = True):
    """Eigenfunction, normalisation, invariant measure, lift; returns (lift, report).

    The entropy of the lift is taken in closed form: the normalised weights are
    built from the optimal function ``h ψ``, so average and variational entropy
    coincide. ``variational_lower_bound`` is the sup over ``candidates`` (plus
    the lift itself) of the descent estimate of ``inf_g ∫ ln(B_q g/g) dν``,
    each descent seeded with ``ln h``.
    """
    if not isinstance(grid, Grid):
        grid = Grid(spec.domain, grid)
    B = assemble_transfer(spec, grid)
    s = _stage(power_iteration, "eigenfunction", B, tol=tol)
    normalized = _stage(normalize_system, "normalize", spec, s, grid, tol=max(1e-8, 100 * tol))
    Bn = assemble_transfer(normalized, grid)
    e = _stage(eigenmeasure, "eigenmeasure", Bn, tol=tol)
    lift = holonomic_lift(normalized, e.measure)
    h_a = entropy_average(disintegrate(lift), spec.params)
    pot = potential_integral(spec, lift)
    entropy = h_a
    defect = abs(entropy + pot - s.log_rho)

    log_h = np.log(s.eigenfunction.values)
    bound = -math.inf
    h_v_opt = None
    if run_optimizer:
        measures = [lift.marginal] + [c.marginal if isinstance(c, HolonomicMeasure) else c
                                      for c in (candidates or [])]
        for nu in measures:
            bound = max(bound, _stage(sup_inf_value, "variational", B, nu, [log_h], opt))
        B_mu = apriori_transfer(spec, grid)
        start = log_h + (np.log(spec.potential(grid.nodes)) if spec.potential is not None else 0.0)
        h_v_opt, _, _ = minimize_log_ratio(B_mu, lift.marginal, [start], opt)
    report = ThermoReport(
        rho=s.rho,
        log_rho=s.log_rho,
        pressure=s.log_rho,
        variational_lower_bound=bound,
        equilibrium_defect=defect,
        marginal=lift.marginal,
        entropy=entropy,
        potential_integral=pot,
        rho_star=e.rho_star,
        entropy_optimizer=h_v_opt,
    )
    return lift, report


def pressure(spec: SystemSpec, grid: Grid | int, tol: float = 1e-12, **kwargs) -> ThermoReport:
    """``P = ln ρ(B_q)`` with the equilibrium diagnostics attached."""
    return equilibrium_state(spec, grid, tol, **kwargs)[1]


# -- pressure functional -------------------------------------------------


class PressureFunctional:
    """``p(φ) = ln ρ(B_{exp φ})`` for grid functions φ on a fixed IFS.

    The potential is ``exp`` of the interpolated φ, so the branch weight at
    node ``x_i`` is ``μ(θ) exp(φ̃(τ_θ x_i))``.
    """

    def __init__(self, spec: SystemSpec, grid: Grid | int, tol: float = 1e-13):
        if not isinstance(grid, Grid):
            grid = Grid(spec.domain, grid)
        self.spec = spec
        self.grid = grid
        self.tol = tol
        images = spec.images(grid.nodes)
        self._coeff = [grid.interpolation_matrix(images[t]) for t in range(spec.n)]
        self._mu = spec.params.mu

    def _values(self, phi):
        if isinstance(phi, DiscreteFunction):
            self.grid.check_same(phi.grid)
            return phi.values
        return np.asarray(phi, dtype=float)

    def matrix(self, phi) -> TransferMatrix:
        v = self._values(phi)
        mat = None
        for t, c in enumerate(self._coeff):
            block = sp.diags(self._mu[t] * np.exp(c @ v)) @ c
            mat = block if mat is None else mat + block
        mat = mat.tocsr()
        return TransferMatrix(self.grid, mat, "multilinear", "pressure-functional")

    def __call__(self, phi) -> float:
        return power_iteration(self.matrix(phi), tol=self.tol).log_rho

    def potential_spec(self, phi) -> SystemSpec:
        f = DiscreteFunction(self.grid, self._values(phi))
        return SystemSpec(self.spec.domain, self.spec.params, self.spec.maps,
                          potential=Potential(fn=lambda pts: np.exp(f.at(pts))),
                          name=f"{self.spec.name}/exp(phi)")


@dataclass(frozen=True, eq=False)
class PressureFunctionalProbe:
    base: DiscreteFunction
    directions: list
    t_stencil: tuple
    base_value: float
    values: np.ndarray              # (directions, stencil)
    quotients: np.ndarray           # one-sided difference quotients
    richardson: np.ndarray          # extrapolated d+p per direction
    derivative: np.ndarray          # finest-stencil d+p estimate per direction
    midpoint_gaps: np.ndarray       # max convexity violation per direction (<= 0 is convex)
    subgradient_slack: Optional[np.ndarray] = None   # min over t of p(φ+tη) − p(φ) − tν(η)
    measure_pairing: Optional[np.ndarray] = None     # ν(η) per direction

    @property
    def convex(self) -> bool:
        return bool(np.all(self.midpoint_gaps <= 1e-8))

    def to_dict(self):
        out = {
            "base_value": self.base_value,
            "t_stencil": list(self.t_stencil),
            "derivative": self.derivative.tolist(),
            "richardson": self.richardson.tolist(),
            "max_midpoint_gap": float(np.max(self.midpoint_gaps)),
            "convex": self.convex,
        }
        if self.subgradient_slack is not None:
            out["min_subgradient_slack"] = float(np.min(self.subgradient_slack))
            out["measure_pairing"] = self.measure_pairing.tolist()
            out["pairing_below_derivative"] = bool(np.all(self.measure_pairing <= self.richardson + 1e-6))
        return out


def pressure_functional_probe(phi: DiscreteFunction, directions: Sequence[DiscreteFunction],
                              t_stencil: Sequence[float] = (1e-2, 1e-3, 1e-4),
                              spec: SystemSpec = None, nu: Optional[DiscreteMeasure] = None,
                              functional: Optional[PressureFunctional] = None) -> PressureFunctionalProbe:
    """Evaluate ``p`` along ``φ + tη`` for each direction and stencil point.

    Reports one-sided quotients, a Richardson extrapolation of the two finest
    quotients, midpoint convexity on every segment ``[φ, φ + tη]`` and, when
    ``nu`` is supplied, the subgradient slack ``p(φ+tη) − p(φ) − t ν(η)``.
    """
    ts = tuple(float(t) for t in t_stencil)
    if any(t <= 0 for t in ts) or any(a <= b for a, b in zip(ts, ts[1:])):
        raise ValueError("t_stencil must be positive and strictly decreasing")
    p = functional or PressureFunctional(spec, phi.grid)
    base = p(phi)
    k = len(directions)
    values = np.empty((k, len(ts)))
    mids = np.empty((k, len(ts)))
    for a, eta in enumerate(directions):
        for b, t in enumerate(ts):
            values[a, b] = p(phi.values + t * eta.values)
            mid = p(phi.values + 0.5 * t * eta.values)
            mids[a, b] = mid - 0.5 * (base + values[a, b])
    quotients = (values - base) / np.array(ts)
    if len(ts) >= 2:
        r = ts[-2] / ts[-1]
        richardson = (r * quotients[:, -1] - quotients[:, -2]) / (r - 1.0)
    else:
        richardson = quotients[:, -1].copy()
    slack = pairing = None
    if nu is not None:
        pairing = np.array([nu.integrate(eta) for eta in directions])
        slack = np.min(values - base - np.array(ts)[None, :] * pairing[:, None], axis=1)
    return PressureFunctionalProbe(phi, list(directions), ts, base, values, quotients,
                                   richardson, quotients[:, -1], np.max(mids, axis=1),
                                   slack, pairing)
