"""Reference systems with known closed forms, used by tests, scripts and the CLI."""
from __future__ import annotations

import numpy as np

from .grid import DomainBox
from .model import (
    AffineMap,
    CallableDensity,
    ConstantDensity,
    ExprDensity,
    ParameterSet,
    Potential,
    SystemSpec,
)

MARKET_FREQUENCIES = (0.39, 0.17, 0.15, 0.29)
MARKET_LABELS = ("A", "B", "C", "D")


def halving_maps():
    return (AffineMap([[0.5]], [0.0]), AffineMap([[0.5]], [0.5]))


def e1() -> SystemSpec:
    """``x/2`` and ``x/2 + 1/2`` on [0, 1] with fair weights; Lebesgue is invariant."""
    return SystemSpec(
        DomainBox((0.0,), (1.0,)),
        ParameterSet.uniform(("0", "1")),
        halving_maps(),
        density=ConstantDensity([1.0, 1.0]),
        name="e1",
    )


def e2(beta: float = 1.0) -> SystemSpec:
    """The halving maps weighted by the potential ``exp(beta x)``.

    ``h(x) = exp(beta x)`` is an eigenfunction with eigenvalue ``(1 + e^beta)/2``.
    """
    beta = float(beta)
    return SystemSpec(
        DomainBox((0.0,), (1.0,)),
        ParameterSet.uniform(("0", "1")),
        halving_maps(),
        potential=Potential(expr=f"exp({beta!r}*x)"),
        name=f"e2(beta={beta:g})",
    )


def e2_rho(beta: float = 1.0) -> float:
    return (1.0 + np.exp(beta)) / 2.0


def constant_weight(c: float, n: int = 3) -> SystemSpec:
    """``n`` contractions of [0, 1] with ``J ≡ c`` and uniform a-priori weights."""
    maps = tuple(AffineMap([[1.0 / n]], [k / n]) for k in range(n))
    return SystemSpec(
        DomainBox((0.0,), (1.0,)),
        ParameterSet.uniform(tuple(str(k) for k in range(n))),
        maps,
        density=ConstantDensity([c] * n),
        name=f"constant(c={c:g}, n={n})",
    )


def quadrant_maps():
    return (
        AffineMap([[0.5, 0.0], [0.0, 0.5]], [0.0, 0.0]),
        AffineMap([[0.5, 0.0], [0.0, 0.5]], [0.5, 0.0]),
        AffineMap([[0.5, 0.0], [0.0, 0.5]], [0.0, 0.5]),
        AffineMap([[0.5, 0.0], [0.0, 0.5]], [0.5, 0.5]),
    )


def market(frequencies=MARKET_FREQUENCIES) -> SystemSpec:
    """The four quadrant maps of the unit square chosen with fixed frequencies.

    The a-priori measure is uniform, so ``J(x, θ) = 4 p_θ``.
    """
    p = np.asarray(frequencies, dtype=float)
    dens = [repr(float(v)) for v in 4.0 * p]
    return SystemSpec(
        DomainBox((0.0, 0.0), (1.0, 1.0)),
        ParameterSet.uniform(MARKET_LABELS),
        quadrant_maps(),
        density=ExprDensity(dens),
        name="market",
    )


def random_normalized(rng: np.random.Generator, n_maps: int = 3) -> SystemSpec:
    """Random contractions of [0, 1] with state-dependent probabilities summing to one."""
    maps = []
    for _ in range(n_maps):
        a = rng.uniform(0.2, 0.6) * rng.choice([-1.0, 1.0])
        lo = max(0.0, -a)
        b = rng.uniform(lo, 1.0 - abs(a) + lo)
        maps.append(AffineMap([[a]], [b]))
    params = ParameterSet(tuple(str(k) for k in range(n_maps)), tuple(rng.dirichlet(np.ones(n_maps) * 2.0)))
    mu = params.mu
    slopes = rng.normal(size=n_maps)
    freqs = rng.uniform(0.5, 3.0, size=n_maps)

    def density(points):
        x = points[:, :1]
        s = np.exp(slopes * np.sin(freqs * x + slopes))
        return s / (s @ mu)[:, None]

    return SystemSpec(
        DomainBox((0.0,), (1.0,)),
        params,
        tuple(maps),
        density=CallableDensity(density),
        name="random-normalized",
    )
