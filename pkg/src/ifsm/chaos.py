"""Chaos-game orbits, dyadic cell histograms, PC plots and ergodic averages.

Random numbers come from numpy's PCG64 seeded through
``SeedSequence(seed, spawn_key=(stream,))``: one uniform double per step,
drawn in a single block before the walk. A branch is chosen by inverse CDF
over the cumulative branch weights taken in label order, with
``θ = #{k : cdf[k] <= u}``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import EmptyOrbit, GridMismatch, LevelTooFine, NotDyadicFamily
from .grid import DiscreteFunction, DiscreteMeasure
from .model import AffineMap, ParameterSet, SystemSpec

MAX_CELLS = 2 ** 24


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(stream),))))


@dataclass(frozen=True, eq=False)
class OrbitRecord:
    """``points[j + 1] = τ_{labels[j]}(points[j])``; ``points`` has N + 1 rows."""

    seed: int
    stream: int
    start: tuple
    points: np.ndarray
    labels: np.ndarray
    params: ParameterSet
    clamped: int = 0

    @property
    def N(self) -> int:
        return len(self.labels)

    @property
    def visits(self) -> np.ndarray:
        return self.points[: self.N]

    def symbols(self) -> list:
        return [self.params.labels[t] for t in self.labels]


def _pick(cdf, u):
    return min(int(np.searchsorted(cdf, u, side="right")), len(cdf) - 1)


def _cdf(weights):
    c = np.cumsum(weights)
    return c / c[-1]


def sample_orbit(spec: SystemSpec, z0, n_steps: int, seed: int, stream: int = 0) -> OrbitRecord:
    """State-dependent random iteration ``Z_{j+1} = τ_{θ_j}(Z_j)``, ``θ_j ~ q_{Z_j}``."""
    if n_steps < 1:
        raise EmptyOrbit("an orbit needs at least one step")
    d = spec.dimension
    z = spec._points(np.asarray(z0, dtype=float).reshape(1, d))
    rng = make_rng(seed, stream)
    u = rng.random(n_steps)
    points = np.empty((n_steps + 1, d))
    points[0] = z[0]
    const = spec.constant_density
    affine = all(isinstance(mp, AffineMap) for mp in spec.maps)
    clamped = 0
    if const is not None:
        cdf = _cdf(const * spec.params.mu)
        labels = np.minimum(np.searchsorted(cdf, u, side="right"), spec.n - 1)
        if affine:
            clamped = _walk_affine(spec, points, labels)
        else:
            for j in range(n_steps):
                points[j + 1] = spec.apply(int(labels[j]), points[j:j + 1])[0]
    else:
        labels = np.empty(n_steps, dtype=np.int64)
        for j in range(n_steps):
            here = points[j:j + 1]
            t = _pick(_cdf(spec.branch_weights(here)[0]), u[j])
            labels[j] = t
            points[j + 1] = spec.apply(t, here)[0]
    if clamped:
        warnings.warn(f"{clamped} orbit points were clamped to the domain", stacklevel=2)
    return OrbitRecord(int(seed), int(stream), tuple(points[0].tolist()), points,
                       labels.astype(np.int64), spec.params, clamped)


def _walk_affine(spec, points, labels) -> int:
    """Sequential walk using the same operation order as ``AffineMap.__call__``."""
    d = spec.dimension
    lo = spec.domain.lower
    hi = spec.domain.upper
    coeffs = [(mp.matrix, mp.offset) for mp in spec.maps]
    clamped = 0
    cur = [float(v) for v in points[0]]
    out = points
    for j, t in enumerate(labels.tolist()):
        mat, off = coeffs[t]
        nxt = []
        for k in range(d):
            row = mat[k]
            acc = row[0] * cur[0]
            for l in range(1, d):
                acc = acc + row[l] * cur[l]
            v = acc + off[k]
            if v < lo[k] or v > hi[k]:
                if v < lo[k] - 1e-9 or v > hi[k] + 1e-9:
                    # beyond slack: let the checked path raise
                    spec.apply(t, np.array([cur]))
                clamped += 1
                v = min(max(v, lo[k]), hi[k])
            nxt.append(v)
        out[j + 1] = nxt
        cur = nxt
    return clamped


# -- dyadic cells ----------------------------------------------------------


def dyadic_codes(spec: SystemSpec) -> list:
    """Quadrant code of each map (bit k set = upper half on axis k).

    Raises NotDyadicFamily unless the maps are the 2^d half-scale
    similarities onto the dyadic sub-boxes of the domain.
    """
    d = spec.dimension
    if spec.n != 2 ** d:
        raise NotDyadicFamily(f"need {2 ** d} maps for a dyadic family, got {spec.n}")
    lo, hi = spec.domain.lo, spec.domain.hi
    corners = np.array([lo + (hi - lo) * np.array(c) for c in np.ndindex(*(2,) * d)])
    codes = []
    for t in range(spec.n):
        img = spec.maps[t](corners)
        rel = (img - lo) / (hi - lo)
        base = rel[0]
        bits = np.rint(2 * base)
        expect = (bits + np.array(list(np.ndindex(*(2,) * d)))) / 2.0
        if not np.allclose(rel, expect, atol=1e-12) or np.any((bits < 0) | (bits > 1)):
            raise NotDyadicFamily(f"map {spec.params.labels[t]!r} is not a dyadic half-scale map")
        codes.append(int(sum(int(b) << k for k, b in enumerate(bits))))
    if sorted(codes) != list(range(2 ** d)):
        raise NotDyadicFamily("maps do not cover every dyadic sub-box exactly once")
    return codes


def cell_indices(points, domain, level: int) -> np.ndarray:
    """Per-axis cell index at ``level``; points on an edge go to the lower cell."""
    k = 2 ** level
    t = (np.atleast_2d(points) - domain.lo) / (domain.hi - domain.lo) * k
    idx = np.ceil(t).astype(np.int64) - 1
    return np.clip(idx, 0, k - 1)


@dataclass(frozen=True, eq=False)
class CellHistogram:
    """Cell weights ``W[i_x, i_y]`` at dyadic level ``M``.

    An address is a string of labels read coarse to fine: the first symbol
    picks the top-level quadrant, the next one the quadrant inside it.
    """

    level: int
    weights: np.ndarray
    labels: tuple
    codes: tuple
    count: int

    @property
    def dimension(self) -> int:
        return self.weights.ndim

    def cell_of(self, address) -> tuple:
        if len(address) != self.level:
            raise ValueError(f"address must have {self.level} symbols")
        idx = [0] * self.dimension
        for sym in address:
            code = self.codes[self.labels.index(str(sym))]
            for k in range(self.dimension):
                idx[k] = 2 * idx[k] + ((code >> k) & 1)
        return tuple(idx)

    def weight(self, address) -> float:
        return float(self.weights[self.cell_of(address)])

    def merge(self, other: "CellHistogram") -> "CellHistogram":
        """Pool two histograms of the same layout, weighting by visit counts."""
        if other.level != self.level or other.weights.shape != self.weights.shape:
            raise ValueError("histograms differ in level or layout")
        total = self.count + other.count
        w = (self.weights * self.count + other.weights * other.count) / total
        return CellHistogram(self.level, w, self.labels, self.codes, total)


def empirical_measure(orbit: OrbitRecord, level: int, burn_in: int = 1000,
                      spec: Optional[SystemSpec] = None, domain=None) -> CellHistogram:
    """Visit frequencies of ``Z_j`` (``j >= burn_in``) over the dyadic cells at ``level``."""
    if level < 1:
        raise ValueError("level must be at least 1")
    if burn_in >= orbit.N:
        raise ValueError("burn_in must be smaller than the orbit length")
    if spec is not None:
        domain = spec.domain
        codes = tuple(dyadic_codes(spec))
    else:
        codes = tuple(range(orbit.params.n))
    d = orbit.points.shape[1]
    if 2 ** (d * level) > MAX_CELLS:
        raise LevelTooFine(f"level {level} would need {2 ** (d * level)} cells")
    if domain is None:
        raise ValueError("need the system or its domain to locate cells")
    idx = cell_indices(orbit.visits[burn_in:], domain, level)
    shape = (2 ** level,) * d
    flat = np.ravel_multi_index(tuple(idx.T), shape)
    counts = np.bincount(flat, minlength=int(np.prod(shape))).reshape(shape)
    total = int(counts.sum())
    return CellHistogram(level, counts / total, orbit.params.labels, codes, total)


def measure_cell_masses(measure: DiscreteMeasure, level: int) -> np.ndarray:
    """Cell masses of a grid measure, a node's weight shared equally among the cells touching it."""
    grid = measure.grid
    d = grid.dimension
    k = 2 ** level
    per_axis = []
    for ax, n in enumerate(grid.shape):
        t = np.arange(n) / (n - 1) * k
        lower = np.clip(np.ceil(t).astype(int) - 1, 0, k - 1)
        upper = np.clip(np.floor(t).astype(int), 0, k - 1)
        per_axis.append((lower, upper))
    out = np.zeros((k,) * d)
    w = measure.weights.reshape(grid.shape)
    for choice in np.ndindex(*(2,) * d):
        idx = [per_axis[ax][c] for ax, c in enumerate(choice)]
        mesh = np.meshgrid(*idx, indexing="ij")
        np.add.at(out, tuple(mesh), w / 2 ** d)
    return out


def product_cell_masses(frequencies, codes, level: int, dimension: int) -> np.ndarray:
    """Exact cell masses of the invariant measure for constant branch probabilities."""
    out = np.ones((1,) * dimension)
    for _ in range(level):
        nxt = np.zeros(tuple(2 * s for s in out.shape))
        for p, code in zip(frequencies, codes):
            sl = tuple(slice((code >> k) & 1, None, 2) for k in range(dimension))
            nxt[sl] = out * p
        out = nxt
    return out


# -- ergodic averages ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EltonTrace:
    ns: np.ndarray
    averages: np.ndarray
    gaps: np.ndarray
    target: float

    @property
    def final_gap(self) -> float:
        return float(self.gaps[-1])


def elton_average(orbit: OrbitRecord, f: DiscreteFunction, reference: DiscreteMeasure,
                  checkpoints: Optional[np.ndarray] = None) -> EltonTrace:
    """Running averages ``A_N = (1/N) Σ_{j<N} f(Z_j)`` against ``∫ f d(reference)``."""
    if f.grid != reference.grid:
        raise GridMismatch("function and reference measure live on different grids")
    vals = f.at(orbit.visits)
    running = np.cumsum(vals) / np.arange(1, orbit.N + 1)
    if checkpoints is None:
        checkpoints = np.unique(np.geomspace(1, orbit.N, num=min(orbit.N, 60)).astype(int))
    checkpoints = np.asarray(checkpoints, dtype=int)
    avgs = running[checkpoints - 1]
    target = reference.integrate(f)
    return EltonTrace(checkpoints, avgs, np.abs(avgs - target), target)


# -- PC plot ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ImageGrid:
    """Grey levels ``0..maxval``, row 0 at the top."""

    pixels: np.ndarray
    maxval: int = 255

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


def pc_plot(hist: CellHistogram, block: int = 1, maxval: int = 255) -> ImageGrid:
    """One ``block × block`` square per cell, grey level proportional to the cell weight."""
    if hist.dimension not in (1, 2):
        raise NotDyadicFamily("PC plots need a one- or two-dimensional dyadic family")
    w = hist.weights if hist.dimension == 2 else hist.weights[:, None]
    top = float(np.max(w))
    if top <= 0:
        raise ValueError("histogram is empty")
    grey = np.rint(w / top * maxval).astype(np.int64)
    img = grey.T[::-1]
    img = np.kron(img, np.ones((block, block), dtype=np.int64))
    return ImageGrid(img, maxval)
