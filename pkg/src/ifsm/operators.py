"""Grid discretisation of the transfer operator and its adjoint.

Row ``i`` of the matrix is ``Σ_θ μ(θ) J(x_i, θ) c(τ_θ x_i)`` where ``c`` are
the interpolation coefficients of the image point. With hat-function
coefficients the rows are nonnegative and sum to ``q_x(Θ)`` at the node.
The Markov operator on grid measures is the literal transpose.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateOperator
from .grid import DiscreteFunction, DiscreteMeasure, Grid
from .model import SystemSpec

_BIN_MAGIC = b"IFSMMAT1"


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    grid: Grid
    matrix: sp.csr_matrix
    mode: str = "multilinear"
    name: str = ""

    @property
    def m(self) -> int:
        return self.grid.m

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).ravel()

    def __matmul__(self, v):
        return self.matrix @ v

    def rmatvec(self, w):
        return self.matrix.T @ w


def assemble_transfer(spec: SystemSpec, grid: Grid | int, interp: str = "multilinear") -> TransferMatrix:
    if not isinstance(grid, Grid):
        grid = Grid(spec.domain, grid)
    nodes = grid.nodes
    images = spec.images(nodes)
    weights = spec.branch_weights(nodes, images)
    blocks = []
    for t in range(spec.n):
        c = grid.interpolation_matrix(images[t], interp)
        blocks.append(sp.diags(weights[:, t]) @ c)
    mat = sum(blocks[1:], blocks[0]).tocsr()
    mat.sum_duplicates()
    return TransferMatrix(grid, mat, interp, spec.name)


def apriori_transfer(spec: SystemSpec, grid: Grid | int, interp: str = "multilinear") -> TransferMatrix:
    """``B_μ``: the transfer matrix of the same maps with ``J ≡ 1``."""
    return assemble_transfer(spec.apriori(), grid, interp)


def apply_transfer(B: TransferMatrix, f: DiscreteFunction) -> DiscreteFunction:
    B.grid.check_same(f.grid)
    return DiscreteFunction(B.grid, B.matrix @ f.values)


def apply_markov(B: TransferMatrix, m: DiscreteMeasure) -> DiscreteMeasure:
    B.grid.check_same(m.grid)
    return DiscreteMeasure(B.grid, B.matrix.T @ m.weights)


def duality_residual(B: TransferMatrix, f: DiscreteFunction, m: DiscreteMeasure) -> float:
    """``|∫ f d(L m) − ∫ B f dm|``; zero up to rounding since L is the transpose."""
    B.grid.check_same(f.grid)
    B.grid.check_same(m.grid)
    lhs = np.dot(f.values, B.matrix.T @ m.weights)
    rhs = np.dot(B.matrix @ f.values, m.weights)
    return float(abs(lhs - rhs))


def check_nondegenerate(B: TransferMatrix):
    rows = B.row_sums()
    if np.any(rows <= 0):
        raise DegenerateOperator(f"B(1) vanishes at node {int(np.argmin(rows))}")


def export_matrix(B: TransferMatrix, path, fmt: str = "csv"):
    """Write the dense matrix row-major.

    ``csv``: a ``# rows cols mode`` comment line, then one row per line.
    ``bin``: 8-byte magic ``IFSMMAT1``, little-endian uint32 rows and cols,
    then float64 little-endian entries.
    """
    path = Path(path)
    dense = B.dense()
    if fmt == "csv":
        with path.open("w") as fh:
            fh.write(f"# {dense.shape[0]} {dense.shape[1]} {B.mode}\n")
            np.savetxt(fh, dense, delimiter=",", fmt="%.17g")
    elif fmt == "bin":
        with path.open("wb") as fh:
            fh.write(_BIN_MAGIC + struct.pack("<II", *dense.shape))
            fh.write(dense.astype("<f8").tobytes(order="C"))
    else:
        raise ValueError(f"unknown export format {fmt!r}")


def read_matrix(path) -> np.ndarray:
    path = Path(path)
    raw = path.read_bytes()
    if raw.startswith(_BIN_MAGIC):
        rows, cols = struct.unpack("<II", raw[8:16])
        return np.frombuffer(raw[16:], dtype="<f8").reshape(rows, cols).copy()
    return np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
