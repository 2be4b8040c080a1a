import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import fixture_systems
from ifsm import systems
from ifsm.errors import DegenerateOperator, GridMismatch
from ifsm.grid import DiscreteFunction, DiscreteMeasure, DomainBox, Grid
from ifsm.model import AffineMap, ExprDensity, ParameterSet, SystemSpec
from ifsm.operators import (
    apply_markov,
    apply_transfer,
    assemble_transfer,
    check_nondegenerate,
    duality_residual,
    export_matrix,
    read_matrix,
)


@pytest.mark.parametrize("spec,m", fixture_systems(), ids=lambda v: getattr(v, "name", str(v)))
def test_rows_reproduce_q_mass(spec, m):
    B = assemble_transfer(spec, m)
    assert B.matrix.data.min() >= 0
    np.testing.assert_allclose(B.row_sums(), spec.q_mass(B.grid.nodes), rtol=1e-10, atol=0)


def test_exp_potential_row_at_zero():
    B = assemble_transfer(systems.e2(1.0), 5)
    assert B.row_sums()[0] == pytest.approx((1 + math.exp(0.5)) / 2, rel=1e-14)


def test_constant_weight_rows():
    B = assemble_transfer(systems.constant_weight(0.7), 31)
    np.testing.assert_allclose(B @ np.ones(31), 0.7, rtol=1e-15)


def test_halving_maps_are_exact_on_linear_functions():
    grid = Grid(systems.e1().domain, 65)
    B = assemble_transfer(systems.e1(), grid)
    f = grid.function(lambda p: p[:, 0])
    x = grid.axes[0]
    np.testing.assert_allclose(apply_transfer(B, f).values, x / 2 + 0.25, atol=1e-15)
    assert np.all(apply_transfer(B, grid.constant(0.0)).values == 0)


def test_refinement_error_is_quadratic():
    # quadratic f: the interpolation error of f(τx) is at most h²/8 times |f''|
    errs = []
    for m in (17, 33, 65, 129):
        grid = Grid(systems.e1().domain, m)
        B = assemble_transfer(systems.e1(), grid)
        f = grid.function(lambda p: p[:, 0] ** 2)
        x = grid.axes[0]
        exact = 0.5 * (x / 2) ** 2 + 0.5 * (x / 2 + 0.5) ** 2
        errs.append(np.max(np.abs(apply_transfer(B, f).values - exact)))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(ratios > 3.5)


def test_markov_mass():
    grid = Grid(systems.market().domain, 17)
    m = grid.random_measure(np.random.default_rng(1))
    assert apply_markov(assemble_transfer(systems.market(), grid), m).mass == pytest.approx(1.0, abs=1e-14)
    B = assemble_transfer(systems.constant_weight(0.7), 31)
    m = Grid(B.grid.domain, 31).random_measure(np.random.default_rng(2))
    assert apply_markov(B, m).mass == pytest.approx(0.7, rel=1e-14)


def test_point_mass_pairs_with_row():
    B = assemble_transfer(systems.e2(1.0), 33)
    f = B.grid.random_smooth(np.random.default_rng(5))
    for i in (0, 7, 32):
        lhs = apply_markov(B, B.grid.point_mass(i)).integrate(f)
        assert lhs == pytest.approx((B @ f.values)[i], rel=1e-14)


def test_duality_on_small_halving_grid(rng):
    B = assemble_transfer(systems.e1(), 64)
    for _ in range(20):
        f = DiscreteFunction(B.grid, rng.normal(size=64))
        m = B.grid.random_measure(rng)
        assert duality_residual(B, f, m) < 1e-13
    one = B.grid.constant()
    m = B.grid.random_measure(rng)
    assert abs(apply_markov(B, m).mass - m.integrate(B.row_sums())) < 1e-14
    assert duality_residual(B, one, m) < 1e-14


@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_positivity_and_monotonicity(seed):
    rng = np.random.default_rng(seed)
    B = assemble_transfer(systems.e2(rng.uniform(-2, 2)), 40)
    f = np.abs(rng.normal(size=40))
    g = f + np.abs(rng.normal(size=40))
    assert np.all(B @ f >= 0)
    assert np.all(B @ g >= B @ f)


def test_grid_mismatch():
    B = assemble_transfer(systems.e1(), 16)
    with pytest.raises(GridMismatch):
        apply_transfer(B, Grid(B.grid.domain, 17).constant())
    with pytest.raises(GridMismatch):
        apply_markov(B, Grid(B.grid.domain, 17).uniform_measure())
    with pytest.raises(GridMismatch):
        DiscreteMeasure(B.grid, np.ones(3))


def test_nearest_mode_keeps_row_sums():
    B = assemble_transfer(systems.e2(1.0), 33, interp="nearest")
    assert B.matrix.getnnz(axis=1).max() == 2
    np.testing.assert_allclose(B.row_sums(), systems.e2(1.0).q_mass(B.grid.nodes), rtol=1e-14)


def test_degenerate_operator():
    box = DomainBox((0.0,), (1.0,))
    spec = SystemSpec(box, ParameterSet.uniform(("a",)), (AffineMap([[0.5]], [0.0]),),
                      density=ExprDensity(["x"]))
    with pytest.raises(DegenerateOperator):
        check_nondegenerate(assemble_transfer(spec, 5))


@pytest.mark.parametrize("fmt", ["csv", "bin"])
def test_export_round_trip(tmp_path, fmt):
    B = assemble_transfer(systems.market(), 5)
    path = tmp_path / f"B.{fmt}"
    export_matrix(B, path, fmt)
    np.testing.assert_array_equal(read_matrix(path), B.dense())
    if fmt == "bin":
        raw = path.read_bytes()
        assert raw[:8] == b"IFSMMAT1" and len(raw) == 16 + 8 * 25 * 25
    else:
        assert path.read_text().splitlines()[0] == "# 25 25 multilinear"
