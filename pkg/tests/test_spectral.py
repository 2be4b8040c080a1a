import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import LOG_RHO_E2, RHO_E2, fixture_systems
from ifsm import chaos, systems
from ifsm.errors import NoConvergence, NonPositiveEigenfunction
from ifsm.grid import DiscreteFunction, DomainBox, Grid
from ifsm.model import AffineMap, ConstantDensity, ParameterSet, SystemSpec, validate_system
from ifsm.operators import assemble_transfer
from ifsm.spectral import (
    SpectralResult,
    eigenmeasure,
    normalize_system,
    power_iteration,
    spectral_radius_gelfand,
    uniqueness_check,
)


def test_normalized_system_has_unit_radius():
    B = assemble_transfer(systems.market(), 17)
    s = power_iteration(B)
    assert s.rho == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_allclose(s.eigenfunction.values, 1.0, atol=1e-14)
    for step in spectral_radius_gelfand(B, 20):
        assert abs(step.estimate) < 1e-14 and abs(step.spread) < 1e-14


def test_constant_weight_gelfand_is_exact():
    B = assemble_transfer(systems.constant_weight(0.7), 61)
    for step in spectral_radius_gelfand(B, 50):
        assert step.estimate == pytest.approx(math.log(0.7), rel=1e-13)


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_exp_potential_eigendata(beta):
    grid = Grid(systems.e2(beta).domain, 2048)
    s = power_iteration(assemble_transfer(systems.e2(beta), grid))
    assert s.rho == pytest.approx(RHO_E2[beta], rel=2e-7)
    x = grid.axes[0]
    h = np.exp(beta * (x - 1.0))
    assert np.max(np.abs(s.eigenfunction.values - h)) < 1e-3
    assert s.eigenfunction.values.max() == 1.0
    assert s.residual <= 1e-12 * s.rho


def test_gelfand_rate_and_agreement():
    B = assemble_transfer(systems.e2(1.0), 1024)
    steps = spectral_radius_gelfand(B, 200)
    s = power_iteration(B)
    scaled = [st.N * st.spread for st in steps[9:]]
    assert max(scaled) <= 1.0 + 1e-6          # ln(max h / min h) = beta
    spreads = [st.spread for st in steps]
    assert all(b <= a + 1e-15 for a, b in zip(spreads, spreads[1:]))
    assert abs(steps[-1].estimate - s.log_rho) <= steps[-1].spread + 1e-12
    assert abs(steps[-1].estimate - LOG_RHO_E2[1.0]) < 1e-2


def test_gelfand_survives_huge_radius():
    B = assemble_transfer(systems.constant_weight(1e30), 11)
    steps = spectral_radius_gelfand(B, 400)
    assert steps[-1].estimate == pytest.approx(math.log(1e30), rel=1e-12)


def test_peripheral_spectrum_raises():
    box = DomainBox((0.0,), (1.0,))
    flip = SystemSpec(box, ParameterSet.uniform(("r",)), (AffineMap([[-1.0]], [1.0]),),
                      density=ConstantDensity([1.0]))
    B = assemble_transfer(flip, 9)
    with pytest.raises(NoConvergence) as info:
        power_iteration(B, max_iter=200, start=np.linspace(1, 2, 9))
    assert info.value.residual > 0


def test_lebesgue_is_the_invariant_measure():
    B = assemble_transfer(systems.e1(), 257)
    e = eigenmeasure(B)
    assert e.rho_star == pytest.approx(1.0, abs=1e-13)
    assert e.measure.integrate(B.grid.axes[0]) == pytest.approx(0.5, abs=1e-12)


def test_market_eigenmeasure():
    s = systems.market()
    errs = []
    for m in (33, 65, 129):
        B = assemble_transfer(s, m)
        e = eigenmeasure(B)
        assert e.rho_star == pytest.approx(1.0, abs=1e-13)
        mean = B.grid.nodes.T @ e.measure.weights
        np.testing.assert_allclose(mean, [0.46, 0.44], atol=1e-12)
        cells = chaos.measure_cell_masses(e.measure, 2)
        oracle = chaos.product_cell_masses(systems.MARKET_FREQUENCIES, chaos.dyadic_codes(s), 2, 2)
        assert oracle[0, 0] == pytest.approx(0.1521, abs=1e-15)
        errs.append(np.max(np.abs(cells - oracle)))
    assert errs[-1] < 5e-3 and errs[0] > errs[1] > errs[2]


@pytest.mark.parametrize("spec,m", fixture_systems(), ids=lambda v: getattr(v, "name", str(v)))
def test_eigenmeasure_bounds(spec, m):
    B = assemble_transfer(spec, m)
    r = validate_system(spec, B.grid)
    e = eigenmeasure(B)
    s = power_iteration(B)
    assert r.inf_q - 1e-12 <= e.rho_star <= r.sup_q + 1e-12
    assert e.rho_star <= s.rho + 1e-6
    assert e.measure.is_probability


def test_uniqueness_check_reports_agreement():
    B = assemble_transfer(systems.e2(1.0), 200)
    rng = np.random.default_rng(0)
    out = uniqueness_check(B, [np.ones(200), rng.uniform(0.1, 1, 200), np.linspace(2, 1, 200)])
    assert out["unique"] and out["rho_gap"] < 1e-10


def test_normalization_of_exp_potential():
    spec = systems.e2(1.0)
    grid = Grid(spec.domain, 2048)
    s = power_iteration(assemble_transfer(spec, grid))
    normed = normalize_system(spec, s, grid)
    assert validate_system(normed, grid, normalized_tol=1e-8).normalized
    x = grid.nodes
    closed = np.stack([np.exp(2 * spec.maps[t](x)[:, 0]) for t in range(2)], axis=1) / (RHO_E2[1.0] * np.exp(x))
    np.testing.assert_allclose(normed.density_at(x), closed, rtol=1e-6)
    # a second normalisation is the identity
    s2 = power_iteration(assemble_transfer(normed, grid))
    twice = normalize_system(normed, s2, grid)
    np.testing.assert_allclose(twice.density_at(x), normed.density_at(x), rtol=1e-8)


def test_normalizing_a_normalized_system_is_identity():
    spec = systems.e1()
    grid = Grid(spec.domain, 65)
    s = power_iteration(assemble_transfer(spec, grid))
    normed = normalize_system(spec, s, grid)
    np.testing.assert_array_equal(normed.density_at(grid.nodes), spec.density_at(grid.nodes))
    assert normed.constant_density is not None


def test_nonpositive_eigenfunction_rejected():
    grid = Grid(systems.e1().domain, 5)
    bad = SpectralResult(1.0, 0.0, DiscreteFunction(grid, [1, 1, 0, 1, 1]), 1, 0.0)
    with pytest.raises(NonPositiveEigenfunction):
        normalize_system(systems.e1(), bad, grid)


@given(st.floats(min_value=-3, max_value=3))
def test_power_and_gelfand_agree(beta):
    B = assemble_transfer(systems.e2(beta), 128)
    s = power_iteration(B)
    last = spectral_radius_gelfand(B, 60)[-1]
    assert abs(last.estimate - s.log_rho) <= last.spread + 1e-10
    assert np.min(s.eigenfunction.values) > 0
