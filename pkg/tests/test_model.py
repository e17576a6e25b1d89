import numpy as np
import pytest

from src.solitonlab.fields import spectral
from src.solitonlab.fields.field import ComplexField
from src.solitonlab.fields.grid import SpatialGrid
from src.solitonlab.model import functionals as fn
from src.solitonlab.model.conditions import verify_conditions
from src.solitonlab.model.nonlinearity import (
    HartreeKernel,
    HartreeNonlinearity,
    PowerNonlinearity,
    apply_nonlinearity,
    cubic_quintic,
    saturable,
)
from src.solitonlab.model.potential import PotentialSpec


def test_cubic_line_passes_every_condition(cubic):
    report = verify_conditions(cubic, 1)
    assert report.passed
    assert report.status("stability") == "pass"
    assert report.status("kernel") == "not_applicable"
    assert report.status("null_space") == "deferred"


def test_supercritical_power_fails_stability():
    report = verify_conditions(PowerNonlinearity(exponent=3.0), 1)
    assert report.status("stability") == "fail"
    assert "stability" in [check.name for check in report.failures()]


def test_cubic_is_critical_in_the_plane(cubic):
    assert verify_conditions(cubic, 2).status("stability") == "fail"


def test_saturable_defers_stability_to_mass_curve():
    report = verify_conditions(saturable(1.0, 0.1), 1)
    assert report.status("stability") == "deferred"
    assert report.status("monotone_response") == "pass"


def test_conditions_reject_three_dimensions(cubic):
    with pytest.raises(ValueError):
        verify_conditions(cubic, 3)


def test_nonlinearity_constructors_validate():
    with pytest.raises(ValueError):
        PowerNonlinearity(exponent=0.0)
    with pytest.raises(ValueError):
        saturable(coupling=-1.0)
    with pytest.raises(ValueError):
        cubic_quintic(cubic=0.0, quintic=0.0)


def test_cosine_from_eps_realizes_gradient_bound():
    potential = PotentialSpec.from_eps("cosine", 0.05, 0.1, 1, mu0=1.0)
    assert potential.eps_v == pytest.approx(0.05)
    assert potential.rate[0] == pytest.approx(0.5)
    assert potential.sup_gradient() == pytest.approx(0.05)


def test_potential_rejects_inconsistent_eps():
    with pytest.raises(ValueError):
        PotentialSpec("cosine", 1, 0.1, (0.5,), 1.0, 0.2)


def test_potential_remainder_is_second_order():
    potential = PotentialSpec.cosine(0.1, 0.5, 1)
    grid = SpatialGrid(1, 40.0, 2048)
    remainder = potential.remainder_values(grid, [1.3])
    near = np.abs(grid.axis) < 0.1
    assert np.max(np.abs(remainder[near])) < 0.1 * 0.25 * 0.01
    assert remainder[np.argmin(np.abs(grid.axis))] == pytest.approx(0.0, abs=1e-12)


def test_gaussian_well_hessian_at_center():
    potential = PotentialSpec.gaussian_well(0.2, 0.3, 2)
    hessian = potential.hessian_at([0.0, 0.0])
    assert np.allclose(hessian, 0.2 * 0.09 * np.eye(2))


def test_mass_and_momentum_of_boosted_gaussian(line_grid):
    x = line_grid.axis
    values = np.exp(-(x**2) / 2) * np.exp(0.5j * 0.8 * x)
    mass = fn.mass_of(values, line_grid)
    momentum = fn.momentum_of(values, line_grid)
    assert mass == pytest.approx(0.5 * np.sqrt(np.pi), rel=1e-10)
    assert momentum[0] / mass == pytest.approx(0.8, rel=1e-8)


def test_nonlinearity_is_gauge_covariant(cubic, line_grid, sech):
    psi = ComplexField(line_grid, sech(line_grid.axis) * (1.0 + 0.3j))
    rotated = apply_nonlinearity(cubic, psi * np.exp(0.7j))
    assert np.allclose(rotated.values, apply_nonlinearity(cubic, psi).values * np.exp(0.7j), atol=1e-13)
    eta = sech(line_grid.axis)
    assert np.allclose(apply_nonlinearity(cubic, ComplexField(line_grid, eta)).values, eta**3, atol=1e-13)


def test_contact_hartree_matches_cubic(cubic, line_grid):
    x = line_grid.axis
    values = np.exp(-(x**2)) * (1.0 + 0.2j * x)
    contact = HartreeNonlinearity(kernel=HartreeKernel("delta"), coupling=1.0)
    assert np.max(np.abs(contact.apply(values, line_grid) - cubic.apply(values, line_grid))) < 1e-10
    density = fn.density_of(values)
    assert contact.energy_density_integral(density, line_grid) == pytest.approx(
        cubic.energy_density_integral(density, line_grid), rel=1e-10
    )


def test_hartree_energy_is_a_potential_for_the_force(line_grid):
    x = line_grid.axis
    spec = HartreeNonlinearity(kernel=HartreeKernel("gaussian", 0.8), coupling=0.7)
    psi = np.exp(-(x**2) / 2) * (1.0 + 0.4j)
    direction = np.exp(-((x - 0.5) ** 2)) * (0.3 - 0.6j)
    step = 1e-4

    def energy(values):
        return spec.energy_density_integral(fn.density_of(values), line_grid)

    slope = (energy(psi + step * direction) - energy(psi - step * direction)) / (2 * step)
    force = spectral.real_inner_values(spec.apply(psi, line_grid), direction, line_grid)
    assert slope == pytest.approx(force, rel=1e-6)


def test_nonlinear_remainders_have_the_right_orders(cubic, line_grid, sech):
    x = line_grid.axis
    eta = ComplexField(line_grid, sech(x))
    shape = np.exp(-(x**2)) * (1.0 + 0.5j)
    large = fn.nonlinear_remainders(cubic, eta, ComplexField(line_grid, 0.01 * shape))
    small = fn.nonlinear_remainders(cubic, eta, ComplexField(line_grid, 0.005 * shape))
    assert np.max(np.abs(large.N2.values)) / np.max(np.abs(small.N2.values)) == pytest.approx(4.0, rel=0.05)
    assert large.R3 / small.R3 == pytest.approx(8.0, rel=0.05)
    assert large.R2 > 0


def test_nonlinear_remainders_need_a_real_base(cubic, line_grid, sech):
    eta = ComplexField(line_grid, sech(line_grid.axis) * 1j)
    with pytest.raises(ValueError):
        fn.nonlinear_remainders(cubic, eta, ComplexField.zeros(line_grid))
