import numpy as np
import pytest

from src.solitonlab.core.exceptions import GridMismatchError
from src.solitonlab.fields import spectral
from src.solitonlab.fields.field import ComplexField, RealField
from src.solitonlab.fields.grid import SpatialGrid
from src.solitonlab.model.nonlinearity import HartreeKernel


def test_grid_rejects_bad_shapes():
    with pytest.raises(ValueError):
        SpatialGrid(3, 10.0, 64)
    with pytest.raises(ValueError):
        SpatialGrid(1, 10.0, 100)
    with pytest.raises(ValueError):
        SpatialGrid(1, -1.0, 64)


def test_spectral_derivative_of_gaussian(line_grid):
    x = line_grid.axis
    values = np.exp(-(x**2)).astype(complex)
    derivative = spectral.derivative_values(values, line_grid, axis=0)
    assert np.max(np.abs(derivative - (-2 * x * np.exp(-(x**2))))) < 1e-10


def test_shift_moves_peak(line_grid):
    x = line_grid.axis
    values = np.exp(-(x**2)).astype(complex)
    shifted = spectral.shift_values(values, line_grid, np.array([3.0]))
    assert np.max(np.abs(shifted - np.exp(-((x - 3.0) ** 2)))) < 1e-10


def test_symplectic_form_is_antisymmetric(line_grid):
    x = line_grid.axis
    u = np.exp(-(x**2)) * (1 + 0.5j * x)
    v = np.exp(-((x - 1) ** 2)) * (0.3 - 1j)
    forward = spectral.symplectic_values(u, v, line_grid)
    backward = spectral.symplectic_values(v, u, line_grid)
    assert forward == pytest.approx(-backward, abs=1e-14)
    assert spectral.symplectic_values(u, u, line_grid) == pytest.approx(0.0, abs=1e-14)


def test_gaussian_norms(line_grid):
    x = line_grid.axis
    field = ComplexField(line_grid, np.exp(-(x**2) / 2))
    norms = spectral.norms(field)
    assert norms.l2**2 == pytest.approx(np.sqrt(np.pi), rel=1e-12)


def test_fields_on_different_grids_do_not_mix(line_grid):
    other = SpatialGrid(1, 20.0, 256)
    with pytest.raises(GridMismatchError):
        ComplexField.zeros(line_grid) + ComplexField.zeros(other)


def test_pairings_of_soliton_and_its_gauge_rotation(line_grid, sech):
    eta = ComplexField(line_grid, sech(line_grid.axis))
    pairs = spectral.inner_products(eta, eta * 1j)
    assert pairs.real_inner == pytest.approx(0.0, abs=1e-12)
    assert pairs.symplectic == pytest.approx(-4.0, rel=1e-10)
    norms = spectral.norms(eta)
    assert norms.l2**2 == pytest.approx(4.0, rel=1e-10)
    assert norms.h1**2 == pytest.approx(16.0 / 3.0, rel=1e-10)


def test_convolution_with_delta_kernel_is_identity(line_grid):
    kernel = RealField(line_grid, HartreeKernel("delta").realize(line_grid))
    g = RealField(line_grid, np.exp(-(line_grid.axis**2)))
    assert np.max(np.abs(spectral.periodic_convolution(kernel, g).values - g.values)) < 1e-10


def test_gaussian_kernels_add_variances(line_grid):
    width = 0.5
    x = line_grid.axis
    kernel = RealField(line_grid, HartreeKernel("gaussian", width).realize(line_grid))
    g = RealField(line_grid, np.exp(-(x**2) / 2))
    spread = 1.0 + width**2
    expected = np.exp(-(x**2) / (2 * spread)) / np.sqrt(spread)
    assert np.max(np.abs(spectral.periodic_convolution(kernel, g).values - expected)) < 1e-10


@pytest.mark.parametrize("dimension, points", [(1, 1024), (2, 128)])
def test_parseval_between_physical_and_fourier_norms(dimension, points):
    grid = SpatialGrid(dimension, 10.0, points)
    rng = np.random.default_rng(7)
    values = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    physical = spectral.l2_squared(values, grid)
    fourier = float(np.sum(np.abs(spectral.forward(values)) ** 2)) * grid.cell_volume / grid.size
    assert fourier == pytest.approx(physical, rel=1e-12)
