import numpy as np
import pytest

from src.solitonlab.linearization.coercivity import coercivity, complement_basis
from src.solitonlab.linearization.operators import assemble_operators
from src.solitonlab.linearization.spectrum import even_sector_inverse_pairing, spectral_report
from src.solitonlab.linearization.symplectic import omega_matrix
from src.solitonlab.model.nonlinearity import (
    CompositeNonlinearity,
    HartreeKernel,
    HartreeNonlinearity,
    PowerNonlinearity,
)
from src.solitonlab.profile.family import tangent_frame
from src.solitonlab.profile.solver import solve_profile
from src.solitonlab.profile.types import SolitonParams


@pytest.fixture(scope="module")
def operators(cubic_profile, cubic):
    return assemble_operators(cubic_profile, cubic)


@pytest.fixture(scope="module")
def report(operators, cubic_profile):
    return spectral_report(operators, cubic_profile)


def test_operators_are_symmetric(operators):
    for operator in [*operators.radial.values(), *operators.full.values()]:
        assert operator.symmetry_residual() < 1e-10


def test_l1_has_one_negative_eigenvalue_at_minus_three(report):
    assert report.negative_counts["L1"] == 1
    assert report.lowest["L1"][0] == pytest.approx(-3.0, abs=1e-6)


def test_l2_is_non_negative_with_a_single_zero(report):
    assert report.negative_counts["L2"] == 0
    assert report.zero_counts["L2"] == 1
    assert abs(report.lowest["L2"][0]) < 1e-6


def test_null_space_condition_passes(report):
    assert report.passed
    assert report.findings == []
    assert all(value < 1e-6 for value in report.null_residuals.values())
    assert all(value < 1e-6 for value in report.algebra_residuals.values())


def test_inverse_pairing_equals_minus_mass_slope(operators, report):
    assert even_sector_inverse_pairing(operators) == pytest.approx(-1.0, rel=1e-5)
    assert report.mu_identity["residual"] < 1e-5


def test_symplectic_matrix_pattern(cubic_profile, line_grid):
    frame = tangent_frame(cubic_profile, SolitonParams.at_rest(1.0), line_grid)
    form = omega_matrix(frame)
    expected = np.array(
        [
            [0.0, -2.0, 0.0, 0.0],
            [2.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0, 0.0],
        ]
    )
    assert np.allclose(form.matrix, expected, atol=1e-7)
    assert form.mass == pytest.approx(2.0, rel=1e-8)
    assert form.mass_slope == pytest.approx(1.0, rel=1e-6)
    assert form.antisymmetry_residual() == 0.0
    assert form.inverse_residual() < 1e-10


def test_coercivity_constant_is_positive_and_below_frequency(operators, cubic_profile, report):
    frame = tangent_frame(cubic_profile, SolitonParams.at_rest(1.0), operators.grid)
    result = coercivity(operators, frame, cubic_profile)
    assert 0.0 < result.rho <= cubic_profile.mu
    report.attach_coercivity(result.rho, result.unconstrained)
    assert report.summary_row()["rho"] == result.rho


def test_coercivity_requires_rest_frame(operators, cubic_profile):
    frame = tangent_frame(cubic_profile, SolitonParams((1.0,), (0.0,), 0.0, 1.0), operators.grid)
    with pytest.raises(ValueError):
        coercivity(operators, frame, cubic_profile)


def test_complement_basis_is_orthonormal_and_orthogonal():
    constraint = np.array([1.0, 2.0, -0.5, 0.25])
    basis = complement_basis(constraint)
    assert basis.shape == (4, 3)
    assert np.allclose(basis.T @ basis, np.eye(3))
    assert np.allclose(constraint @ basis, 0.0)


def test_k_max_above_supported_sectors_is_rejected(cubic_profile, cubic):
    with pytest.raises(ValueError):
        assemble_operators(cubic_profile, cubic, k_max=99)


def test_coercivity_is_stable_under_refinement(cubic_profile, cubic):
    operators = assemble_operators(cubic_profile, cubic, dvr_points=1024)
    frame = tangent_frame(cubic_profile, SolitonParams.at_rest(1.0), operators.grid)
    coarse = coercivity(operators, frame, cubic_profile)
    fine = coercivity(assemble_operators(cubic_profile, cubic, dvr_points=2048), frame, cubic_profile)
    assert coarse.method == fine.method == "radial"
    assert coarse.rho == pytest.approx(fine.rho, rel=1e-2)


@pytest.mark.slow
def test_two_dimensional_radial_certificate(cubic, townes_profile):
    operators = assemble_operators(townes_profile, cubic, dvr_points=512)
    report = spectral_report(operators, townes_profile)
    assert report.domain == "radial"
    assert report.negative_counts == {"L1": 1, "L2": 0}
    assert report.zero_counts == {"L1": 2, "L2": 1}
    assert report.passed
    # Critical cubic: the mass does not change along the family.
    assert abs(report.mu_identity["m_prime"]) < 1e-4


@pytest.mark.slow
def test_two_dimensional_grid_certificate_and_coercivity():
    spec = CompositeNonlinearity(
        local=PowerNonlinearity(exponent=0.5, coupling=1.0),
        hartree=HartreeNonlinearity(kernel=HartreeKernel("gaussian", 1.0), coupling=0.05),
    )
    profile = solve_profile(spec, 1.0, 2, plane_points=256)
    operators = assemble_operators(profile, spec, plane_points=256)
    assert not operators.has_radial
    report = spectral_report(operators, profile)
    assert report.domain == "grid"
    assert report.negative_counts == {"L1": 1, "L2": 0}
    assert report.zero_counts == {"L1": 2, "L2": 1}
    frame = tangent_frame(profile, SolitonParams.at_rest(1.0, 2), operators.grid)
    result = coercivity(operators, frame, profile)
    assert result.method == "grid"
    assert 0.0 < result.rho <= profile.mu
