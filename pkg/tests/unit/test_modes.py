"""
Unit tests for the classical normal modes
"""
import math

import numpy as np
import pytest
import scipy.linalg

from kerr_coupler import MatrixError, ParameterError, PreconditionError
from kerr_coupler.circuit import CHARGING_CONSTANT, NodeMatrices, build_node_matrices
from kerr_coupler.modes import (
    ANTISYMMETRIC,
    MODES_COLUMNS,
    RIGID,
    SLOSHING,
    SYMMETRIC,
    classical_splitting,
    classical_splitting_zero,
    filter_frequency,
    normal_modes,
    normal_modes_vs_inductance,
    solve_normal_modes,
)


@pytest.mark.parametrize("phi3", [0.0, 0.2, 0.35, 0.5])
def test_normal_modes_generalized_eigenproblem(simplified_params, phi3):
    """
    Test normal modes : frequencies should be those of the generalized
    eigenproblem and every mode vector should solve it
    """
    params = simplified_params.replace(phi3=phi3)
    matrices = build_node_matrices(params)
    modes = solve_normal_modes(matrices)

    eigenvalues = scipy.linalg.eigh(matrices.ind_inv, matrices.cap, eigvals_only=True)
    expected = np.sqrt(8 * CHARGING_CONSTANT * np.clip(eigenvalues, 0, None))
    assert np.allclose(np.sort(modes.frequencies), np.sort(expected), atol=1e-6)

    for k in range(4):
        value = modes.frequencies[k] ** 2 / (8 * CHARGING_CONSTANT)
        vector = modes.vectors[:, k]
        residual = matrices.ind_inv @ vector - value * matrices.cap @ vector
        assert np.linalg.norm(residual) < 1e-8 * np.linalg.norm(matrices.cap @ vector) * max(value, 1.0)


def test_normal_modes_labels(simplified_params):
    """
    Test normal modes : every label should be used once, the rigid mode
    should be at zero frequency and frequencies sorted
    """
    modes = normal_modes(simplified_params)
    assert sorted(modes.labels) == sorted((ANTISYMMETRIC, SYMMETRIC, SLOSHING, RIGID))
    assert modes.frequency(RIGID) == pytest.approx(0.0, abs=1e-9)
    assert np.all(np.diff(modes.frequencies) >= 0)
    assert set(modes.as_dict()) == set(modes.labels)
    with pytest.raises(KeyError):
        modes.index("breathing")


def test_normal_modes_sign_patterns(simplified_params):
    """
    Test normal modes : the antisymmetric mode should keep the coupler
    junction unbiased and the symmetric mode should be odd under the mirror
    """
    modes = normal_modes(simplified_params)
    antisymmetric = modes.vector(ANTISYMMETRIC)
    assert antisymmetric[1] == pytest.approx(antisymmetric[2])
    assert antisymmetric[0] == pytest.approx(antisymmetric[3])
    symmetric = modes.vector(SYMMETRIC)
    assert symmetric[0] == pytest.approx(-symmetric[3])
    assert symmetric[1] == pytest.approx(-symmetric[2])


def test_normal_modes_asymmetric_network(simplified_params):
    """
    Test normal modes : off resonance the generic solver should still find
    a zero frequency rigid mode
    """
    params = simplified_params.replace(phi2=0.1)
    modes = normal_modes(params)
    assert modes.frequency(RIGID) == pytest.approx(0.0, abs=1e-6)
    assert len(set(modes.labels)) == 4


def test_normal_modes_not_positive_definite():
    """
    Test normal modes : should reject a capacitance matrix that is not
    positive definite
    """
    matrices = NodeMatrices(cap=-np.eye(4), ind_inv=np.zeros((4, 4)))
    with pytest.raises(MatrixError):
        solve_normal_modes(matrices)


def test_to_row(simplified_params):
    """
    Test mode row : should follow the column order
    """
    modes = normal_modes(simplified_params)
    row = modes.to_row(0.25)
    assert len(row) == len(MODES_COLUMNS)
    assert row[0] == 0.25
    assert row[1] == modes.frequency(SYMMETRIC)
    assert row[2] == modes.frequency(ANTISYMMETRIC)
    assert row[4] == pytest.approx(0.0, abs=1e-9)


def test_sloshing_vanishes_without_inductive_coupling(simplified_params):
    """
    Test inductance sweep : the sloshing frequency should fall with the
    coupler inductance and vanish for an open junction
    """
    sweep = normal_modes_vs_inductance(simplified_params, [10.0, 100.0, 1000.0, math.inf])
    sloshing = [modes.frequency(SLOSHING) for modes in sweep]
    assert np.all(np.diff(sloshing) < 0)
    assert sloshing[-1] == pytest.approx(0.0, abs=1e-6)
    # The antisymmetric mode does not bias the coupler junction
    antisymmetric = [modes.frequency(ANTISYMMETRIC) for modes in sweep]
    assert np.allclose(antisymmetric, antisymmetric[0])


def test_filter_frequency(simplified_params):
    """
    Test filter frequency : should be the coupler junction plasma frequency
    and infinite without coupling capacitance
    """
    expected = math.sqrt(8 * CHARGING_CONSTANT * 7.33 / 18.0)
    assert filter_frequency(simplified_params) == pytest.approx(expected)
    assert filter_frequency(simplified_params.replace(c_c=0.0)) == math.inf


def test_classical_splitting(simplified_params):
    """
    Test classical splitting : should change sign along the coupler sweep
    """
    zero = classical_splitting_zero(simplified_params)
    assert 0.1 < zero < 0.45
    assert classical_splitting(simplified_params, zero) == pytest.approx(0.0, abs=1e-6)
    assert classical_splitting(simplified_params, 0.0) * classical_splitting(simplified_params, 0.5) < 0


def test_classical_splitting_preconditions(simplified_params):
    """
    Test classical splitting : should need resonant transmons and a sign
    changing bracket
    """
    with pytest.raises(PreconditionError):
        classical_splitting(simplified_params.replace(phi2=0.1))
    with pytest.raises(PreconditionError):
        classical_splitting_zero(simplified_params, bracket=(0.0, 0.05))
    with pytest.raises(ParameterError):
        classical_splitting_zero(simplified_params, bracket=(0.3, 0.1))
