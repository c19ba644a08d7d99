"""
Unit tests for the truncated Hamiltonian and its labelled spectrum
"""
import math
import time

import numpy as np
import pytest

from kerr_coupler import (
    ConfigurationError,
    FockConfig,
    ParameterError,
    PreconditionError,
    build_full_hamiltonian,
    build_mode_system,
    diagonalize,
    dipole_matrix_element,
    eliminate_rigid_mode,
    sloshing_levels,
)
from kerr_coupler.hamiltonian import SPECTRUM_COLUMNS, ModeOperators, annihilation


def _hamiltonian(params, fock):
    return build_full_hamiltonian(eliminate_rigid_mode(build_mode_system(params)), fock)


@pytest.mark.parametrize(
    "changes",
    [{"n_a": 2}, {"n_s": 4.0}, {"cosine_order": 3}, {"coupler_order": 10}, {"sloshing_floor": -1.0}],
)
def test_fock_config_invalid(changes):
    """
    Test truncation settings : should reject invalid values
    """
    with pytest.raises(ConfigurationError):
        FockConfig(**changes)


def test_fock_config_serialization(small_fock):
    """
    Test truncation settings : should round trip and reject unknown keys
    """
    assert small_fock.dims == (6, 6, 4)
    assert small_fock.dim == 144
    assert small_fock.effective_coupler_order == 4
    assert small_fock.replace(coupler_order=2).effective_coupler_order == 2
    assert FockConfig.from_dict(small_fock.to_dict()) == small_fock
    with pytest.raises(ConfigurationError):
        FockConfig.from_dict({"n_c": 4})


def test_mode_operators_commutator():
    """
    Test mode operators : phase and charge should be canonical away from
    the truncation edge
    """
    mode = ModeOperators(dim=8, e_c=0.25, e_l=24.0)
    assert mode.phase_scale * mode.charge_scale == pytest.approx(0.5)
    phase = mode.phase_powers(2)[1]
    charge = mode.charge()
    commutator = phase @ charge - charge @ phase
    assert np.allclose(commutator[:7, :7], np.eye(7))
    # N^2 = -P^2 in the untruncated block
    assert np.allclose(mode.charge_squared()[:7, :7], -(charge @ charge)[:7, :7])
    assert np.allclose(annihilation(3), [[0, 1, 0], [0, 0, np.sqrt(2)], [0, 0, 0]])


def test_build_needs_rigid_mode_elimination(full_params, small_fock):
    """
    Test Hamiltonian build : should refuse a system still holding the
    rigid mode
    """
    with pytest.raises(PreconditionError):
        build_full_hamiltonian(build_mode_system(full_params), small_fock)


def test_build_needs_sloshing_energy(full_params, small_fock):
    """
    Test Hamiltonian build : should refuse a coupler without inductive
    energy unless a sloshing floor is given
    """
    params = full_params.replace(ej_c_min=0.0, phi3=0.5)
    with pytest.raises(ConfigurationError):
        _hamiltonian(params, small_fock)
    hamiltonian = _hamiltonian(params, small_fock.replace(sloshing_floor=0.2))
    assert hamiltonian.dim == small_fock.dim


def test_hamiltonian_is_symmetric(full_params, small_fock):
    """
    Test Hamiltonian : should be real symmetric with the product dimension
    """
    hamiltonian = _hamiltonian(full_params, small_fock)
    matrix = hamiltonian.matrix.toarray()
    assert matrix.shape == (144, 144)
    assert np.allclose(matrix, matrix.T)
    assert [len(e) for e in hamiltonian.bare_energies] == [6, 6, 4]


@pytest.mark.parametrize("phi3", [0.0, 0.3])
def test_hamiltonian_exchange_symmetry(full_params, small_fock, phi3):
    """
    Test Hamiltonian : resonant transmons should make it invariant under
    the exchange of the transmons with the sloshing mode flipped
    """
    hamiltonian = _hamiltonian(full_params.replace(phi3=phi3), small_fock)
    exchange = hamiltonian.exchange_operator().toarray()
    matrix = hamiltonian.matrix.toarray()
    assert np.allclose(exchange @ exchange, np.eye(144))
    assert np.allclose(exchange @ matrix @ exchange.T, matrix, atol=1e-9)


def test_exchange_needs_equal_truncations(full_params):
    """
    Test exchange operator : should need equal transmon truncations
    """
    hamiltonian = _hamiltonian(full_params, FockConfig(n_a=5, n_b=4, n_s=3))
    with pytest.raises(ParameterError):
        hamiltonian.exchange_operator()


def test_diagonalize_labels(full_params, small_fock):
    """
    Test diagonalization : the ground state and the one excitation levels
    should be labelled and the dressed states found with their parity
    """
    hamiltonian = _hamiltonian(full_params, small_fock)
    spectrum = diagonalize(hamiltonian, 12)

    assert len(spectrum.energies) == 12
    assert np.all(np.diff(spectrum.energies) >= 0)
    assert spectrum.labels[0] == (0, 0, 0)
    assert len(set(spectrum.labels)) == 12
    assert spectrum.index_of("000") == 0
    assert spectrum.index_of("|100>") == spectrum.index_of((1, 0, 0))
    with pytest.raises(KeyError):
        spectrum.index_of((5, 5, 3))

    minus, plus = spectrum.index_of("-"), spectrum.index_of("+")
    assert minus != plus
    exchange = hamiltonian.exchange_operator()
    for index, parity in ((minus, 1.0), (plus, -1.0)):
        vector = spectrum.eigenvectors[:, index]
        assert vector @ (exchange @ vector) == pytest.approx(parity, abs=1e-6)

    assert 4.0 < spectrum.omega_minus < 8.0
    assert abs(spectrum.omega_plus - spectrum.omega_minus) < 1.0
    assert set(spectrum.one_excitation_pair()) == {minus, plus}


def test_diagonalize_rows(full_params, small_fock):
    """
    Test spectrum rows : one row per level in column order
    """
    spectrum = diagonalize(_hamiltonian(full_params, small_fock), 5)
    rows = spectrum.to_rows(0.1)
    assert len(rows) == 5
    assert all(len(row) == len(SPECTRUM_COLUMNS) for row in rows)
    assert rows[0][0] == 0.1
    assert rows[0][3] == "|000>"
    assert [level.energy for level in spectrum.levels] == pytest.approx(list(spectrum.energies))


def test_diagonalize_sparse_solver(full_params, small_fock):
    """
    Test diagonalization : the sparse solver should agree with the dense one
    """
    dense = diagonalize(_hamiltonian(full_params, small_fock), 6)
    sparse = diagonalize(_hamiltonian(full_params, small_fock.replace(dense_limit=10)), 6)
    assert np.allclose(dense.energies, sparse.energies, atol=1e-8)
    assert dense.labels == sparse.labels


def test_diagonalize_invalid_levels(full_params, small_fock):
    """
    Test diagonalization : should reject a level count out of range
    """
    hamiltonian = _hamiltonian(full_params, small_fock)
    with pytest.raises(ParameterError):
        diagonalize(hamiltonian, 0)
    with pytest.raises(ParameterError):
        diagonalize(hamiltonian, 145)


def test_exact_cosine_close_to_expansion(full_params, small_fock):
    """
    Test exact cosine : should stay close to the fourth order expansion for
    the low lying levels
    """
    expanded = diagonalize(_hamiltonian(full_params, small_fock), 8)
    exact = diagonalize(_hamiltonian(full_params, small_fock.replace(exact_cosine=True)), 8)
    assert exact.omega_minus == pytest.approx(expanded.omega_minus, abs=0.05)
    assert exact.omega_plus == pytest.approx(expanded.omega_plus, abs=0.05)


def test_sloshing_levels(full_params, small_fock):
    """
    Test sloshing levels : the first sloshing excitation should lie below
    the transmons at the coupler top sweetspot
    """
    spectrum = diagonalize(_hamiltonian(full_params, small_fock), 12)
    levels = sloshing_levels(spectrum)
    assert 1 in levels
    assert 0 < levels[1] < spectrum.omega_minus
    assert levels[1] == spectrum.transition((0, 0, 1))


def test_dipole_matrix_elements(full_params, small_fock):
    """
    Test dipole matrix elements : both transmons should drive the dressed
    states with the same strength
    """
    hamiltonian = _hamiltonian(full_params, small_fock)
    spectrum = diagonalize(hamiltonian, 8)
    for key in ("+", "-"):
        through_a = dipole_matrix_element(hamiltonian, spectrum, "000", key, "a")
        through_b = dipole_matrix_element(hamiltonian, spectrum, 0, key, "b")
        assert through_a == pytest.approx(through_b, rel=1e-6)
        assert through_a > 0.1
    with pytest.raises(ParameterError):
        dipole_matrix_element(hamiltonian, spectrum, 0, 1, "c")


def test_basis_change_between_oscillators():
    """
    Test basis change : should be the identity within one basis and give the
    Gaussian overlap of two ground states
    """
    mode = ModeOperators(dim=8, e_c=0.25, e_l=24.0)
    assert np.allclose(mode.basis_change(mode), np.eye(8), atol=1e-9)

    stiffer = ModeOperators(dim=6, e_c=0.25, e_l=30.0)
    change = stiffer.basis_change(mode)
    assert change.shape == (8, 6)
    lengths = mode.phase_scale, stiffer.phase_scale
    expected = math.sqrt(2 * lengths[0] * lengths[1] / (lengths[0] ** 2 + lengths[1] ** 2))
    assert change[0, 0] == pytest.approx(expected, rel=1e-9)
    # Parity is kept by a change of scale
    assert change[1, 0] == pytest.approx(0.0, abs=1e-12)


def test_vectors_in_own_bases(full_params, small_fock):
    """
    Test spectrum : expressing the eigenvectors in their own oscillator
    bases should leave them unchanged
    """
    spectrum = diagonalize(_hamiltonian(full_params, small_fock), 6)
    assert len(spectrum.modes) == 3
    assert np.allclose(spectrum.vectors_in(spectrum.modes), spectrum.eigenvectors, atol=1e-8)


def test_decoupled_harmonic_limit(detuned_params):
    """
    Test Hamiltonian : without coupling capacitance nor coupler junction and
    with harmonic cosines, every level should be a bare product state
    """
    system = eliminate_rigid_mode(build_mode_system(detuned_params))
    decoupled = system.replace(kappa=0.0, c_tilde_abs=math.inf, ej_c=0.0)
    fock = FockConfig(n_a=4, n_b=4, n_s=3, cosine_order=2, sloshing_floor=0.5)
    hamiltonian = build_full_hamiltonian(decoupled, fock)
    spectrum = diagonalize(hamiltonian, fock.dim)

    assert spectrum.transition((1, 0, 0)) == pytest.approx(
        math.sqrt(8 * decoupled.ej1_bare * decoupled.e_c), rel=1e-6
    )
    assert spectrum.transition((0, 1, 0)) == pytest.approx(
        math.sqrt(8 * decoupled.ej2_bare * decoupled.e_c), rel=1e-6
    )
    assert np.allclose(spectrum.overlaps, 1.0, atol=1e-9)
    assert dipole_matrix_element(hamiltonian, spectrum, "000", (1, 1, 0), "a") == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("phi3", [0.0, 0.25])
def test_ground_state_and_selection_rules(full_params, small_fock, phi3):
    """
    Test diagonalization : the ground state should stay close to the bare
    vacuum and the doubly excited level should be dark from the ground state
    """
    hamiltonian = _hamiltonian(full_params.replace(phi3=phi3), small_fock)
    spectrum = diagonalize(hamiltonian, 30)
    assert spectrum.labels[0] == (0, 0, 0)
    # Counter rotating admixture of sloshing excitations
    assert spectrum.overlaps[0] > 0.95
    for mode in ("a", "b"):
        assert dipole_matrix_element(hamiltonian, spectrum, "000", (1, 1, 0), mode) < 0.05


def test_resonant_transmon_frequencies(full_params, small_fock):
    """
    Test diagonalization : the one excitation levels of the full model fit
    should lie around 6.6 GHz at the coupler top sweetspot
    """
    spectrum = diagonalize(_hamiltonian(full_params, small_fock), 12)
    assert spectrum.omega_minus == pytest.approx(6.6, abs=0.3)
    assert spectrum.omega_plus == pytest.approx(6.6, abs=0.3)


def test_sloshing_fundamental(simplified_params):
    """
    Test sloshing levels : the sloshing fundamental of the one excitation
    fit should sit near 3.2 GHz at the coupler top sweetspot
    """
    spectrum = diagonalize(_hamiltonian(simplified_params, FockConfig(n_a=8, n_b=8, n_s=8)), 12)
    assert sloshing_levels(spectrum)[1] == pytest.approx(3.2, abs=0.3)


@pytest.mark.slow
def test_truncation_convergence(full_params):
    """
    Test truncation : the lowest levels should move by less than 1 MHz from
    10 to 15 levels per mode, and the largest truncation should be solved in
    a few minutes
    """
    coarse = diagonalize(_hamiltonian(full_params, FockConfig(n_a=10, n_b=10, n_s=10)), 6)
    start = time.perf_counter()
    fine = diagonalize(_hamiltonian(full_params, FockConfig()), 6)
    assert time.perf_counter() - start < 300
    assert np.max(np.abs(fine.energies - coarse.energies)) < 1e-3
    assert fine.converged
