"""
Some pytest fixture helper
"""
import pytest

from kerr_coupler import CircuitParams, FockConfig


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long running acceptance checks, deselect with -m \"not slow\"")


@pytest.fixture()
def simplified_params():
    """
    Fixture: device parameters fitted on the one excitation manifold
    """
    return CircuitParams.preset("one_excitation_fit")


@pytest.fixture()
def full_params():
    """
    Fixture: device parameters fitted with the full nonlinear model
    """
    return CircuitParams.preset("full_model_fit")


@pytest.fixture()
def small_fock():
    """
    Fixture: a small truncation, fast enough for unit tests
    """
    return FockConfig(n_a=6, n_b=6, n_s=4)


@pytest.fixture()
def detuned_params(full_params):
    """
    Fixture: transmon 2 tuned below transmon 1 top sweetspot, so that
    transmon 1 crosses it when its flux is swept
    """
    return full_params.replace(phi2=0.12, transmon_asymmetry=0.3)
