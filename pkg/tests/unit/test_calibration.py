"""
Unit tests for crosstalk calibration, sweetspots and circuit fits
"""
import numpy as np
import pytest

from kerr_coupler import (
    CalibrationError,
    CrosstalkMatrix,
    FitError,
    FockConfig,
    ParameterError,
    SpectrumPoint,
    build_mode_system,
    calibrate_crosstalk,
    eliminate_rigid_mode,
    extract_sweetspot,
    fit_circuit_params,
    forward_model,
    load_spectrum_csv,
)
from kerr_coupler.calibration import DEFAULT_FREE, SINGLE_EXCITATION_FOCK, transmon_arch
from ..utils.synthetic import crosstalk_matrix, spectrum_points, write_spectrum_csv

STEPS = [-0.1, 0.0, 0.1]


def _observations(truth):
    observations = []
    for dof in range(3):
        for foreign in range(3):
            if foreign != dof:
                observations += truth.observations(dof, foreign, STEPS)
    return observations


@pytest.mark.parametrize(
    "m, error",
    [
        (np.eye(2), ParameterError),
        (np.diag([1.0, -1.0, 1.0]), ParameterError),
        (np.ones((3, 3)), CalibrationError),
    ],
)
def test_crosstalk_matrix_invalid(m, error):
    """
    Test crosstalk matrix : should reject bad shapes, signs and singular
    matrices
    """
    with pytest.raises(error):
        CrosstalkMatrix(m=m, offsets=np.zeros(3))


def test_orthogonalize():
    """
    Test orthogonalization : applied values should produce the target
    effective fluxes
    """
    m, offsets = crosstalk_matrix()
    crosstalk = CrosstalkMatrix(m=m, offsets=offsets)
    target = [0.1, 0.2, 0.35]
    assert np.allclose(crosstalk.effective(crosstalk.orthogonalize(target)), target)
    assert np.allclose(crosstalk.inverse @ m, np.eye(3))


def test_calibrate_crosstalk():
    """
    Test crosstalk calibration : should recover the matrix and offsets from
    exact sweetspot observations
    """
    m, offsets = crosstalk_matrix()
    truth = CrosstalkMatrix(m=m, offsets=offsets, sweetspots=[0.0, 0.0, 0.5])
    calibration = calibrate_crosstalk(_observations(truth), sweetspots=[0.0, 0.0, 0.5])
    assert np.allclose(calibration.m, m, atol=1e-10)
    assert np.allclose(calibration.offsets, offsets, atol=1e-10)

    restored = CrosstalkMatrix.from_dict(calibration.to_dict())
    assert np.allclose(restored.m, calibration.m)
    assert np.allclose(restored.sweetspots, [0.0, 0.0, 0.5])


def test_calibrate_crosstalk_missing_channel():
    """
    Test crosstalk calibration : should name the channel never stepped
    """
    m, offsets = crosstalk_matrix()
    truth = CrosstalkMatrix(m=m, offsets=offsets)
    observations = [obs for obs in _observations(truth) if not (obs.dof == 0 and obs.applied[2] != 0)]
    with pytest.raises(CalibrationError) as e:
        calibrate_crosstalk(observations)
    assert "no variation of phi3 in the phi1 sweetspot data" in str(e.value)


def _closure_slopes(truth, calibration, dof):
    """
    Slopes of the sweetspot of ``dof`` against the foreign targets, with the
    channels driven through the calibrated orthogonalization
    """
    slopes = []
    for foreign in range(3):
        if foreign == dof:
            continue
        sweetspots = []
        for value in np.linspace(-0.2, 0.2, 5):
            target = np.zeros(3)
            target[foreign] = value
            low = truth.effective(calibration.orthogonalize(target))[dof]
            target[dof] = 1.0
            high = truth.effective(calibration.orthogonalize(target))[dof]
            sweetspots.append((truth.sweetspots[dof] - low) / (high - low))
        slopes.append(np.polyfit(np.linspace(-0.2, 0.2, 5), sweetspots, 1)[0])
    return slopes


def test_calibrate_crosstalk_closure():
    """
    Test crosstalk calibration : should recover a known matrix entrywise
    and leave no sweetspot drift once the channels are orthogonalized
    """
    m = np.array([[1.0, 0.05, -0.03], [0.08, 1.0, 0.02], [-0.06, 0.04, 1.0]])
    truth = CrosstalkMatrix(m=m, offsets=[0.01, -0.02, 0.005])
    calibration = calibrate_crosstalk(_observations(truth))
    assert np.allclose(calibration.m, m, rtol=0, atol=1e-6)
    assert np.allclose(calibration.offsets, truth.offsets, rtol=0, atol=1e-6)
    for dof in range(3):
        assert np.all(np.abs(_closure_slopes(truth, calibration, dof)) < 1e-6)


@pytest.mark.parametrize("seed", range(10))
def test_calibrate_strong_crosstalk(seed):
    """
    Test crosstalk calibration : random matrices with off-diagonals up to
    0.2 should be recovered entrywise
    """
    m, offsets = crosstalk_matrix(seed=seed, scale=0.2)
    assert np.max(np.abs(m - np.eye(3))) <= 0.2
    truth = CrosstalkMatrix(m=m, offsets=offsets, sweetspots=[0.0, 0.0, 0.5])
    calibration = calibrate_crosstalk(_observations(truth), sweetspots=[0.0, 0.0, 0.5])
    assert np.allclose(calibration.m, m, rtol=0, atol=1e-6)
    assert np.allclose(calibration.offsets, offsets, rtol=0, atol=1e-6)
    for dof in range(3):
        assert np.all(np.abs(_closure_slopes(truth, calibration, dof)) < 1e-6)


def test_extract_top_sweetspot():
    """
    Test sweetspot extraction : should find a shifted top sweetspot
    """
    flux = np.linspace(-0.2, 0.2, 21)
    fit = extract_sweetspot(flux, transmon_arch(flux, 23.0, 0.3, 0.02, 0.25), e_c=0.25)
    assert fit.kind == "top"
    assert fit.sweetspot == pytest.approx(0.02, abs=1e-4)
    assert fit.e_max == pytest.approx(23.0, rel=1e-3)
    assert fit.residual < 1e-6


def test_extract_bottom_sweetspot():
    """
    Test sweetspot extraction : should find a bottom sweetspot half a flux
    quantum away
    """
    flux = np.linspace(0.35, 0.65, 21)
    fit = extract_sweetspot(flux, transmon_arch(flux, 23.0, 0.3, 0.02, 0.25), e_c=0.25)
    assert fit.kind == "bottom"
    assert fit.sweetspot == pytest.approx(0.52, abs=1e-3)


@pytest.mark.parametrize(
    "flux, frequency",
    [
        (np.linspace(0, 0.1, 3), np.ones(3)),
        (np.linspace(0, 0.1, 10), np.ones(10)),
        (np.linspace(0, 0.1, 10), 5.0 + np.linspace(0, 0.1, 10)),
    ],
)
def test_extract_sweetspot_errors(flux, frequency):
    """
    Test sweetspot extraction : should refuse short, flat and monotone data
    """
    with pytest.raises(FitError):
        extract_sweetspot(flux, frequency, e_c=0.25)


def test_extract_sweetspot_device_charging_energy(full_params):
    """
    Test sweetspot extraction : the arch should be fitted with the charging
    energy of the device parameters
    """
    e_c = eliminate_rigid_mode(build_mode_system(full_params)).e_c
    flux = np.linspace(-0.2, 0.2, 21)
    frequency = transmon_arch(flux, 23.0, 0.3, 0.02, e_c)
    fit = extract_sweetspot(flux, frequency, params=full_params)
    assert fit.e_max == pytest.approx(23.0, rel=1e-3)
    assert fit.sweetspot == pytest.approx(0.02, abs=1e-4)
    assert fit.residual < 1e-6

    wrong = extract_sweetspot(flux, frequency, e_c=2 * e_c)
    assert wrong.e_max != pytest.approx(23.0, rel=0.05)

    with pytest.raises(ParameterError):
        extract_sweetspot(flux, frequency)
    with pytest.raises(ParameterError):
        extract_sweetspot(flux, frequency, e_c=0.0)


def test_spectrum_csv(simplified_params, tmp_path):
    """
    Test spectrum file : should read back written points and skip comments
    """
    points = spectrum_points(simplified_params, [0.0, 0.25], ("minus", "sloshing"))
    path = write_spectrum_csv(tmp_path / "spectrum.csv", points)
    assert load_spectrum_csv(path) == points


def test_spectrum_csv_errors(tmp_path):
    """
    Test spectrum file : should report missing columns and bad values
    """
    path = tmp_path / "bad.csv"
    path.write_text("flux_channel,flux_value,freq_ghz\nphi3,0.1,6.0\n")
    with pytest.raises(ParameterError) as e:
        load_spectrum_csv(path)
    assert "transition" in str(e.value)

    path.write_text("flux_channel,flux_value,transition,freq_ghz\nphi3,0.1,minus,abc\n")
    with pytest.raises(ParameterError) as e:
        load_spectrum_csv(path)
    assert "line" in str(e.value)


def test_forward_model(simplified_params):
    """
    Test forward model : frequencies per point, and errors on unknown
    models, channels and transitions
    """
    points = [SpectrumPoint("phi3", 0.0, "minus", 0.0), SpectrumPoint("phi3", 0.0, "plus", 0.0)]
    minus, plus = forward_model(simplified_params, points)
    assert 5.5 < minus < 8.0
    assert abs(plus - minus) < 1.0

    with pytest.raises(ParameterError):
        forward_model(simplified_params, points, model="exact")
    with pytest.raises(ParameterError):
        forward_model(simplified_params, [SpectrumPoint("phi4", 0.0, "minus", 0.0)])
    with pytest.raises(ParameterError):
        forward_model(simplified_params, [SpectrumPoint("phi3", 0.0, "11", 0.0)])


def test_fit_circuit_params(simplified_params):
    """
    Test circuit fit : should recover the coupler parameters from a
    perturbed start
    """
    data = spectrum_points(simplified_params, np.linspace(0, 0.5, 11), ("minus", "plus", "sloshing"))
    initial = simplified_params.replace(
        c_c=simplified_params.c_c * 1.1, ej_c_max=simplified_params.ej_c_max * 0.95
    )
    report = fit_circuit_params(data, initial, ("c_c", "ej_c_max"), restarts=1)
    assert report.converged
    assert report.params.c_c == pytest.approx(simplified_params.c_c, rel=1e-3)
    assert report.params.ej_c_max == pytest.approx(simplified_params.ej_c_max, rel=1e-3)
    assert report.residual_mhz < 1e-2
    assert report.covariance.shape == (2, 2)
    assert report.to_dict()["free"] == ["c_c", "ej_c_max"]


def test_fit_without_free_parameters(simplified_params):
    """
    Test circuit fit : without free parameters the residual of the initial
    parameters should be reported
    """
    data = spectrum_points(simplified_params, [0.0, 0.2])
    report = fit_circuit_params(data, simplified_params, ())
    assert report.iterations == 0
    assert report.params == simplified_params
    assert report.residual_mhz == pytest.approx(0.0, abs=1e-9)


def test_fit_errors(simplified_params):
    """
    Test circuit fit : should reject unknown parameters, empty data and no
    start
    """
    data = spectrum_points(simplified_params, [0.0])
    with pytest.raises(ParameterError):
        fit_circuit_params(data, simplified_params, ("phi3",))
    with pytest.raises(FitError):
        fit_circuit_params([], simplified_params)
    with pytest.raises(ParameterError):
        fit_circuit_params(data, simplified_params, restarts=0)


def test_forward_model_variants(simplified_params):
    """
    Test forward model : the quantum single excitation model should stay
    close to the classical normal modes and to the full model with a
    quadratic coupler
    """
    points = [SpectrumPoint("phi3", 0.1, name, 0.0) for name in ("minus", "plus", "sloshing")]
    simplified = forward_model(simplified_params, points)
    classical = forward_model(simplified_params, points, model="classical")
    full = forward_model(simplified_params, points, model="full", fock=SINGLE_EXCITATION_FOCK)
    assert np.allclose(simplified, full)
    assert np.allclose(simplified, classical, atol=0.4)
    assert simplified[0] < simplified[1]


def test_fit_full_model(full_params):
    """
    Test circuit fit : the full model should recover the coupler junction
    energy of full model data
    """
    fock = FockConfig(n_a=5, n_b=5, n_s=5)
    data = spectrum_points(full_params, [0.0, 0.1, 0.2], ("minus", "plus", "sloshing"), model="full", fock=fock)
    initial = full_params.replace(ej_c_max=full_params.ej_c_max * 0.95)
    report = fit_circuit_params(data, initial, ("ej_c_max",), model="full", fock=fock, restarts=1)
    assert report.params.ej_c_max == pytest.approx(7.75, abs=0.1)
    assert report.residual_mhz < 0.1


@pytest.mark.slow
@pytest.mark.parametrize("model", ["classical", "simplified"])
def test_fit_recovery_from_perturbed_starts(simplified_params, model):
    """
    Test circuit fit : every default free parameter should be recovered
    within 2% from starts perturbed by 20%, over 20 seeds
    """
    data = spectrum_points(
        simplified_params, np.linspace(0, 0.45, 7), ("minus", "plus", "sloshing"), model=model
    )
    for seed in range(20):
        rng = np.random.default_rng(seed)
        factors = 1 + 0.2 * rng.uniform(-1, 1, len(DEFAULT_FREE))
        initial = simplified_params.replace(
            **{name: getattr(simplified_params, name) * factor for name, factor in zip(DEFAULT_FREE, factors)}
        )
        report = fit_circuit_params(data, initial, model=model, seed=seed)
        assert report.residual_mhz < 0.1
        for name in DEFAULT_FREE:
            assert getattr(report.params, name) == pytest.approx(getattr(simplified_params, name), rel=0.02)
