"""
Calibration module: flux crosstalk calibration, sweetspot extraction and
the least squares fit of circuit parameters to measured spectra
"""
import csv
import dataclasses
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import least_squares

from .circuit import FLUX_AXES, CircuitParams, build_mode_system, build_node_matrices
from .exceptions import CalibrationError, FitError, KerrCouplerError, ParameterError
from .hamiltonian import FockConfig, build_full_hamiltonian, diagonalize, eliminate_rigid_mode
from .modes import ANTISYMMETRIC, SLOSHING, SYMMETRIC, solve_normal_modes

logger = logging.getLogger("kerr_coupler")

# -------------------- Flux crosstalk --------------------


class SweetspotObservation(NamedTuple):
    """
    Sweetspot of one flux channel (``dof``, 0 based) found at the applied
    value ``offset`` of that channel, with the other channels applied as in
    ``applied`` (the entry of ``dof`` itself is ignored).
    """

    dof: int
    offset: float
    applied: Tuple[float, float, float]


@dataclasses.dataclass(frozen=True, eq=False)
class CrosstalkMatrix:
    """
    Linear flux crosstalk: ``effective = m @ applied + offsets``. The
    sweetspot of channel ``i`` sits at ``effective[i] == sweetspots[i]``.
    """

    m: np.ndarray
    offsets: np.ndarray
    sweetspots: np.ndarray = dataclasses.field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        m = np.array(self.m, dtype=float)
        if m.shape != (3, 3):
            raise ParameterError(f"crosstalk matrix must be 3x3, got {m.shape}")
        if np.any(np.diag(m) <= 0):
            raise ParameterError("crosstalk matrix diagonal must be positive")
        if np.linalg.cond(m) > 1e12:
            raise CalibrationError("crosstalk matrix is singular")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "offsets", np.array(self.offsets, dtype=float).reshape(3))
        object.__setattr__(self, "sweetspots", np.array(self.sweetspots, dtype=float).reshape(3))

    @property
    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.m)

    def effective(self, applied: Sequence[float]) -> np.ndarray:
        return self.m @ np.asarray(applied, dtype=float) + self.offsets

    def orthogonalize(self, target: Sequence[float]) -> np.ndarray:
        """Applied values producing the ``target`` effective fluxes"""
        return np.linalg.solve(self.m, np.asarray(target, dtype=float) - self.offsets)

    def sweetspot_offset(self, dof: int, applied: Sequence[float]) -> float:
        """Applied value of channel ``dof`` putting it on its sweetspot"""
        applied = np.asarray(applied, dtype=float)
        others = sum(self.m[dof, j] * applied[j] for j in range(3) if j != dof)
        return float((self.sweetspots[dof] - self.offsets[dof] - others) / self.m[dof, dof])

    def observations(self, dof: int, foreign: int, values: Iterable[float]) -> List[SweetspotObservation]:
        """Sweetspot observations of ``dof`` while stepping one foreign channel"""
        result = []
        for value in values:
            applied = [0.0, 0.0, 0.0]
            applied[foreign] = float(value)
            applied[dof] = self.sweetspot_offset(dof, applied)
            result.append(SweetspotObservation(dof, applied[dof], tuple(applied)))
        return result

    def to_dict(self) -> Dict[str, Any]:
        return {
            "m": self.m.tolist(),
            "inverse": self.inverse.tolist(),
            "offsets": self.offsets.tolist(),
            "sweetspots": self.sweetspots.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "CrosstalkMatrix":
        return cls(
            m=data["m"], offsets=data.get("offsets", np.zeros(3)), sweetspots=data.get("sweetspots", np.zeros(3))
        )


def calibrate_crosstalk(
    observations: Iterable[SweetspotObservation], *, sweetspots: Optional[Sequence[float]] = None
) -> CrosstalkMatrix:
    """
    Regress, for every channel, its sweetspot offset against the two
    foreign applied fluxes. With unit diagonal, the slopes give the
    off-diagonal crosstalk entries and the intercepts the static offsets.

    :param observations: Sweetspot observations of the three channels
    :param sweetspots: Effective flux of each channel sweetspot, 0 by
        default (top sweetspots)
    """
    sweetspots = np.zeros(3) if sweetspots is None else np.asarray(sweetspots, dtype=float)
    observations = list(observations)
    m = np.eye(3)
    offsets = np.zeros(3)
    for dof in range(3):
        rows = [obs for obs in observations if obs.dof == dof]
        foreign = [j for j in range(3) if j != dof]
        applied = np.array([[obs.applied[j] for j in foreign] for obs in rows]).reshape(-1, 2)
        for column, j in enumerate(foreign):
            if len(np.unique(applied[:, column])) < 2:
                raise CalibrationError(
                    f"no variation of {FLUX_AXES[j]} in the {FLUX_AXES[dof]} sweetspot data"
                )
        design = np.column_stack([np.ones(len(rows)), applied])
        target = np.array([obs.offset for obs in rows])
        coefficients, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
        if rank < 3:
            raise CalibrationError(
                f"{FLUX_AXES[dof]} sweetspot data does not separate "
                f"{FLUX_AXES[foreign[0]]} from {FLUX_AXES[foreign[1]]}"
            )
        intercept, slopes = coefficients[0], coefficients[1:]
        for slope, j in zip(slopes, foreign):
            m[dof, j] = -slope
        offsets[dof] = sweetspots[dof] - intercept
    calibration = CrosstalkMatrix(m=m, offsets=offsets, sweetspots=sweetspots)
    logger.info("Crosstalk calibration:\n%s", np.array2string(m, precision=5))
    return calibration


# -------------------- Sweetspot --------------------


class SweetspotFit(NamedTuple):
    sweetspot: float  #: Flux of the fitted extremum
    phi_offset: float  #: Flux of the top sweetspot of the fitted arch
    kind: str  #: 'top' or 'bottom'
    e_max: float  #: Top sweetspot Josephson energy, GHz
    asymmetry: float  #: Bottom to top Josephson energy ratio
    residual: float  #: RMS error, GHz


def transmon_arch(phi: np.ndarray, e_max: float, asymmetry: float, phi_offset: float, e_c: float) -> np.ndarray:
    """Transmon frequency of a SQUID tuned transmon versus flux"""
    phase = np.pi * (np.asarray(phi, dtype=float) - phi_offset)
    e_j = np.sqrt((e_max * np.cos(phase)) ** 2 + (asymmetry * e_max * np.sin(phase)) ** 2)
    return np.sqrt(8 * e_c * e_j) - e_c


def extract_sweetspot(
    flux: Sequence[float],
    frequency: Sequence[float],
    *,
    e_c: Optional[float] = None,
    params: Optional[CircuitParams] = None,
) -> SweetspotFit:
    """
    Fit a transmon arch to frequency versus flux samples and return its
    extremum. The curvature of the data decides between a top and a bottom
    sweetspot.

    :param flux: Applied flux samples
    :param frequency: Measured frequencies, GHz
    :param e_c: Charging energy of the transmon, GHz
    :param params: Device parameters giving the charging energy when
        ``e_c`` is not set
    """
    if e_c is None:
        if params is None:
            raise ParameterError("a sweetspot fit needs the transmon charging energy or the device parameters")
        e_c = eliminate_rigid_mode(build_mode_system(params)).e_c
    if e_c <= 0:
        raise ParameterError(f"charging energy must be positive, got {e_c}")
    flux = np.asarray(flux, dtype=float)
    frequency = np.asarray(frequency, dtype=float)
    if len(flux) < 4 or flux.shape != frequency.shape:
        raise FitError("a sweetspot fit needs at least 4 matching samples")
    if np.ptp(frequency) < 1e-9:
        raise FitError("flat data has no sweetspot")
    c2, c1, _ = np.polyfit(flux, frequency, 2)
    if c2 == 0:
        raise FitError("no curvature in the data")
    vertex = -c1 / (2 * c2)
    if not flux.min() < vertex < flux.max():
        raise FitError("no extremum inside the sampled range")

    kind = "top" if c2 < 0 else "bottom"
    extremum = (frequency.max() if kind == "top" else frequency.min()) + e_c
    energy = extremum ** 2 / (8 * e_c)
    if kind == "top":
        start = [energy, 0.3, vertex]
    else:
        start = [energy / 0.5, 0.5, vertex - 0.5]

    result = least_squares(
        lambda x: transmon_arch(flux, x[0], x[1], x[2], e_c) - frequency,
        start,
        bounds=([1e-6, 0.0, -np.inf], [np.inf, 1.0, np.inf]),
        x_scale="jac",
        ftol=1e-15,
        xtol=1e-15,
        gtol=1e-15,
        max_nfev=5000,
    )
    e_max, asymmetry, phi_offset = result.x
    if kind == "top":
        sweetspot = phi_offset + np.round(vertex - phi_offset)
    else:
        sweetspot = phi_offset + 0.5 + np.round(vertex - phi_offset - 0.5)
    residual = float(np.sqrt(np.mean(result.fun ** 2)))
    logger.info("Sweetspot fit: %s sweetspot at %.6f, residual %.3g MHz", kind, sweetspot, residual * 1e3)
    return SweetspotFit(
        sweetspot=float(sweetspot),
        phi_offset=float(phi_offset),
        kind=kind,
        e_max=float(e_max),
        asymmetry=float(asymmetry),
        residual=residual,
    )


# -------------------- Circuit parameter fit --------------------

#: Parameters that may be fitted
FIT_PARAMETERS = ("ej1_max", "ej2_max", "ej_c_max", "ej_c_min", "c", "c1g", "c2g", "c_c")

#: Parameters fitted when no mask is given
DEFAULT_FREE = ("ej1_max", "ej_c_max", "ej_c_min", "c", "c1g", "c2g", "c_c")

#: Transitions known to each forward model
MODEL_TRANSITIONS = {
    "classical": ("minus", "plus", "sloshing"),
    "simplified": ("minus", "plus", "sloshing"),
    "full": ("minus", "plus", "sloshing", "11", "02", "20"),
}

#: Truncation of the single excitation model, quadratic in the coupler junction
SINGLE_EXCITATION_FOCK = FockConfig(n_a=4, n_b=4, n_s=5, coupler_order=2)

#: Header of a spectrum CSV file
SPECTRUM_HEADER = ("flux_channel", "flux_value", "transition", "freq_ghz")


class SpectrumPoint(NamedTuple):
    """One measured transition frequency"""

    flux_channel: str
    flux_value: float
    transition: str
    freq_ghz: float
    weight: float = 1.0


def load_spectrum_csv(path: Union[str, Path]) -> List[SpectrumPoint]:
    """Read spectrum points, with an optional ``weight`` column"""
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(row for row in handle if not row.startswith("#"))
        missing = set(SPECTRUM_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise ParameterError(f"{path}: missing column(s) {', '.join(sorted(missing))}")
        try:
            return [
                SpectrumPoint(
                    flux_channel=row["flux_channel"],
                    flux_value=float(row["flux_value"]),
                    transition=row["transition"],
                    freq_ghz=float(row["freq_ghz"]),
                    weight=float(row.get("weight") or 1.0),
                )
                for row in reader
            ]
        except ValueError as e:
            raise ParameterError(f"{path}: line {reader.line_num}: {e}") from e


def _check_points(points: Sequence[SpectrumPoint], model: str) -> None:
    if model not in MODEL_TRANSITIONS:
        raise ParameterError(f"unknown model {model!r}, expected one of {sorted(MODEL_TRANSITIONS)}")
    for point in points:
        if point.flux_channel not in FLUX_AXES:
            raise ParameterError(f"unknown flux channel {point.flux_channel!r}")
        if point.transition not in MODEL_TRANSITIONS[model]:
            raise ParameterError(f"transition {point.transition!r} is not part of the {model} model")


def _classical_transitions(params: CircuitParams) -> Dict[str, float]:
    system = eliminate_rigid_mode(build_mode_system(params))
    modes = solve_normal_modes(build_node_matrices(params))
    return {
        "minus": modes.frequency(ANTISYMMETRIC) - system.e_c,
        "plus": modes.frequency(SYMMETRIC) - system.e_c,
        "sloshing": modes.frequency(SLOSHING) - system.e_c_s,
    }


def _full_transitions(params: CircuitParams, fock: FockConfig, levels: int = 30) -> Dict[str, Optional[float]]:
    spectrum = diagonalize(
        build_full_hamiltonian(eliminate_rigid_mode(build_mode_system(params)), fock), min(levels, fock.dim)
    )
    try:
        sloshing = spectrum.transition((0, 0, 1))
    except KeyError:
        sloshing = None
    return {
        "minus": spectrum.omega_minus,
        "plus": spectrum.omega_plus,
        "sloshing": sloshing,
        "11": spectrum.omega_11,
        "02": spectrum.omega_02,
        "20": spectrum.omega_20,
    }


def forward_model(
    params: CircuitParams,
    points: Sequence[SpectrumPoint],
    *,
    model: str = "simplified",
    fock: Optional[FockConfig] = None,
) -> np.ndarray:
    """
    Model frequencies of the given spectrum points.

    The ``simplified`` model diagonalizes the circuit Hamiltonian with the
    coupler junction kept to quadratic order in a small truncation
    (:py:data:`SINGLE_EXCITATION_FOCK`), which describes the one excitation
    manifold and the sloshing fundamental without the higher order couplings
    to the sloshing mode. The ``classical`` model uses the normal modes
    lowered by the charging energy of each mode. The ``full`` model labels
    the spectrum of the full Hamiltonian truncated as ``fock``.
    """
    _check_points(points, model)
    fock = FockConfig() if fock is None else fock
    cache: Dict[Tuple[str, float], Mapping[str, Optional[float]]] = {}
    predicted = []
    for point in points:
        key = (point.flux_channel, point.flux_value)
        if key not in cache:
            biased = params.replace(**{point.flux_channel: point.flux_value})
            if model == "classical":
                cache[key] = _classical_transitions(biased)
            elif model == "simplified":
                cache[key] = _full_transitions(biased, SINGLE_EXCITATION_FOCK, levels=12)
            else:
                cache[key] = _full_transitions(biased, fock)
        value = cache[key][point.transition]
        if value is None:
            raise FitError(f"transition {point.transition} not identified at {key[0]}={key[1]}")
        predicted.append(value)
    return np.array(predicted)


@dataclasses.dataclass(frozen=True, eq=False)
class FitReport:
    """Outcome of :py:func:`fit_circuit_params`"""

    params: CircuitParams  #: Best parameters
    free: Tuple[str, ...]  #: Fitted parameter names
    residual_mhz: float  #: RMS frequency error
    residuals_mhz: np.ndarray  #: Per point model minus data
    covariance: np.ndarray  #: Local covariance of the free parameters
    iterations: int  #: Model evaluations spent by the optimizer
    converged: bool
    model: str

    def to_dict(self) -> Dict[str, Any]:
        return {
            "params": self.params.to_dict(),
            "free": list(self.free),
            "residual_mhz": self.residual_mhz,
            "residuals_mhz": self.residuals_mhz.tolist(),
            "covariance": [[None if not math.isfinite(x) else x for x in row] for row in self.covariance.tolist()],
            "iterations": self.iterations,
            "converged": self.converged,
            "model": self.model,
        }


#: RMS frequency error under which a fit is considered converged, GHz
FIT_TOLERANCE = 1e-6


def _rms(values: np.ndarray) -> float:
    return float(np.sqrt(np.mean(values ** 2))) if len(values) else 0.0


def fit_circuit_params(
    data: Sequence[SpectrumPoint],
    initial: CircuitParams,
    free: Sequence[str] = DEFAULT_FREE,
    *,
    model: str = "simplified",
    fock: Optional[FockConfig] = None,
    restarts: int = 5,
    seed: Optional[int] = 0,
    perturbation: float = 0.1,
    max_nfev: int = 200,
    tie_transmons: bool = True,
) -> FitReport:
    """
    Least squares fit of circuit parameters to transition frequencies,
    with multiple starts.

    :param data: Measured points
    :param initial: Starting parameters, also holding the fixed ones
    :param free: Names of the fitted parameters (see :py:data:`FIT_PARAMETERS`)
    :param model: ``'simplified'``, ``'classical'`` or ``'full'``, see
        :py:func:`forward_model`
    :param restarts: Number of starts, the first one from ``initial`` and
        the others randomly perturbed by ``perturbation`` (relative)
    :param tie_transmons: Keep ``ej2_max`` equal to ``ej1_max`` when only
        the latter is free
    """
    data = list(data)
    if not data:
        raise FitError("no spectrum data")
    _check_points(data, model)
    free = tuple(free)
    unknown = sorted(set(free) - set(FIT_PARAMETERS))
    if unknown:
        raise ParameterError(f"cannot fit {', '.join(unknown)}")
    if restarts < 1:
        raise ParameterError("at least one start is needed")
    measured = np.array([point.freq_ghz for point in data])
    weights = np.array([point.weight for point in data])
    base = np.array([getattr(initial, name) for name in free], dtype=float)
    tied = tie_transmons and "ej1_max" in free and "ej2_max" not in free

    def params_for(x: np.ndarray) -> CircuitParams:
        changes = dict(zip(free, (x * base).tolist()))
        if tied:
            changes["ej2_max"] = changes["ej1_max"]
        return initial.replace(**changes)

    def residuals(x: np.ndarray) -> np.ndarray:
        try:
            predicted = forward_model(params_for(x), data, model=model, fock=fock)
        except KerrCouplerError as e:
            logger.debug("Invalid trial parameters: %s", e)
            return np.full(len(data), 1e3)
        return weights * (predicted - measured)

    if not free:
        residual = residuals(np.zeros(0))
        return FitReport(
            params=initial,
            free=free,
            residual_mhz=_rms(residual) * 1e3,
            residuals_mhz=residual * 1e3,
            covariance=np.zeros((0, 0)),
            iterations=0,
            converged=True,
            model=model,
        )

    rng = np.random.default_rng(seed)
    best, evaluations, success = None, 0, False
    for attempt in range(restarts):
        start = np.ones(len(free))
        if attempt:
            start = np.clip(start + perturbation * rng.standard_normal(len(free)), 0.05, None)
        result = least_squares(
            residuals,
            start,
            bounds=(1e-3, np.inf),
            ftol=1e-12,
            xtol=1e-12,
            gtol=1e-12,
            max_nfev=max_nfev,
        )
        evaluations += result.nfev
        rms = _rms(result.fun)
        logger.info("Fit start %d/%d: RMS %.4g MHz after %d evaluations", attempt + 1, restarts, rms * 1e3, result.nfev)
        if best is None or rms < _rms(best.fun):
            best = result
        success = success or bool(result.success)
        if _rms(best.fun) < FIT_TOLERANCE:
            break

    m, n = best.jac.shape
    dof = m - n
    if dof > 0:
        variance = 2 * best.cost / dof
        covariance = variance * np.linalg.pinv(best.jac.T @ best.jac) * np.outer(base, base)
    else:
        covariance = np.full((n, n), math.nan)
    residual = best.fun / np.where(weights == 0, 1.0, weights)
    rms = _rms(best.fun)
    report = FitReport(
        params=params_for(best.x),
        free=free,
        residual_mhz=rms * 1e3,
        residuals_mhz=residual * 1e3,
        covariance=covariance,
        iterations=evaluations,
        converged=success or rms < FIT_TOLERANCE,
        model=model,
    )
    if not report.converged:
        logger.warning("Circuit fit did not converge, best RMS %.4g MHz", report.residual_mhz)
    return report
