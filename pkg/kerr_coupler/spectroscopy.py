"""
Spectroscopy module: flux sweep spectra, avoided crossing fits and the
cross-Kerr observable of the resonant transmons
"""
import asyncio
import dataclasses
import logging
import math
from typing import Any, Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq, least_squares

from .circuit import CircuitParams, squid_energy
from .core import SweepPoint
from .effective import couplings_for
from .exceptions import ConfigurationError, FitError, ParameterError, PreconditionError
from .hamiltonian import FockConfig, LabeledSpectrum, LevelKey
from .mixins import Retune, RetuneMixin, TrackLabelsMixin
from .sweeps import SpectrumSweep

logger = logging.getLogger("kerr_coupler")

#: Hopping below which the cross-Kerr ratio is not evaluated, GHz
MIN_HOPPING = 1e-3

#: Columns of a cross-Kerr table
KERR_COLUMNS = ("phi3", "j_mhz", "ratio", "omega_plus_ghz", "omega_minus_ghz", "omega_11_ghz")

#: Columns of a one excitation branch table
BRANCH_COLUMNS = ("phi", "lower_ghz", "upper_ghz")

J_SOURCES = ("effective", "splitting", "crossing")

#: Coupler flux range of the cross-Kerr observable
KERR_PHI3_RANGE = (0.0, 0.25)

#: Level of each named branch of a spectrum sweep
BRANCH_LEVELS: Dict[str, LevelKey] = {
    "minus": "-",
    "plus": "+",
    "11": (1, 1, 0),
    "02": (0, 2, 0),
    "20": (2, 0, 0),
}


class TrackedSpectrumSweep(TrackLabelsMixin, RetuneMixin, SpectrumSweep):
    """Spectrum sweep with continuous labels and an optional retuning rule"""


def _run_points(sweep: SpectrumSweep) -> List[SweepPoint]:
    return asyncio.run(sweep.run())


def _label_transition(spectrum: LabeledSpectrum, key: LevelKey) -> float:
    try:
        return spectrum.transition(key)
    except KeyError:
        return math.nan


def _tracked_branch(
    spectra: Sequence[LabeledSpectrum],
    key: LevelKey,
    tracks: Optional[np.ndarray],
    ambiguous: Optional[np.ndarray],
) -> np.ndarray:
    """
    Transition of one level along a sweep. The level is found by its label
    at the first point and then followed along its track; the labels of
    each point are used without tracks and where the track is ambiguous.
    """
    start = None
    if tracks is not None:
        try:
            start = spectra[0].index_of(key)
        except KeyError:
            logger.info("Level %s not identified at the first point, labels used instead", key)
    branch = []
    for point, spectrum in enumerate(spectra):
        if start is None or ambiguous[point, start]:
            branch.append(_label_transition(spectrum, key))
        else:
            branch.append(spectrum.transition_at(int(tracks[point, start])))
    return np.array(branch)


@dataclasses.dataclass(frozen=True, eq=False)
class SweepResult:
    """
    Result of a flux sweep: per point spectra (when computed with the full
    Hamiltonian) and named branches, one value per point (GHz, ``nan``
    where a branch is not identified).
    """

    axis: str
    values: np.ndarray
    spectra: Tuple[LabeledSpectrum, ...] = ()
    branches: Mapping[str, np.ndarray] = dataclasses.field(default_factory=dict)
    tracks: Optional[np.ndarray] = None
    track_ambiguous: Optional[np.ndarray] = None
    provenance: Mapping[str, Any] = dataclasses.field(default_factory=dict)

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        steps = np.diff(values)
        if len(steps) and not (np.all(steps > 0) or np.all(steps < 0)):
            raise ParameterError("sweep axis must be strictly monotone")
        if self.spectra and len(self.spectra) != len(values):
            raise ParameterError("one spectrum per sweep point is needed")
        for name, branch in self.branches.items():
            if len(branch) != len(values):
                raise ParameterError(f"branch {name!r} does not match the sweep axis")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_points(
        cls,
        axis: str,
        points: Sequence[SweepPoint],
        *,
        two_excitation: bool = False,
        provenance: Optional[Mapping[str, Any]] = None,
    ) -> "SweepResult":
        spectra = tuple(point.result for point in points)
        tracks = ambiguous = None
        if points and all(point.track is not None for point in points):
            tracks = np.stack([point.track for point in points])
            ambiguous = np.stack([point.track_ambiguous for point in points])

        branches = {"lower": [], "upper": []}
        for spectrum in spectra:
            lower, upper = spectrum.one_excitation_pair()
            branches["lower"].append(spectrum.transition_at(lower))
            branches["upper"].append(spectrum.transition_at(upper))
        names = ("minus", "plus") + (("11", "02", "20") if two_excitation else ())
        for name in names:
            branches[name] = _tracked_branch(spectra, BRANCH_LEVELS[name], tracks, ambiguous)
        return cls(
            axis=axis,
            values=np.array([point.value for point in points]),
            spectra=spectra,
            branches={name: np.array(values) for name, values in branches.items()},
            tracks=tracks,
            track_ambiguous=ambiguous,
            provenance=dict(provenance or {}),
        )

    @classmethod
    def from_branches(
        cls,
        axis: str,
        values: Sequence[float],
        lower: Sequence[float],
        upper: Sequence[float],
        provenance: Optional[Mapping[str, Any]] = None,
    ) -> "SweepResult":
        """Sweep made of measured (or synthetic) one excitation branches"""
        return cls(
            axis=axis,
            values=np.asarray(values, dtype=float),
            branches={"lower": np.asarray(lower, dtype=float), "upper": np.asarray(upper, dtype=float)},
            provenance=dict(provenance or {}),
        )

    def one_excitation_branches(self) -> Tuple[np.ndarray, np.ndarray]:
        try:
            return self.branches["lower"], self.branches["upper"]
        except KeyError:
            raise FitError("sweep has no one excitation branches") from None

    @property
    def converged(self) -> bool:
        return all(spectrum.converged for spectrum in self.spectra)

    def branch_rows(self) -> List[Tuple[float, float, float]]:
        lower, upper = self.one_excitation_branches()
        return [(float(v), float(lo), float(up)) for v, lo, up in zip(self.values, lower, upper)]


# -------------------- Two level model --------------------


def two_level_branches(
    phi: Sequence[float],
    omega2: float,
    phi_resonance: float,
    slope: float,
    curvature: float,
    j: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Branches of a tunable level ``omega1(phi) = omega2 + slope x +
    curvature x^2`` (``x = phi - phi_resonance``) coupled to a fixed one by
    ``j``. Returns ``(lower, upper)``.
    """
    x = np.asarray(phi, dtype=float) - phi_resonance
    omega1 = omega2 + slope * x + curvature * x ** 2
    mean = (omega1 + omega2) / 2
    half_gap = np.sqrt((omega1 - omega2) ** 2 / 4 + j ** 2)
    return mean - half_gap, mean + half_gap


def add_frequency_noise(values: Sequence[float], sigma: float, seed: Optional[int] = None) -> np.ndarray:
    """Additive gaussian frequency noise of standard deviation ``sigma``"""
    rng = np.random.default_rng(seed)
    values = np.asarray(values, dtype=float)
    return values + rng.normal(0.0, sigma, size=values.shape)


class CrossingFit(NamedTuple):
    """Fitted avoided crossing, frequencies in GHz"""

    j: float  #: Coupling magnitude
    phi_resonance: float  #: Flux of the minimum gap
    residual: float  #: RMS error of the two branches
    omega2: float
    slope: float
    curvature: float
    sign: Optional[int] = None  #: Sign of the coupling when known from the model
    success: bool = True

    def to_dict(self) -> Dict[str, Any]:
        return {
            "j_mhz": self.j * 1e3,
            "residual_mhz": self.residual * 1e3,
            "phi_resonance": self.phi_resonance,
            "omega2_ghz": self.omega2,
            "sign": self.sign,
            "success": self.success,
        }


def fit_crossing(sweep: SweepResult, *, sign: Optional[int] = None) -> CrossingFit:
    """
    Fit the one excitation branches of a sweep to the two level model.

    :param sweep: Sweep whose gap minimum lies strictly inside the scan
    :param sign: Sign of the coupling, when known from the circuit model
    """
    lower, upper = sweep.one_excitation_branches()
    phi = sweep.values
    if len(phi) < 6:
        raise FitError(f"an avoided crossing fit needs at least 6 points, got {len(phi)}")
    if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
        raise FitError("branches contain unidentified points")
    gap = upper - lower
    center = int(np.argmin(gap))
    if center in (0, len(phi) - 1):
        raise FitError("no gap minimum inside the scanned range")

    c2, c1, c0 = np.polyfit(phi - phi[center], lower + upper, 2)
    start = np.array([c0 / 2, phi[center], c1, c2, gap[center] / 2])
    data = np.concatenate([lower, upper])

    def residuals(x: np.ndarray) -> np.ndarray:
        return np.concatenate(two_level_branches(phi, *x)) - data

    result = least_squares(
        residuals,
        start,
        bounds=([-np.inf] * 4 + [0.0], [np.inf] * 5),
        x_scale="jac",
        ftol=1e-15,
        xtol=1e-15,
        gtol=1e-15,
        max_nfev=5000,
    )
    omega2, phi_resonance, slope, curvature, j = result.x
    rms = float(np.sqrt(np.mean(result.fun ** 2)))
    logger.info(
        "Avoided crossing fit: |J|=%.3f MHz at %s=%.5f, residual %.3g MHz",
        j * 1e3,
        sweep.axis,
        phi_resonance,
        rms * 1e3,
    )
    return CrossingFit(
        j=float(j),
        phi_resonance=float(phi_resonance),
        residual=rms,
        omega2=float(omega2),
        slope=float(slope),
        curvature=float(curvature),
        sign=sign,
        success=bool(result.success),
    )


# -------------------- Full model sweeps --------------------


def retune_to_resonance(params: CircuitParams, bracket: Tuple[float, float] = (0.0, 0.5)) -> CircuitParams:
    """Choose ``phi1`` in ``bracket`` so that both transmon energies match"""
    low_energy = params.transmon_asymmetry * params.ej1_max
    target = params.ej2

    def mismatch(phi1: float) -> float:
        return squid_energy(params.ej1_max, low_energy, phi1) - target

    low, high = bracket
    f_low, f_high = mismatch(low), mismatch(high)
    if f_low == 0:
        return params.replace(phi1=low)
    if f_low * f_high > 0:
        raise PreconditionError(
            f"transmon 1 can not reach ej2={target:.4f} GHz with phi1 in {bracket}"
        )
    return params.replace(phi1=brentq(mismatch, low, high, xtol=1e-14))


def _provenance(params: CircuitParams, fock: FockConfig, **extra: Any) -> Dict[str, Any]:
    provenance = {"params": params.to_dict(), "fock": fock.to_dict()}
    provenance.update(extra)
    return provenance


def avoided_crossing_scan(
    params: CircuitParams,
    fock: FockConfig,
    phi1_values: Sequence[float],
    *,
    levels: int = 8,
    threads: int = 1,
) -> SweepResult:
    """
    Tune transmon 1 through resonance at fixed transmon 2 and coupler
    fluxes, and follow the one excitation levels.
    """
    sweep = TrackedSpectrumSweep(
        params=params, values=phi1_values, axis="phi1", fock=fock, levels=levels, threads=threads
    )
    result = SweepResult.from_points("phi1", _run_points(sweep), provenance=_provenance(params, fock))
    if not result.converged:
        logger.warning("Avoided crossing scan not converged in the Fock truncation")
    return result


def resonant_spectrum_vs_coupler(
    params: CircuitParams,
    fock: FockConfig,
    phi3_values: Sequence[float],
    *,
    retune: Optional[Retune] = None,
    two_excitation: bool = False,
    levels: Optional[int] = None,
    threads: int = 1,
) -> SweepResult:
    """
    Spectrum of the resonant transmons along a coupler sweep.

    :param retune: Rule keeping the transmons resonant, for example
        :py:func:`retune_to_resonance`. ``None`` keeps the transmon fluxes
        fixed.
    :param two_excitation: Also extract the ``11``, ``02`` and ``20``
        branches
    :param levels: Levels per point, 12 by default and 30 with two
        excitations
    """
    if levels is None:
        levels = 30 if two_excitation else 12
    sweep = TrackedSpectrumSweep(
        params=params,
        values=phi3_values,
        axis="phi3",
        fock=fock,
        levels=levels,
        retune=retune,
        threads=threads,
    )
    points = _run_points(sweep)
    result = SweepResult.from_points(
        "phi3", points, two_excitation=two_excitation, provenance=_provenance(params, fock)
    )
    ambiguous = [point.value for point in points if np.any(point.result.ambiguous[:levels])]
    if ambiguous:
        logger.info("Ambiguous level labels at phi3 = %s", ", ".join(f"{v:.4f}" for v in ambiguous))
    return result


class KerrPoint(NamedTuple):
    phi3: float
    j: float  #: Hopping used for the ratio, GHz
    ratio: float  #: (omega_11 - omega_minus - omega_plus) / |J|
    omega_plus: float
    omega_minus: float
    omega_11: float

    def to_row(self) -> Tuple[float, ...]:
        return (self.phi3, self.j * 1e3, self.ratio, self.omega_plus, self.omega_minus, self.omega_11)


def _crossing_hopping(
    params: CircuitParams, fock: FockConfig, window: float, points: int, threads: int
) -> float:
    center = retune_to_resonance(params).phi1
    scan = avoided_crossing_scan(
        params, fock, np.linspace(center - window, center + window, points), threads=threads
    )
    return fit_crossing(scan).j


def cross_kerr_observable(
    params: CircuitParams,
    fock: FockConfig,
    phi3_values: Sequence[float],
    *,
    j_source: str = "effective",
    coupler_order: Optional[int] = None,
    retune: Optional[Retune] = None,
    levels: Optional[int] = None,
    crossing_window: float = 0.03,
    crossing_points: int = 15,
    threads: int = 1,
) -> List[KerrPoint]:
    """
    Shift of the doubly excited level relative to the one excitation
    levels, in units of the hopping, along a coupler sweep.

    :param phi3_values: Coupler fluxes, within :py:data:`KERR_PHI3_RANGE`
    :param j_source: ``'effective'`` (analytic couplings), ``'splitting'``
        (half the one excitation splitting) or ``'crossing'`` (fitted
        avoided crossing around the resonance)
    :param coupler_order: Overrides the coupler expansion order, 2 gives the
        reference without cross-Kerr coupling
    """
    if j_source not in J_SOURCES:
        raise ConfigurationError(f"unknown j_source {j_source!r}, expected one of {J_SOURCES}")
    outside = [float(v) for v in phi3_values if not KERR_PHI3_RANGE[0] <= v <= KERR_PHI3_RANGE[1]]
    if outside:
        raise PreconditionError(f"coupler flux {outside} outside {KERR_PHI3_RANGE}")
    if coupler_order is not None:
        fock = fock.replace(coupler_order=coupler_order)
    sweep = resonant_spectrum_vs_coupler(
        params, fock, phi3_values, retune=retune, two_excitation=True, levels=levels, threads=threads
    )

    kerr = []
    branches = zip(sweep.values, sweep.branches["plus"], sweep.branches["minus"], sweep.branches["11"])
    for phi3, plus, minus, doubly in branches:
        if np.isnan([plus, minus, doubly]).any():
            logger.warning("Levels not identified at phi3=%.4f, point skipped", phi3)
            continue
        point_params = params.replace(phi3=float(phi3))
        if retune is not None:
            point_params = retune(point_params)
        if j_source == "effective":
            j = couplings_for(point_params).j_total
        elif j_source == "splitting":
            j = (minus - plus) / 2
        else:
            j = _crossing_hopping(point_params, fock, crossing_window, crossing_points, threads)
        if abs(j) < MIN_HOPPING:
            logger.info("|J| below %.1f MHz at phi3=%.4f, point skipped", MIN_HOPPING * 1e3, phi3)
            continue
        kerr.append(
            KerrPoint(
                phi3=float(phi3),
                j=float(j),
                ratio=float((doubly - minus - plus) / abs(j)),
                omega_plus=float(plus),
                omega_minus=float(minus),
                omega_11=float(doubly),
            )
        )
    return kerr
