"""
Core module: define the circuit parameters, the flux-tunable Josephson
energies and the node and mode capacitance matrices of the two transmon
plus coupler circuit
"""
import dataclasses
import json
import logging
import math
import numbers
from typing import Any, Dict, Mapping, Optional, Union

import numpy as np
from scipy import constants

from .exceptions import ParameterError

logger = logging.getLogger("kerr_coupler")

# Some type aliases
ArrayLike = Union[float, np.ndarray]
JSONObject = Dict[str, Any]

#: e^2 / 2h in GHz.fF, so that E_C[GHz] = CHARGING_CONSTANT / C[fF]
CHARGING_CONSTANT = constants.e ** 2 / (2 * constants.h) * 1e6

#: (hbar / 2e)^2 / h in nH.GHz, so that L[nH] = INDUCTANCE_CONSTANT / E_J[GHz]
INDUCTANCE_CONSTANT = (constants.hbar / (2 * constants.e)) ** 2 / constants.h

#: Flux bias channels, in units of the flux quantum
FLUX_AXES = ("phi1", "phi2", "phi3")

#: Mode ordering of the mode basis
MODE_NAMES = ("R", "S", "B", "A")

#: Column k holds the node amplitudes of mode MODE_NAMES[k]:
#: node = NODE_FROM_MODE @ (R, S, B, A)
NODE_FROM_MODE = 0.5 * np.array(
    [
        [1.0, 1.0, 0.0, 1.0],
        [1.0, 1.0, 0.0, -1.0],
        [1.0, -1.0, -1.0, 0.0],
        [1.0, -1.0, 1.0, 0.0],
    ]
)
NODE_FROM_MODE.setflags(write=False)


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


def squid_energy(e_max: float, e_min: float, phi: ArrayLike) -> ArrayLike:
    """
    Josephson energy of an asymmetric SQUID threaded by the reduced flux
    ``phi`` (in flux quanta).

    :param e_max: Energy at the top sweetspot (``phi = 0``)
    :param e_min: Energy at the bottom sweetspot (``phi = 0.5``)
    :param phi: Flux bias, scalar or array
    :return: ``sqrt(e_max^2 cos^2(pi phi) + e_min^2 sin^2(pi phi))``
    """
    if e_min < 0 or e_max < 0:
        raise ParameterError(f"SQUID energies must be non negative, got {e_max}, {e_min}")
    if e_min > e_max:
        raise ParameterError(f"SQUID minimum energy {e_min} exceeds maximum {e_max}")
    phase = np.pi * np.asarray(phi, dtype=float)
    energy = np.sqrt((e_max * np.cos(phase)) ** 2 + (e_min * np.sin(phase)) ** 2)
    if np.ndim(energy) == 0:
        return float(energy)
    return energy


def josephson_inductance(e_j: float) -> float:
    """Inductance in nH of a junction of Josephson energy ``e_j`` GHz (inf at 0)"""
    if e_j < 0:
        raise ParameterError(f"Josephson energy must be non negative, got {e_j}")
    if e_j == 0:
        return math.inf
    return INDUCTANCE_CONSTANT / e_j


def josephson_energy(l_nh: float) -> float:
    """Josephson energy in GHz of an inductance ``l_nh`` nH (0 for an infinite one)"""
    if l_nh <= 0:
        raise ParameterError(f"Inductance must be positive, got {l_nh}")
    if math.isinf(l_nh):
        return 0.0
    return INDUCTANCE_CONSTANT / l_nh


# Device presets, energies in GHz and capacitances in fF
PRESETS: Dict[str, JSONObject] = {
    "one_excitation_fit": {
        "ej1_max": 22.99,
        "ej_c_max": 7.33,
        "ej_c_min": 0.37,
        "c": 39.0,
        "c1g": 60.5,
        "c2g": 87.0,
        "c_c": 18.0,
    },
    "full_model_fit": {
        "ej1_max": 23.01,
        "ej_c_max": 7.75,
        "ej_c_min": 0.39,
        "c": 39.0,
        "c1g": 61.0,
        "c2g": 87.0,
        "c_c": 20.0,
    },
    "large_coupling_capacitor": {
        "ej1_max": 23.01,
        "ej_c_max": 7.75,
        "ej_c_min": 0.39,
        "c": 39.0,
        "c1g": 61.0,
        "c2g": 87.0,
        "c_c": 30.0,
    },
}


@dataclasses.dataclass(frozen=True)
class CircuitParams:
    """
    Immutable set of device parameters. Energies are in GHz, capacitances
    in fF and flux biases in flux quanta.

    The transmon SQUIDs share ``transmon_asymmetry`` (ratio of the bottom to
    the top sweetspot energy). ``ej2_max`` defaults to ``ej1_max``.
    """

    ej1_max: float  #: Top sweetspot Josephson energy of transmon 1
    ej_c_max: float  #: Coupler SQUID energy at its top sweetspot
    ej_c_min: float  #: Coupler SQUID energy at its bottom sweetspot
    c: float  #: Shunt capacitance of each transmon
    c1g: float  #: Outer islands capacitance to ground
    c2g: float  #: Inner islands capacitance to ground
    c_c: float  #: Coupler junction capacitance
    ej2_max: Optional[float] = None  #: Top sweetspot energy of transmon 2
    phi1: float = 0.0  #: Flux bias of transmon 1
    phi2: float = 0.0  #: Flux bias of transmon 2
    phi3: float = 0.0  #: Flux bias of the coupler
    transmon_asymmetry: float = 0.0  #: e_min / e_max of the transmon SQUIDs

    def __post_init__(self) -> None:
        if self.ej2_max is None:
            object.__setattr__(self, "ej2_max", self.ej1_max)
        for name in ("ej1_max", "ej2_max", "ej_c_max", "ej_c_min", "c", "c1g", "c2g", "c_c"):
            value = getattr(self, name)
            if not isinstance(value, numbers.Real) or not math.isfinite(value):
                raise ParameterError(f"{name} must be a finite number, got {value!r}")
        for name in ("ej1_max", "ej2_max", "ej_c_max", "c", "c1g", "c2g"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be strictly positive, got {getattr(self, name)}")
        if self.c_c < 0:
            raise ParameterError(f"c_c must be non negative, got {self.c_c}")
        if not 0 <= self.ej_c_min <= self.ej_c_max:
            raise ParameterError(
                f"need 0 <= ej_c_min <= ej_c_max, got {self.ej_c_min} and {self.ej_c_max}"
            )
        if not 0 <= self.transmon_asymmetry <= 1:
            raise ParameterError(
                f"transmon_asymmetry must lie in [0, 1], got {self.transmon_asymmetry}"
            )
        for name in FLUX_AXES:
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")

    # -------------------- Flux resolved energies --------------------
    @property
    def ej1(self) -> float:
        """Josephson energy of transmon 1 at ``phi1``"""
        return squid_energy(self.ej1_max, self.transmon_asymmetry * self.ej1_max, self.phi1)

    @property
    def ej2(self) -> float:
        """Josephson energy of transmon 2 at ``phi2``"""
        return squid_energy(self.ej2_max, self.transmon_asymmetry * self.ej2_max, self.phi2)

    @property
    def ej_c(self) -> float:
        """Josephson energy of the coupler SQUID at ``phi3``"""
        return squid_energy(self.ej_c_max, self.ej_c_min, self.phi3)

    # -------------------- Serialization --------------------
    def replace(self, **changes: Any) -> "CircuitParams":
        """Return a copy with some fields changed"""
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> JSONObject:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "CircuitParams":
        """Build parameters from a mapping, rejecting unknown keys"""
        known = {field.name for field in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ParameterError(f"unknown circuit parameter(s): {', '.join(unknown)}")
        try:
            return cls(**data)
        except TypeError as e:
            raise ParameterError(str(e)) from e

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CircuitParams":
        return cls.from_dict(json.loads(text))

    @classmethod
    def preset(cls, name: str, **changes: Any) -> "CircuitParams":
        """
        Device parameters of a named preset.

        :param name: One of :py:data:`PRESETS`
        :param changes: Fields overriding the preset values
        """
        try:
            data = dict(PRESETS[name])
        except KeyError:
            raise ParameterError(
                f"unknown preset {name!r}, expected one of {', '.join(sorted(PRESETS))}"
            ) from None
        data.update(changes)
        return cls.from_dict(data)


@dataclasses.dataclass(frozen=True, eq=False)
class NodeMatrices:
    """
    Capacitance matrix (fF) and inverse inductance matrix of the four
    island network. The inverse inductance is stored as Josephson energy
    weights in GHz, the 1/nH view is :py:attr:`ind_inv_per_nh`.
    """

    cap: np.ndarray
    ind_inv: np.ndarray

    @property
    def ind_inv_per_nh(self) -> np.ndarray:
        return self.ind_inv / INDUCTANCE_CONSTANT


def build_node_matrices(params: CircuitParams, *, ej_c: Optional[float] = None) -> NodeMatrices:
    """
    Assemble the node capacitance and inverse inductance matrices.

    :param params: Device parameters
    :param ej_c: Override of the coupler Josephson energy, used to sweep
        the coupler inductance directly
    """
    g1, g2, c, c_c = params.c1g, params.c2g, params.c, params.c_c
    cap = np.array(
        [
            [c + g1, -c, 0.0, 0.0],
            [-c, c + g2 + c_c, -c_c, 0.0],
            [0.0, -c_c, c + g2 + c_c, -c],
            [0.0, 0.0, -c, c + g1],
        ]
    )
    e1, e2 = params.ej1, params.ej2
    ec = params.ej_c if ej_c is None else ej_c
    ind_inv = np.array(
        [
            [e1, -e1, 0.0, 0.0],
            [-e1, e1 + ec, -ec, 0.0],
            [0.0, -ec, e2 + ec, -e2],
            [0.0, 0.0, -e2, e2],
        ]
    )
    return NodeMatrices(cap=_frozen(cap), ind_inv=_frozen(ind_inv))


def _ratio(numerator: float, denominator: float) -> float:
    if denominator == 0:
        return math.inf
    return numerator / denominator


@dataclasses.dataclass(frozen=True, eq=False)
class ModeSystem:
    """
    Circuit expressed in the (R, S, B, A) mode basis: rigid, sloshing and
    the two transmon modes. Effective capacitances are in fF, the coupling
    ``kappa`` is the (A, B) entry of the inverse mode capacitance in 1/fF.

    ``ej1`` and ``ej2`` include the coupler correction ``ej_c / 4`` when
    ``ej_correction_applied`` is set.
    """

    params: CircuitParams  #: Parameters the system was built from
    cap_mode: np.ndarray  #: Mode capacitance matrix M^T C M
    c_tilde: float  #: Effective transmon capacitance
    c_tilde_s: float  #: Effective sloshing capacitance
    c_tilde_r: float  #: Effective rigid capacitance
    c_tilde_abs: float  #: Transmon to sloshing coupling capacitance
    c_tilde_abr: float  #: Transmon to rigid coupling capacitance (inf if none)
    det_cprime: float  #: Determinant of the transmon block
    kappa: float  #: Transmon to transmon inverse capacitance
    ej1: float
    ej2: float
    ej_c: float
    ej_correction_applied: bool = True
    rigid_mode_eliminated: bool = False

    @property
    def e_c(self) -> float:
        """Transmon charging energy"""
        return CHARGING_CONSTANT / self.c_tilde

    @property
    def e_c_s(self) -> float:
        """Sloshing mode charging energy"""
        return CHARGING_CONSTANT / self.c_tilde_s

    @property
    def ej1_bare(self) -> float:
        return self.params.ej1

    @property
    def ej2_bare(self) -> float:
        return self.params.ej2

    @property
    def ej(self) -> float:
        """Geometric mean of the transmon Josephson energies"""
        return math.sqrt(self.ej1 * self.ej2)

    @property
    def inv_c_tilde_abr(self) -> float:
        return 0.0 if math.isinf(self.c_tilde_abr) else 1.0 / self.c_tilde_abr

    @property
    def inv_c_tilde_abs(self) -> float:
        return 0.0 if math.isinf(self.c_tilde_abs) else 1.0 / self.c_tilde_abs

    @property
    def is_resonant(self) -> bool:
        return math.isclose(self.ej1, self.ej2, rel_tol=1e-9, abs_tol=1e-12)

    def replace(self, **changes: Any) -> "ModeSystem":
        return dataclasses.replace(self, **changes)


def mode_capacitance(cap: np.ndarray) -> np.ndarray:
    """Transform a node capacitance matrix to the (R, S, B, A) basis"""
    return NODE_FROM_MODE.T @ cap @ NODE_FROM_MODE


def build_mode_system(params: CircuitParams, *, ej_correction: bool = True) -> ModeSystem:
    """
    Express the circuit in the mode basis using the closed form effective
    capacitances.

    :param params: Device parameters
    :param ej_correction: Add ``ej_c / 4`` to the transmon Josephson
        energies, the contribution of the coupler junction expanded to
        second order
    """
    g1, g2, c, c_c = params.c1g, params.c2g, params.c, params.c_c
    d_even = g1 * g2 + c * (g1 + g2)
    d_odd = g1 * (g2 + 2 * c_c) + c * (g1 + g2 + 2 * c_c)
    det = d_even * d_odd / 4
    norm = g1 * g2 * (g1 + g2) + c_c * g1 * (g1 + 2 * g2) + c * (g1 + g2) * (g1 + g2 + 2 * c_c)

    ej_c = params.ej_c
    correction = ej_c / 4 if ej_correction else 0.0
    system = ModeSystem(
        params=params,
        cap_mode=_frozen(mode_capacitance(build_node_matrices(params).cap)),
        c_tilde=4 * det / norm,
        c_tilde_s=2 * d_odd / (4 * c + g1 + g2 + 2 * c_c),
        c_tilde_r=2 * d_even / (4 * c + g1 + g2),
        c_tilde_abs=_ratio(2 * d_odd, g2 - g1 + 2 * c_c),
        c_tilde_abr=_ratio(2 * d_even, g2 - g1),
        det_cprime=det,
        kappa=c_c * g1 ** 2 / (4 * det),
        ej1=params.ej1 + correction,
        ej2=params.ej2 + correction,
        ej_c=ej_c,
        ej_correction_applied=ej_correction,
    )
    logger.debug(
        "Mode system: C~=%.4f fF, C~_S=%.4f fF, kappa=%.6g 1/fF",
        system.c_tilde,
        system.c_tilde_s,
        system.kappa,
    )
    return system
