"""
Core module: classical normal modes of the linearized four island network
"""
import dataclasses
import logging
import math
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.optimize import brentq, linear_sum_assignment

from .circuit import (
    CHARGING_CONSTANT,
    CircuitParams,
    NodeMatrices,
    build_node_matrices,
    josephson_energy,
)
from .exceptions import MatrixError, ParameterError, PreconditionError

logger = logging.getLogger("kerr_coupler")

ANTISYMMETRIC = "antisymmetric"
SYMMETRIC = "symmetric"
SLOSHING = "sloshing"
RIGID = "rigid"

#: Node sign pattern of each labelled mode
SIGN_TEMPLATES: Dict[str, Tuple[float, ...]] = {
    ANTISYMMETRIC: (1.0, -1.0, -1.0, 1.0),
    SYMMETRIC: (1.0, -1.0, 1.0, -1.0),
    SLOSHING: (1.0, 1.0, -1.0, -1.0),
    RIGID: (1.0, 1.0, 1.0, 1.0),
}

#: Columns of :py:meth:`NormalModeSet.to_row`
MODES_COLUMNS = ("phi3", "f_sym_ghz", "f_antisym_ghz", "f_slosh_ghz", "f_rigid_ghz")

_MIRROR = np.eye(4)[::-1]


@dataclasses.dataclass(frozen=True, eq=False)
class NormalModeSet:
    """
    Normal modes sorted by ascending frequency (GHz). Column k of
    ``vectors`` holds the capacitance normalized node amplitudes of mode k.
    """

    frequencies: np.ndarray
    vectors: np.ndarray
    labels: Tuple[str, ...]

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(label) from None

    def frequency(self, label: str) -> float:
        return float(self.frequencies[self.index(label)])

    def vector(self, label: str) -> np.ndarray:
        return self.vectors[:, self.index(label)]

    def as_dict(self) -> Dict[str, float]:
        return {label: float(freq) for label, freq in zip(self.labels, self.frequencies)}

    def to_row(self, phi3: float) -> Tuple[float, ...]:
        return (
            float(phi3),
            self.frequency(SYMMETRIC),
            self.frequency(ANTISYMMETRIC),
            self.frequency(SLOSHING),
            self.frequency(RIGID),
        )


def _check_positive_definite(cap: np.ndarray) -> None:
    try:
        scipy.linalg.cholesky(cap)
    except np.linalg.LinAlgError as e:
        raise MatrixError(f"capacitance matrix is not positive definite: {e}") from e


def _frequency(eigenvalue: float) -> float:
    return math.sqrt(8 * CHARGING_CONSTANT * max(eigenvalue, 0.0))


def _assign(vectors: np.ndarray, labels: Sequence[str]) -> List[str]:
    """Match each column to a sign template, maximizing the total |cos|"""
    templates = np.array([SIGN_TEMPLATES[label] for label in labels]).T
    templates = templates / np.linalg.norm(templates, axis=0)
    unit = vectors / np.linalg.norm(vectors, axis=0)
    score = np.abs(unit.T @ templates)
    rows, cols = linear_sum_assignment(-score)
    assigned = [""] * vectors.shape[1]
    for row, col in zip(rows, cols):
        assigned[row] = labels[col]
    return assigned


def _solve_block(
    basis: np.ndarray, cap: np.ndarray, ind_inv: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    eigenvalues, coefficients = scipy.linalg.eigh(
        basis.T @ ind_inv @ basis, basis.T @ cap @ basis
    )
    return eigenvalues, basis @ coefficients


def solve_normal_modes(matrices: NodeMatrices) -> NormalModeSet:
    """
    Solve ``ind_inv v = lambda cap v`` and label the four modes.

    The rigid mode (uniform node amplitudes) is removed exactly and the
    remaining modes are solved in its capacitive complement. When the
    network is mirror symmetric the even and odd subspaces are solved
    separately, so the symmetric and antisymmetric modes never mix at
    their degeneracy.
    """
    cap, ind_inv = np.asarray(matrices.cap), np.asarray(matrices.ind_inv)
    _check_positive_definite(cap)

    ones = np.ones(4)
    rigid = ones / math.sqrt(ones @ cap @ ones)
    mirror_symmetric = np.allclose(_MIRROR @ cap @ _MIRROR, cap, rtol=1e-12, atol=0) and np.allclose(
        _MIRROR @ ind_inv @ _MIRROR, ind_inv, rtol=1e-12, atol=1e-15
    )

    if mirror_symmetric:
        weight = cap @ ones
        # Even vector orthogonal to the rigid mode in the capacitance metric
        even = np.array([weight[1], -weight[0], -weight[0], weight[1]])[:, None]
        even_value, even_vector = _solve_block(even, cap, ind_inv)
        odd = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, -1.0], [-1.0, 0.0]])
        odd_values, odd_vectors = _solve_block(odd, cap, ind_inv)
        values = np.concatenate([[0.0], even_value, odd_values])
        vectors = np.column_stack([rigid, even_vector, odd_vectors])
        labels = [RIGID, ANTISYMMETRIC] + _assign(odd_vectors, (SYMMETRIC, SLOSHING))
    else:
        complement = scipy.linalg.null_space((cap @ ones)[None, :])
        comp_values, comp_vectors = _solve_block(complement, cap, ind_inv)
        values = np.concatenate([[0.0], comp_values])
        vectors = np.column_stack([rigid, comp_vectors])
        labels = [RIGID] + _assign(comp_vectors, (ANTISYMMETRIC, SYMMETRIC, SLOSHING))

    if np.any(values < -1e-9 * np.max(np.abs(values))):
        logger.warning("Negative normal mode eigenvalue clipped to zero: %s", values)
    frequencies = np.array([_frequency(value) for value in values])
    order = np.argsort(frequencies, kind="stable")
    return NormalModeSet(
        frequencies=frequencies[order],
        vectors=vectors[:, order],
        labels=tuple(labels[i] for i in order),
    )


def normal_modes(params: CircuitParams) -> NormalModeSet:
    """Normal modes of a device at its flux biases"""
    return solve_normal_modes(build_node_matrices(params))


def normal_modes_vs_inductance(
    params: CircuitParams, inductances_nh: Iterable[float]
) -> List[NormalModeSet]:
    """
    Normal modes as a function of the coupler inductance (nH), an infinite
    inductance being an open coupler junction.
    """
    return [
        solve_normal_modes(build_node_matrices(params, ej_c=josephson_energy(l_c)))
        for l_c in inductances_nh
    ]


def filter_frequency(params: CircuitParams) -> float:
    """Resonance frequency of the coupler junction and its capacitance"""
    if params.c_c == 0:
        return math.inf
    return math.sqrt(8 * CHARGING_CONSTANT * params.ej_c / params.c_c)


def classical_splitting(params: CircuitParams, phi3: Optional[float] = None) -> float:
    """
    Symmetric minus antisymmetric mode frequency, for resonant transmons.

    :param params: Device parameters
    :param phi3: Coupler flux overriding ``params.phi3``
    """
    if phi3 is not None:
        params = params.replace(phi3=phi3)
    if not math.isclose(params.ej1, params.ej2, rel_tol=1e-9, abs_tol=1e-12):
        raise PreconditionError(
            f"transmons are off resonance (ej1={params.ej1:.6f}, ej2={params.ej2:.6f} GHz)"
        )
    modes = normal_modes(params)
    return modes.frequency(SYMMETRIC) - modes.frequency(ANTISYMMETRIC)


def classical_splitting_zero(
    params: CircuitParams, bracket: Tuple[float, float] = (0.0, 0.5)
) -> float:
    """Coupler flux at which the classical splitting vanishes"""
    low, high = bracket
    if not low < high:
        raise ParameterError(f"invalid bracket {bracket}")
    f_low, f_high = classical_splitting(params, low), classical_splitting(params, high)
    if f_low * f_high > 0:
        raise PreconditionError(
            f"classical splitting does not change sign over {bracket} "
            f"({f_low * 1e3:.3f} and {f_high * 1e3:.3f} MHz)"
        )
    return brentq(lambda phi3: classical_splitting(params, phi3), low, high, xtol=1e-12)
