"""
Core module: analytic reduced models of the coupled transmons, the
effective hopping and cross-Kerr couplings, the two-site Bose-Hubbard
Hamiltonian and its spin one half reduction
"""
import dataclasses
import enum
import logging
import math
from typing import Iterable, NamedTuple, Tuple

import numpy as np
from scipy.optimize import brentq

from .circuit import CHARGING_CONSTANT, CircuitParams, ModeSystem, build_mode_system
from .exceptions import ConfigurationError, ParameterError, PreconditionError
from .hamiltonian import annihilation, eliminate_rigid_mode

logger = logging.getLogger("kerr_coupler")

#: Columns of :py:meth:`EffectiveCouplings.to_row`
COUPLINGS_COLUMNS = (
    "phi3",
    "j_cap_mhz",
    "j_ind_mhz",
    "j_total_mhz",
    "v_mhz",
    "u_mhz",
    "omega1_ghz",
    "omega2_ghz",
    "j_sloshing_mhz",
    "omega_s_ghz",
)

#: Fraction of the qubit frequency above which the hopping picture is doubtful
RWA_LIMIT = 1 / 20

#: Coupling to detuning ratio above which the sloshing mediated hopping is doubtful
DISPERSIVE_LIMIT = 0.3


@dataclasses.dataclass(frozen=True)
class EffectiveCouplings:
    """Parameters of the two-site model, all in GHz"""

    j_total: float  #: Hopping, including the requested corrections
    j_cap: float  #: Capacitive part of the hopping
    j_ind: float  #: Inductive part of the hopping
    v: float  #: Cross-Kerr coupling
    u: float  #: On-site Kerr
    omega1: float  #: Transmon 1 frequency
    omega2: float  #: Transmon 2 frequency
    mu: float = 0.0  #: Chemical potential detuning of the drive frame
    e_c: float = 0.0  #: Transmon charging energy
    c_eff: float = math.inf  #: Effective coupling capacitance, fF
    resonant: bool = True  #: False when the transmon energies differ
    v_correction: bool = True  #: Whether -V/6 is folded into j_total
    j_sloshing: float = 0.0  #: Hopping mediated by virtual sloshing excitations
    omega_s: float = 0.0  #: Sloshing mode frequency, 0 without coupler junction
    sloshing_correction: bool = True  #: Whether j_sloshing is folded into j_total

    @property
    def omega(self) -> float:
        return (self.omega1 + self.omega2) / 2

    @property
    def j_bare(self) -> float:
        """Direct hopping, without any correction"""
        return self.j_cap - self.j_ind

    def to_row(self, phi3: float) -> Tuple[float, ...]:
        return (
            float(phi3),
            self.j_cap * 1e3,
            self.j_ind * 1e3,
            self.j_total * 1e3,
            self.v * 1e3,
            self.u * 1e3,
            self.omega1,
            self.omega2,
            self.j_sloshing * 1e3,
            self.omega_s,
        )


def _zero_point(e_c: float, e_l: float) -> Tuple[float, float]:
    """Phase and charge zero point amplitudes of a harmonic mode"""
    return (2 * e_c / e_l) ** 0.25, (e_l / (32 * e_c)) ** 0.25


def sloshing_hopping(system: ModeSystem) -> Tuple[float, float]:
    """
    Transmon to transmon hopping through virtual sloshing excitations, to
    second order in the transmon to sloshing couplings.

    The transmons couple to the sloshing mode with opposite signs through
    the coupler inductance and the ``A-S`` and ``B-S`` capacitances. The
    rotating part acts across ``omega_i - omega_s`` and the counter rotating
    part across ``omega_i + omega_s``. The sloshing mode is harmonic at
    ``sqrt(8 E_Jc E_CS)``, the quadratic part of the coupler.

    :return: ``(j_sloshing, omega_s)`` in GHz, both 0 without coupler junction
    """
    if system.ej_c <= 0:
        return 0.0, 0.0
    e_c, e_c_s = system.e_c, system.e_c_s
    omega_s = math.sqrt(8 * system.ej_c * e_c_s)
    phase_s, charge_s = _zero_point(e_c_s, system.ej_c)
    g = 8 * CHARGING_CONSTANT * system.inv_c_tilde_abs

    rotating, counter, detunings, sums = [], [], [], []
    for ej in (system.ej1, system.ej2):
        phase, charge = _zero_point(e_c, ej)
        inductive = -system.ej_c / 2 * phase * phase_s
        capacitive = -g * charge * charge_s
        omega = math.sqrt(8 * ej * e_c) - e_c
        detuning = omega - omega_s
        if math.isclose(detuning, 0.0, abs_tol=1e-9):
            raise PreconditionError("a transmon is resonant with the sloshing mode")
        rotating.append(inductive - capacitive)
        counter.append(inductive + capacitive)
        detunings.append(detuning)
        sums.append(omega + omega_s)

    ratio = max(abs(rotating[i] / detunings[i]) for i in range(2))
    if ratio > DISPERSIVE_LIMIT:
        logger.warning(
            "Sloshing mode within %.0f MHz of a transmon, the mediated hopping is doubtful",
            min(abs(d) for d in detunings) * 1e3,
        )
    exchange = -rotating[0] * rotating[1] / 2 * (1 / detunings[0] + 1 / detunings[1])
    pair = counter[0] * counter[1] / 2 * (1 / sums[0] + 1 / sums[1])
    return exchange + pair, omega_s


def effective_couplings(
    system: ModeSystem, *, v_correction: bool = True, sloshing_correction: bool = True, mu: float = 0.0
) -> EffectiveCouplings:
    """
    Hopping, cross-Kerr and on-site couplings of a mode system.

    Off resonance the plasma frequency uses the geometric mean of the
    transmon Josephson energies and the result is flagged non resonant.

    :param system: Mode system with the rigid mode eliminated
    :param v_correction: Fold the correlated hopping correction ``-V/6``
        into ``j_total``
    :param sloshing_correction: Fold the hopping mediated by the sloshing
        mode into ``j_total``
    :param mu: Chemical potential detuning
    """
    if not system.rigid_mode_eliminated:
        raise PreconditionError("the rigid mode must be eliminated first")
    e_c = system.e_c
    ej = system.ej
    plasma = math.sqrt(8 * ej * e_c)
    j_cap = plasma / 2 * system.c_tilde * system.kappa
    j_ind = plasma / 2 * system.ej_c / (4 * ej)
    v = -system.ej_c * e_c / (8 * ej)
    j_sloshing, omega_s = sloshing_hopping(system)
    j_total = j_cap - j_ind
    if sloshing_correction:
        j_total += j_sloshing
    if v_correction:
        j_total -= v / 6
    omega1 = math.sqrt(8 * system.ej1 * e_c) - e_c
    omega2 = math.sqrt(8 * system.ej2 * e_c) - e_c
    c_tilde_kappa = system.c_tilde * system.kappa
    couplings = EffectiveCouplings(
        j_total=j_total,
        j_cap=j_cap,
        j_ind=j_ind,
        v=v,
        u=e_c / 2,
        omega1=omega1,
        omega2=omega2,
        mu=mu,
        e_c=e_c,
        c_eff=system.params.c_c / (4 * c_tilde_kappa) if c_tilde_kappa > 0 else math.inf,
        resonant=system.is_resonant,
        v_correction=v_correction,
        j_sloshing=j_sloshing,
        omega_s=omega_s,
        sloshing_correction=sloshing_correction,
    )
    if not couplings.resonant:
        logger.warning(
            "Transmons off resonance (%.4f vs %.4f GHz), J uses the mean Josephson energy",
            omega1,
            omega2,
        )
    if abs(j_total) > RWA_LIMIT * couplings.omega:
        logger.warning("J=%.1f MHz is beyond the rotating wave regime", j_total * 1e3)
    return couplings


def couplings_for(params: CircuitParams, *, renormalize: bool = True, **kwargs) -> EffectiveCouplings:
    """Effective couplings straight from device parameters"""
    system = eliminate_rigid_mode(build_mode_system(params), renormalize=renormalize)
    return effective_couplings(system, **kwargs)


def hopping_zero_crossing(
    params: CircuitParams,
    bracket: Tuple[float, float] = (0.0, 0.5),
    *,
    v_correction: bool = True,
    sloshing_correction: bool = True,
    renormalize: bool = True,
) -> float:
    """Coupler flux at which ``j_total`` vanishes"""

    def hopping(phi3: float) -> float:
        return couplings_for(
            params.replace(phi3=phi3),
            renormalize=renormalize,
            v_correction=v_correction,
            sloshing_correction=sloshing_correction,
        ).j_total

    low, high = bracket
    if hopping(low) * hopping(high) > 0:
        raise PreconditionError(f"j_total does not change sign over {bracket}")
    return brentq(hopping, low, high, xtol=1e-12)


def transmon_frequency_shift(params: CircuitParams, phi3_values: Iterable[float]) -> np.ndarray:
    """
    Shift of both transmon frequencies along a coupler sweep at fixed
    transmon fluxes, relative to the first point. Shape ``(points, 2)``.
    """
    frequencies = []
    for phi3 in phi3_values:
        couplings = couplings_for(params.replace(phi3=float(phi3)))
        frequencies.append((couplings.omega1, couplings.omega2))
    frequencies = np.array(frequencies)
    if not len(frequencies):
        raise ParameterError("no coupler flux given")
    return frequencies - frequencies[0]


class Term(enum.Flag):
    """Terms of the two-site Hamiltonian"""

    HOPPING = 1
    ONSITE = 2
    CROSS_KERR = 4
    CORRELATED_HOPPING = 8
    PAIR_TUNNELLING = 16
    FULL_QUARTIC = 32
    CHEMICAL_POTENTIAL = 64

    BOSE_HUBBARD = HOPPING | ONSITE | CROSS_KERR
    NUMBER_CONSERVING = HOPPING | ONSITE | CROSS_KERR | CORRELATED_HOPPING | PAIR_TUNNELLING


#: Rotating wave nonlinear couplings replaced by the full quartic term
RWA_COUPLINGS = Term.CROSS_KERR | Term.CORRELATED_HOPPING | Term.PAIR_TUNNELLING


@dataclasses.dataclass(frozen=True, eq=False)
class TwoSiteHamiltonian:
    """
    Two coupled nonlinear oscillators truncated to ``dim`` levels each, in
    the basis ``|n_a n_b>`` with index ``n_a * dim + n_b``.
    """

    dim: int
    matrix: np.ndarray
    terms: Term
    couplings: EffectiveCouplings

    def number(self, site: str) -> np.ndarray:
        n = np.diag(np.arange(self.dim, dtype=float))
        eye = np.eye(self.dim)
        if site == "a":
            return np.kron(n, eye)
        if site == "b":
            return np.kron(eye, n)
        raise ParameterError(f"unknown site {site!r}")

    def total_number(self) -> np.ndarray:
        return self.number("a") + self.number("b")

    def eigh(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.linalg.eigh(self.matrix)

    def state(self, n_a: int, n_b: int) -> int:
        return n_a * self.dim + n_b


def build_two_site(
    couplings: EffectiveCouplings, dim: int = 5, terms: Term = Term.BOSE_HUBBARD
) -> TwoSiteHamiltonian:
    """
    Two-site Bose-Hubbard Hamiltonian with the requested terms. The site
    energies ``omega_i n_i`` are always present.

    :param couplings: Effective parameters
    :param dim: Levels per site
    :param terms: Combination of :py:class:`Term` flags
    """
    if dim < 2:
        raise ParameterError(f"dim must be at least 2, got {dim}")
    if Term.FULL_QUARTIC in terms and terms & RWA_COUPLINGS:
        raise ConfigurationError("the full quartic coupling replaces the rotating wave terms")
    a1 = annihilation(dim)
    eye = np.eye(dim)
    a, b = np.kron(a1, eye), np.kron(eye, a1)
    n_a, n_b = a.T @ a, b.T @ b
    c = couplings

    h = c.omega1 * n_a + c.omega2 * n_b
    if Term.ONSITE in terms:
        h = h - c.u * (a.T @ a.T @ a @ a + b.T @ b.T @ b @ b)
    if Term.HOPPING in terms:
        h = h + c.j_total * (a.T @ b + b.T @ a)
    if Term.CROSS_KERR in terms:
        h = h + c.v * n_a @ n_b
    if Term.CORRELATED_HOPPING in terms:
        hop = a.T @ n_a @ b + b.T @ n_b @ a
        h = h + c.v / 6 * (hop + hop.T)
    if Term.PAIR_TUNNELLING in terms:
        pair = a.T @ a.T @ b @ b
        h = h + c.v / 4 * (pair + pair.T)
    if Term.FULL_QUARTIC in terms:
        x_a, x_b = a + a.T, b + b.T
        h = h + c.v / 4 * (x_a @ x_a) @ (x_b @ x_b)
    if Term.CHEMICAL_POTENTIAL in terms:
        h = h - (c.omega - c.mu) * (n_a + n_b)
    return TwoSiteHamiltonian(dim=dim, matrix=(h + h.T) / 2, terms=terms, couplings=couplings)


class TwoSiteLevels(NamedTuple):
    omega_plus: float
    omega_minus: float
    omega_11: float

    @property
    def shift_11(self) -> float:
        """``omega_11 - omega_plus - omega_minus``"""
        return self.omega_11 - self.omega_plus - self.omega_minus


def two_site_levels(hamiltonian: TwoSiteHamiltonian) -> TwoSiteLevels:
    """
    One and two excitation levels of a two-site Hamiltonian, identified by
    overlap: ``-`` with ``(|10> + |01>)/sqrt(2)``, ``+`` with the odd
    combination and ``11`` with ``|11>``. The labels follow
    :py:func:`kerr_coupler.hamiltonian.diagonalize`, so
    ``omega_plus - omega_minus = -2 j_total``.
    """
    energies, vectors = hamiltonian.eigh()
    index = hamiltonian.state
    ground = int(np.argmax(vectors[index(0, 0)] ** 2))
    minus = int(np.argmax((vectors[index(1, 0)] + vectors[index(0, 1)]) ** 2))
    plus = int(np.argmax((vectors[index(1, 0)] - vectors[index(0, 1)]) ** 2))
    doubly = int(np.argmax(vectors[index(1, 1)] ** 2))
    e0 = energies[ground]
    return TwoSiteLevels(
        omega_plus=float(energies[plus] - e0),
        omega_minus=float(energies[minus] - e0),
        omega_11=float(energies[doubly] - e0),
    )


@dataclasses.dataclass(frozen=True, eq=False)
class XXZCoefficients:
    """
    Qubit subspace Hamiltonian
    ``offset + h1 Sz1 + h2 Sz2 + xx Sx Sx + yy Sy Sy + zz Sz Sz`` with spin
    one half operators, ``Sz = +1/2`` for an empty site.
    """

    xx: float
    yy: float
    zz: float
    h1: float
    h2: float
    offset: float
    matrix: np.ndarray


def xxz_reduction(couplings: EffectiveCouplings) -> XXZCoefficients:
    """Restrict the two-site model to at most one excitation per site"""
    if couplings.e_c and couplings.e_c < 5 * abs(couplings.j_total):
        logger.warning(
            "E_C=%.1f MHz is not large against J=%.1f MHz, the qubit reduction is rough",
            couplings.e_c * 1e3,
            couplings.j_total * 1e3,
        )
    j, v = couplings.j_total, couplings.v
    xx = yy = 2 * j
    zz = v
    h1 = -couplings.omega1 - v / 2
    h2 = -couplings.omega2 - v / 2
    offset = (couplings.omega1 + couplings.omega2) / 2 + v / 4

    s_x = np.array([[0.0, 0.5], [0.5, 0.0]])
    s_y = np.array([[0.0, -0.5j], [0.5j, 0.0]])
    s_z = np.diag([0.5, -0.5])
    eye = np.eye(2)
    matrix = (
        offset * np.eye(4)
        + h1 * np.kron(s_z, eye)
        + h2 * np.kron(eye, s_z)
        + xx * np.kron(s_x, s_x)
        + yy * np.kron(s_y, s_y)
        + zz * np.kron(s_z, s_z)
    )
    return XXZCoefficients(
        xx=xx, yy=yy, zz=zz, h1=h1, h2=h2, offset=offset, matrix=np.real_if_close(matrix)
    )
