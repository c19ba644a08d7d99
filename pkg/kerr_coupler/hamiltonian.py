"""
Core module: truncated Fock space Hamiltonian of the transmon, transmon
and sloshing modes, its diagonalization and the labelling of its levels
"""
import dataclasses
import logging
import math
from typing import Any, Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from scipy import sparse
from scipy.sparse.linalg import eigsh

from .circuit import CHARGING_CONSTANT, ModeSystem
from .exceptions import ConfigurationError, ParameterError, PreconditionError

logger = logging.getLogger("kerr_coupler")

# Some type aliases
Label = Tuple[int, int, int]
LevelKey = Union[str, Sequence[int]]
Operator = Optional[np.ndarray]

#: Edge population above which a level is flagged as not converged
EDGE_POPULATION_LIMIT = 1e-3

#: Gap between the two largest bare overlaps below which a label is ambiguous
AMBIGUITY_GAP = 0.01

#: Minimal weight for a dressed one excitation state to be identified
DRESSED_MIN_WEIGHT = 0.25

#: Columns of :py:meth:`LabeledSpectrum.to_rows`
SPECTRUM_COLUMNS = ("phi", "level_index", "energy_ghz", "label", "overlap")

# Coupler phase in mode coordinates: theta = A / 2 - B / 2 - S
_COUPLER_WEIGHTS = (0.5, -0.5, -1.0)


def eliminate_rigid_mode(system: ModeSystem, *, renormalize: bool = True) -> ModeSystem:
    """
    Drop the rigid mode, which carries no Josephson energy.

    :param system: Mode system to reduce
    :param renormalize: Fold the transmon to rigid coupling into the
        transmon capacitance and the transmon to transmon coupling instead
        of discarding it
    :return: A new system with ``rigid_mode_eliminated`` set
    """
    if system.rigid_mode_eliminated:
        return system
    shift = system.c_tilde_r * system.inv_c_tilde_abr ** 2 if renormalize else 0.0
    inverse = 1.0 / system.c_tilde - shift
    if inverse <= 0:
        raise ParameterError("rigid mode elimination gives a non positive transmon capacitance")
    return system.replace(
        c_tilde=1.0 / inverse,
        kappa=system.kappa - shift,
        c_tilde_abr=math.inf,
        rigid_mode_eliminated=True,
    )


@dataclasses.dataclass(frozen=True)
class FockConfig:
    """
    Truncation and expansion settings of the full Hamiltonian.

    ``coupler_order`` defaults to ``cosine_order``; setting it to 2 keeps
    only the quadratic part of the coupler junction. ``sloshing_floor``
    bounds the inductive energy used to scale the sloshing mode operators
    and defaults to the coupler bottom sweetspot energy.
    """

    n_a: int = 15  #: Levels kept for transmon A
    n_b: int = 15  #: Levels kept for transmon B
    n_s: int = 15  #: Levels kept for the sloshing mode
    cosine_order: int = 4  #: Highest power kept in the cosine expansions
    coupler_order: Optional[int] = None  #: Highest power kept for the coupler
    exact_cosine: bool = False  #: Use matrix cosines instead of expansions
    sloshing_floor: Optional[float] = None  #: Lower bound of the sloshing E_L
    dense_limit: int = 4096  #: Largest dimension solved with a dense solver

    def __post_init__(self) -> None:
        for name in ("n_a", "n_b", "n_s"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 3:
                raise ConfigurationError(f"{name} must be an integer >= 3, got {value!r}")
        for name in ("cosine_order", "coupler_order"):
            value = getattr(self, name)
            if value is None and name == "coupler_order":
                continue
            if not isinstance(value, int) or value % 2 or not 2 <= value <= 8:
                raise ConfigurationError(f"{name} must be an even integer in [2, 8], got {value!r}")
        if self.sloshing_floor is not None and self.sloshing_floor < 0:
            raise ConfigurationError(f"sloshing_floor must be non negative, got {self.sloshing_floor}")
        if self.dense_limit < 1:
            raise ConfigurationError("dense_limit must be positive")

    @property
    def dims(self) -> Tuple[int, int, int]:
        return (self.n_a, self.n_b, self.n_s)

    @property
    def dim(self) -> int:
        return self.n_a * self.n_b * self.n_s

    @property
    def effective_coupler_order(self) -> int:
        return self.cosine_order if self.coupler_order is None else self.coupler_order

    def replace(self, **changes: Any) -> "FockConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "FockConfig":
        known = {field.name for field in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"unknown truncation setting(s): {', '.join(unknown)}")
        return cls(**data)


def annihilation(dim: int) -> np.ndarray:
    """Truncated annihilation operator"""
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1)


def _hermite_functions(count: int, x: np.ndarray) -> np.ndarray:
    """Normalized Hermite functions ``h_0 .. h_{count-1}`` at ``x``"""
    h = np.zeros((count, x.size))
    h[0] = np.pi ** -0.25 * np.exp(-(x ** 2) / 2)
    if count > 1:
        h[1] = math.sqrt(2) * x * h[0]
    for n in range(2, count):
        h[n] = math.sqrt(2 / n) * x * h[n - 1] - math.sqrt((n - 1) / n) * h[n - 2]
    return h


@dataclasses.dataclass(frozen=True, eq=False)
class ModeOperators:
    """
    Phase and charge operators of one mode in the harmonic oscillator basis
    set by its charging energy ``e_c`` and inductive energy ``e_l``.

    The charge is stored as the real antisymmetric matrix ``P`` with
    ``N = i P``, so every operator of the Hamiltonian stays real.
    """

    dim: int
    e_c: float
    e_l: float

    @property
    def phase_scale(self) -> float:
        return (2 * self.e_c / self.e_l) ** 0.25

    @property
    def charge_scale(self) -> float:
        return (self.e_l / (32 * self.e_c)) ** 0.25

    def _position(self, pad: int) -> np.ndarray:
        a = annihilation(self.dim + pad)
        return a + a.T

    def phase_powers(self, order: int) -> List[np.ndarray]:
        """``[phi^0, ..., phi^order]`` computed in a padded space and truncated"""
        phase = self.phase_scale * self._position(order // 2 + 2)
        powers, current = [], np.eye(phase.shape[0])
        for _ in range(order + 1):
            powers.append(current[: self.dim, : self.dim].copy())
            current = current @ phase
        return powers

    def charge(self) -> np.ndarray:
        a = annihilation(self.dim)
        return self.charge_scale * (a.T - a)

    def charge_squared(self) -> np.ndarray:
        """``N^2 = -P^2``"""
        a = annihilation(self.dim + 1)
        p = a.T - a
        return (-(self.charge_scale ** 2) * (p @ p))[: self.dim, : self.dim]

    def cos_sin(self, weight: float) -> Tuple[np.ndarray, np.ndarray]:
        """``cos(weight phi)`` and ``sin(weight phi)`` from matrix functions"""
        phase = weight * self.phase_scale * self._position(max(16, self.dim))
        return (
            scipy.linalg.cosm(phase)[: self.dim, : self.dim],
            scipy.linalg.sinm(phase)[: self.dim, : self.dim],
        )

    def basis_change(self, reference: "ModeOperators") -> np.ndarray:
        """
        Overlaps ``<m, reference|n, self>`` between the oscillator bases of two
        modes sharing the phase coordinate, shape ``(reference.dim, self.dim)``.
        """
        scales = self.phase_scale * math.sqrt(2), reference.phase_scale * math.sqrt(2)
        width = max(scales) * (math.sqrt(2 * max(self.dim, reference.dim) + 1) + 8)
        phase, step = np.linspace(-width, width, 4097, retstep=True)
        mine = _hermite_functions(self.dim, phase / scales[0]) / math.sqrt(scales[0])
        theirs = _hermite_functions(reference.dim, phase / scales[1]) / math.sqrt(scales[1])
        return theirs @ mine.T * step


class ProductTerm(NamedTuple):
    coefficient: float
    operators: Tuple[Operator, Operator, Operator]

    @property
    def is_single_mode(self) -> bool:
        return sum(op is not None for op in self.operators) <= 1


def _mode_operators(system: ModeSystem, config: FockConfig) -> Tuple[ModeOperators, ...]:
    e_l_a = system.ej1_bare + system.ej_c / 4
    e_l_b = system.ej2_bare + system.ej_c / 4
    floor = system.params.ej_c_min if config.sloshing_floor is None else config.sloshing_floor
    e_l_s = max(system.ej_c, floor)
    if e_l_s <= 1e-9:
        raise ConfigurationError(
            "sloshing mode has no inductive energy, set a positive sloshing_floor"
        )
    return (
        ModeOperators(config.n_a, system.e_c, e_l_a),
        ModeOperators(config.n_b, system.e_c, e_l_b),
        ModeOperators(config.n_s, system.e_c_s, e_l_s),
    )


def _charge_terms(system: ModeSystem, modes: Sequence[ModeOperators]) -> List[ProductTerm]:
    op_a, op_b, op_s = modes
    p_a, p_b, p_s = op_a.charge(), op_b.charge(), op_s.charge()
    terms = [
        ProductTerm(4 * system.e_c, (op_a.charge_squared(), None, None)),
        ProductTerm(4 * system.e_c, (None, op_b.charge_squared(), None)),
        ProductTerm(4 * system.e_c_s, (None, None, op_s.charge_squared())),
        # N_A N_B = -P_A P_B
        ProductTerm(-8 * CHARGING_CONSTANT * system.kappa, (p_a, p_b, None)),
    ]
    g = 8 * CHARGING_CONSTANT * system.inv_c_tilde_abs
    if g:
        terms.append(ProductTerm(-g, (p_a, None, p_s)))
        terms.append(ProductTerm(g, (None, p_b, p_s)))
    return terms


def _cosine_series(order: int) -> List[Tuple[int, float]]:
    """``(power, coefficient)`` of ``cos(x) - 1`` up to ``order``"""
    return [(2 * k, (-1) ** k / math.factorial(2 * k)) for k in range(1, order // 2 + 1)]


def _expanded_josephson_terms(
    system: ModeSystem, config: FockConfig, modes: Sequence[ModeOperators]
) -> List[ProductTerm]:
    order = max(config.cosine_order, config.effective_coupler_order)
    powers = [mode.phase_powers(order) for mode in modes]
    terms = []
    for power, weight in _cosine_series(config.cosine_order):
        terms.append(ProductTerm(-system.ej1_bare * weight, (powers[0][power], None, None)))
        terms.append(ProductTerm(-system.ej2_bare * weight, (None, powers[1][power], None)))

    w_a, w_b, w_s = _COUPLER_WEIGHTS
    for power, weight in _cosine_series(config.effective_coupler_order):
        for i in range(power + 1):
            for j in range(power + 1 - i):
                k = power - i - j
                multinomial = math.factorial(power) // (
                    math.factorial(i) * math.factorial(j) * math.factorial(k)
                )
                coefficient = -system.ej_c * weight * multinomial * w_a ** i * w_b ** j * w_s ** k
                operators = tuple(
                    powers[mode][exponent] if exponent else None
                    for mode, exponent in enumerate((i, j, k))
                )
                terms.append(ProductTerm(coefficient, operators))
    return terms


def _exact_josephson_terms(system: ModeSystem, modes: Sequence[ModeOperators]) -> List[ProductTerm]:
    cos_a, _ = modes[0].cos_sin(1.0)
    cos_b, _ = modes[1].cos_sin(1.0)
    terms = [
        ProductTerm(-system.ej1_bare, (cos_a, None, None)),
        ProductTerm(-system.ej2_bare, (None, cos_b, None)),
    ]
    (ca, sa), (cb, sb), (cs, ss) = (
        mode.cos_sin(weight) for mode, weight in zip(modes, _COUPLER_WEIGHTS)
    )
    # cos(a + b + s) expanded in products of single mode functions
    for sign, operators in (
        (1.0, (ca, cb, cs)),
        (-1.0, (ca, sb, ss)),
        (-1.0, (sa, cb, ss)),
        (-1.0, (sa, sb, cs)),
    ):
        terms.append(ProductTerm(-system.ej_c * sign, operators))
    return terms


def _assemble(terms: Sequence[ProductTerm], dims: Tuple[int, int, int]) -> sparse.csr_matrix:
    size = int(np.prod(dims))
    total = sparse.csr_matrix((size, size))
    for term in terms:
        if term.coefficient == 0:
            continue
        factors = [
            sparse.identity(n, format="csr") if op is None else sparse.csr_matrix(op)
            for op, n in zip(term.operators, dims)
        ]
        product = sparse.kron(sparse.kron(factors[0], factors[1], format="csr"), factors[2], format="csr")
        total = total + term.coefficient * product
    total = ((total + total.T) / 2).tocsr()
    total.eliminate_zeros()
    return total


def _single_mode_matrices(
    terms: Sequence[ProductTerm], dims: Tuple[int, int, int]
) -> List[np.ndarray]:
    matrices = [np.zeros((n, n)) for n in dims]
    for term in terms:
        if not term.is_single_mode:
            continue
        for mode, op in enumerate(term.operators):
            if op is not None:
                matrices[mode] += term.coefficient * op
    return [(m + m.T) / 2 for m in matrices]


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Make the largest component of every column positive"""
    rows = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[rows, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


@dataclasses.dataclass(frozen=True, eq=False)
class FockHamiltonian:
    """
    Sparse Hamiltonian on the product space A x B x S with the bare
    single mode eigenbases used to label its levels.
    """

    matrix: sparse.csr_matrix  #: Hamiltonian in GHz
    config: FockConfig  #: Truncation used
    system: ModeSystem  #: Mode system it was built from
    modes: Tuple[ModeOperators, ...]  #: Operators of A, B and S
    bare_energies: Tuple[np.ndarray, ...]  #: Single mode reference spectra
    bare_vectors: Tuple[np.ndarray, ...]  #: Single mode reference eigenbases

    @property
    def dims(self) -> Tuple[int, int, int]:
        return self.config.dims

    @property
    def dim(self) -> int:
        return self.config.dim

    def position(self, mode: str) -> sparse.csr_matrix:
        """``a + a^dagger`` of one mode embedded in the product space"""
        index = _mode_index(mode)
        factors = []
        for k, n in enumerate(self.dims):
            if k == index:
                a = annihilation(n)
                factors.append(sparse.csr_matrix(a + a.T))
            else:
                factors.append(sparse.identity(n, format="csr"))
        return sparse.kron(sparse.kron(factors[0], factors[1]), factors[2], format="csr")

    def exchange_operator(self) -> sparse.csr_matrix:
        """
        Mirror symmetry of the circuit: swap the transmons and flip the
        sloshing mode, ``|a, b, s> -> (-1)^s |b, a, s>``.
        """
        n_a, n_b, n_s = self.dims
        if n_a != n_b:
            raise ParameterError("exchange needs equal transmon truncations")
        a, b, s = np.meshgrid(np.arange(n_a), np.arange(n_b), np.arange(n_s), indexing="ij")
        source = np.ravel_multi_index((a, b, s), self.dims).ravel()
        target = np.ravel_multi_index((b, a, s), self.dims).ravel()
        values = ((-1.0) ** s).ravel()
        return sparse.csr_matrix((values, (target, source)), shape=(self.dim, self.dim))


def _mode_index(mode: str) -> int:
    try:
        return {"a": 0, "b": 1, "s": 2}[mode.lower()]
    except (KeyError, AttributeError):
        raise ParameterError(f"unknown mode {mode!r}, expected 'a', 'b' or 's'") from None


def build_full_hamiltonian(
    system: ModeSystem, config: Optional[FockConfig] = None
) -> FockHamiltonian:
    """
    Build the truncated Hamiltonian: charging terms of the three modes,
    their capacitive couplings and the transmon and coupler junction
    energies, expanded to ``config.cosine_order`` or exact.

    :param system: Mode system with the rigid mode eliminated
    :param config: Truncation settings, defaults to :py:class:`FockConfig`
    """
    if not system.rigid_mode_eliminated:
        raise PreconditionError("the rigid mode must be eliminated first")
    config = FockConfig() if config is None else config
    modes = _mode_operators(system, config)

    charge_terms = _charge_terms(system, modes)
    expanded = _expanded_josephson_terms(system, config, modes)
    if config.exact_cosine:
        terms = charge_terms + _exact_josephson_terms(system, modes)
    else:
        terms = charge_terms + expanded
    matrix = _assemble(terms, config.dims)

    bare_energies, bare_vectors = [], []
    for reference in _single_mode_matrices(charge_terms + expanded, config.dims):
        energies, vectors = scipy.linalg.eigh(reference)
        bare_energies.append(energies)
        bare_vectors.append(_fix_signs(vectors))
    logger.debug(
        "Full Hamiltonian built: dims=%s, nnz=%d, exact_cosine=%s",
        config.dims,
        matrix.nnz,
        config.exact_cosine,
    )
    return FockHamiltonian(
        matrix=matrix,
        config=config,
        system=system,
        modes=modes,
        bare_energies=tuple(bare_energies),
        bare_vectors=tuple(bare_vectors),
    )


class Level(NamedTuple):
    energy: float
    label: Label
    overlap: float
    ambiguous: bool


def _label_text(label: Label) -> str:
    return "|" + "".join(str(n) for n in label) + ">"


@dataclasses.dataclass(frozen=True, eq=False)
class LabeledSpectrum:
    """
    Lowest levels of a full Hamiltonian, labelled by their largest overlap
    with the bare product states ``|n_a n_b n_s>``.

    ``dressed`` maps ``"-"`` to the level closest to the even one excitation
    combination (the branch unaffected by the coupler) and ``"+"`` to the
    level closest to the odd one; either may be ``None``.
    """

    energies: np.ndarray
    labels: Tuple[Label, ...]
    overlaps: np.ndarray
    ambiguous: np.ndarray
    eigenvectors: np.ndarray
    edge_population: np.ndarray
    one_excitation_weight: np.ndarray
    dressed: Mapping[str, Optional[int]]
    dressed_weights: Mapping[str, float]
    modes: Tuple[ModeOperators, ...] = ()  #: Oscillator bases of the eigenvectors

    def vectors_in(self, reference: Sequence[ModeOperators]) -> np.ndarray:
        """
        Eigenvectors expressed in the oscillator bases of ``reference``, so
        that spectra computed at different biases can be compared.
        """
        if not self.modes:
            return self.eigenvectors
        changes = [mode.basis_change(other) for mode, other in zip(self.modes, reference)]
        tensor = self.eigenvectors.reshape(*(mode.dim for mode in self.modes), -1)
        moved = np.einsum("ai,bj,ck,ijkl->abcl", *changes, tensor, optimize=True)
        return moved.reshape(-1, tensor.shape[-1])

    @property
    def levels(self) -> List[Level]:
        return [
            Level(float(e), label, float(o), bool(a))
            for e, label, o, a in zip(self.energies, self.labels, self.overlaps, self.ambiguous)
        ]

    @property
    def converged(self) -> bool:
        """Truncation check on the lowest levels"""
        lowest = self.edge_population[: min(6, len(self.energies))]
        return bool(np.all(lowest < EDGE_POPULATION_LIMIT))

    def index_of(self, key: LevelKey) -> int:
        """
        Level index of a bare label (``(1, 1, 0)`` or ``"110"``) or of a
        dressed state (``"+"`` or ``"-"``).
        """
        if key in ("+", "-"):
            index = self.dressed.get(key)
            if index is None:
                raise KeyError(key)
            return index
        if isinstance(key, str):
            key = tuple(int(c) for c in key.strip("|>"))
        key = tuple(key)
        try:
            return self.labels.index(key)
        except ValueError:
            raise KeyError(key) from None

    def transition(self, key: LevelKey) -> float:
        """Energy of a level above the ground state"""
        return float(self.energies[self.index_of(key)] - self.energies[self.index_of((0, 0, 0))])

    def transition_at(self, index: int) -> float:
        """Energy of level ``index`` above the ground state"""
        return float(self.energies[index] - self.energies[self.index_of((0, 0, 0))])

    def _maybe(self, key: LevelKey) -> Optional[float]:
        try:
            return self.transition(key)
        except KeyError:
            return None

    @property
    def omega_plus(self) -> Optional[float]:
        return self._maybe("+")

    @property
    def omega_minus(self) -> Optional[float]:
        return self._maybe("-")

    @property
    def omega_10(self) -> Optional[float]:
        return self._maybe((1, 0, 0))

    @property
    def omega_01(self) -> Optional[float]:
        return self._maybe((0, 1, 0))

    @property
    def omega_11(self) -> Optional[float]:
        return self._maybe((1, 1, 0))

    @property
    def omega_20(self) -> Optional[float]:
        return self._maybe((2, 0, 0))

    @property
    def omega_02(self) -> Optional[float]:
        return self._maybe((0, 2, 0))

    def one_excitation_pair(self) -> Tuple[int, int]:
        """The two levels with most weight on ``|100>`` and ``|010>``, by energy"""
        if len(self.energies) < 2:
            raise KeyError("one excitation pair")
        pair = np.argsort(-self.one_excitation_weight, kind="stable")[:2]
        return tuple(sorted(int(i) for i in pair))

    def to_rows(self, value: float) -> List[Tuple[Any, ...]]:
        return [
            (float(value), index, float(level.energy), _label_text(level.label), float(level.overlap))
            for index, level in enumerate(self.levels)
        ]


def _eigensystem(hamiltonian: FockHamiltonian, levels: int) -> Tuple[np.ndarray, np.ndarray]:
    if hamiltonian.dim <= hamiltonian.config.dense_limit:
        return scipy.linalg.eigh(hamiltonian.matrix.toarray(), subset_by_index=[0, levels - 1])
    if levels >= hamiltonian.dim:
        raise ParameterError("the sparse solver needs fewer levels than the dimension")
    energies, vectors = eigsh(hamiltonian.matrix, k=levels, which="SA")
    order = np.argsort(energies)
    return energies[order], vectors[:, order]


def diagonalize(hamiltonian: FockHamiltonian, levels: int = 12) -> LabeledSpectrum:
    """
    Compute and label the lowest ``levels`` eigenstates.

    Each level gets the bare product label of largest overlap, greedily and
    without repetition, starting from the most unambiguous level.
    """
    if not 1 <= levels <= hamiltonian.dim:
        raise ParameterError(f"levels must lie in [1, {hamiltonian.dim}], got {levels}")
    energies, vectors = _eigensystem(hamiltonian, levels)
    vectors = _fix_signs(vectors)

    dims = hamiltonian.dims
    tensor = vectors.reshape(*dims, levels)
    u_a, u_b, u_s = hamiltonian.bare_vectors
    coefficients = np.einsum("ia,jb,ks,ijkl->absl", u_a, u_b, u_s, tensor, optimize=True)
    weights = (coefficients ** 2).reshape(-1, levels)

    labels: List[Optional[Label]] = [None] * levels
    overlaps = np.zeros(levels)
    ambiguous = np.zeros(levels, dtype=bool)
    taken = set()
    for level in np.argsort(-weights.max(axis=0), kind="stable"):
        order = np.argsort(-weights[:, level], kind="stable")
        ambiguous[level] = weights[order[0], level] - weights[order[1], level] < AMBIGUITY_GAP
        for flat in order:
            if flat not in taken:
                taken.add(flat)
                labels[level] = tuple(int(n) for n in np.unravel_index(flat, dims))
                overlaps[level] = weights[flat, level]
                break

    c_100, c_010 = coefficients[1, 0, 0, :], coefficients[0, 1, 0, :]
    even = (c_100 + c_010) ** 2 / 2
    odd = (c_100 - c_010) ** 2 / 2
    minus = int(np.argmax(even))
    odd_masked = odd.copy()
    odd_masked[minus] = -1.0
    plus = int(np.argmax(odd_masked))
    dressed = {
        "-": minus if even[minus] >= DRESSED_MIN_WEIGHT else None,
        "+": plus if odd_masked[plus] >= DRESSED_MIN_WEIGHT else None,
    }

    squared = tensor ** 2
    edge = np.max(
        np.stack(
            [
                squared[-1, :, :, :].sum(axis=(0, 1)),
                squared[:, -1, :, :].sum(axis=(0, 1)),
                squared[:, :, -1, :].sum(axis=(0, 1)),
            ]
        ),
        axis=0,
    )
    spectrum = LabeledSpectrum(
        energies=np.asarray(energies),
        labels=tuple(labels),
        overlaps=overlaps,
        ambiguous=ambiguous,
        eigenvectors=vectors,
        edge_population=edge,
        one_excitation_weight=c_100 ** 2 + c_010 ** 2,
        dressed=dressed,
        dressed_weights={"-": float(even[minus]), "+": float(odd_masked[plus])},
        modes=hamiltonian.modes,
    )
    if not spectrum.converged:
        logger.warning(
            "Fock truncation %s not converged: edge population %.2e",
            dims,
            float(edge[: min(6, levels)].max()),
        )
    return spectrum


def dipole_matrix_element(
    hamiltonian: FockHamiltonian, spectrum: LabeledSpectrum, i: LevelKey, j: LevelKey, mode: str = "a"
) -> float:
    """``|<i| (a + a^dagger) |j>|`` for the ladder operator of ``mode``"""
    v_i = spectrum.eigenvectors[:, _resolve(spectrum, i)]
    v_j = spectrum.eigenvectors[:, _resolve(spectrum, j)]
    return float(abs(v_i @ (hamiltonian.position(mode) @ v_j)))


def _resolve(spectrum: LabeledSpectrum, key: Union[int, LevelKey]) -> int:
    if isinstance(key, (int, np.integer)):
        return int(key)
    return spectrum.index_of(key)


def sloshing_levels(spectrum: LabeledSpectrum) -> Dict[int, float]:
    """Transitions to the resolved pure sloshing levels ``|0 0 n>``, keyed by n"""
    return {
        label[2]: spectrum.transition(label)
        for label in spectrum.labels
        if label[0] == label[1] == 0 and label[2] > 0
    }
