"""
Sweeps module: Provide the concrete computations run at every sweep point
"""
from typing import Optional

from .circuit import CircuitParams, build_mode_system, build_node_matrices
from .core import BaseSweep
from .effective import EffectiveCouplings, effective_couplings
from .hamiltonian import (
    FockConfig,
    LabeledSpectrum,
    build_full_hamiltonian,
    diagonalize,
    eliminate_rigid_mode,
)
from .modes import NormalModeSet, solve_normal_modes


class ModesSweep(BaseSweep):
    """
    Classical normal modes of the linearized network at every point.

    See :class:`.BaseSweep` for keywords arguments.
    """

    def compute(self, params: CircuitParams) -> NormalModeSet:
        return solve_normal_modes(build_node_matrices(params))


class CouplingsSweep(BaseSweep):
    """
    Effective two-site couplings at every point.

    :param v_correction: Fold ``-V/6`` into the hopping
    :param sloshing_correction: Add the hopping mediated by the sloshing mode
    :param renormalize: Renormalize the couplings when eliminating the
        rigid mode
    :param mu: Chemical potential detuning

    See :class:`.BaseSweep` for other keywords arguments.
    """

    def __init__(
        self,
        *,
        v_correction: bool = True,
        sloshing_correction: bool = True,
        renormalize: bool = True,
        mu: float = 0.0,
        **kwargs
    ) -> None:
        self.v_correction = v_correction
        self.sloshing_correction = sloshing_correction
        self.renormalize = renormalize
        self.mu = mu
        super().__init__(**kwargs)

    def compute(self, params: CircuitParams) -> EffectiveCouplings:
        system = eliminate_rigid_mode(build_mode_system(params), renormalize=self.renormalize)
        return effective_couplings(
            system, v_correction=self.v_correction, sloshing_correction=self.sloshing_correction, mu=self.mu
        )


class SpectrumSweep(BaseSweep):
    """
    Labelled spectrum of the full Hamiltonian at every point.

    :param fock: Truncation settings (mandatory)
    :param levels: Number of levels computed per point

    See :class:`.BaseSweep` for other keywords arguments.
    """

    def __init__(self, *, fock: Optional[FockConfig] = None, levels: int = 12, **kwargs) -> None:
        if fock is None:
            raise TypeError("The truncation settings are mandatory")
        self.fock = fock
        self.levels = min(levels, fock.dim)
        super().__init__(**kwargs)

    def compute(self, params: CircuitParams) -> LabeledSpectrum:
        system = eliminate_rigid_mode(build_mode_system(params))
        return diagonalize(build_full_hamiltonian(system, self.fock), self.levels)
