"""
kerr_coupler
~~~~~~~~~~~~

kerr_coupler is a circuit model and spectrum engine for two transmons
coupled through a nonlinear SQUID coupler, for Python 3.8+
"""
import asyncio
from typing import Optional, Sequence

from .circuit import (
    PRESETS,
    CircuitParams,
    ModeSystem,
    build_mode_system,
    build_node_matrices,
    josephson_energy,
    josephson_inductance,
    squid_energy,
)
from .modes import (
    NormalModeSet,
    classical_splitting,
    classical_splitting_zero,
    filter_frequency,
    normal_modes,
    normal_modes_vs_inductance,
    solve_normal_modes,
)
from .hamiltonian import (
    FockConfig,
    FockHamiltonian,
    LabeledSpectrum,
    build_full_hamiltonian,
    diagonalize,
    dipole_matrix_element,
    eliminate_rigid_mode,
    sloshing_levels,
)
from .effective import (
    EffectiveCouplings,
    Term,
    build_two_site,
    couplings_for,
    effective_couplings,
    hopping_zero_crossing,
    transmon_frequency_shift,
    two_site_levels,
    xxz_reduction,
)
from .core import BaseSweep, SweepPoint
from .sweeps import CouplingsSweep, ModesSweep, SpectrumSweep
from .mixins import AllMixin, Retune, RetuneMixin, StorePointMixin, TrackLabelsMixin
from .spectroscopy import (
    SweepResult,
    avoided_crossing_scan,
    cross_kerr_observable,
    fit_crossing,
    resonant_spectrum_vs_coupler,
    retune_to_resonance,
)
from .calibration import (
    CrosstalkMatrix,
    SpectrumPoint,
    calibrate_crosstalk,
    extract_sweetspot,
    fit_circuit_params,
    forward_model,
    load_spectrum_csv,
)
from .exceptions import (
    CalibrationError,
    ConfigurationError,
    FitError,
    KerrCouplerError,
    MatrixError,
    ParameterError,
    PreconditionError,
)
from .__version__ import __version__


class SimpleSpectrumSweep(AllMixin, SpectrumSweep):  # Full Hamiltonian
    """
    A simple helper class providing all-in-one functionalities for spectrum
    sweeps: label tracking, optional retuning and per-point storage.

    :param params: Device parameters, the swept flux is overridden per point
    :param values: Strictly monotone flux values of the swept channel
    :param fock: Truncation settings
    :param axis: Swept channel, ``'phi1'``, ``'phi2'`` or ``'phi3'``
    :param levels: Number of levels computed per point
    :param retune: Retuning rule applied to every point, for example
        :py:func:`retune_to_resonance`
    :param track_threshold: Minimal squared overlap of a trusted label
        continuation
    :param threads: Number of points evaluated concurrently
    :param loop: Asyncio loop used

    **Usage example**::

        class MySweep(SimpleSpectrumSweep):
            def __init__(self):
                self.rows = []
                super().__init__(params=CircuitParams.preset('full_model_fit'),
                                 values=numpy.linspace(0, 0.5, 51),
                                 fock=FockConfig(n_a=8, n_b=8, n_s=8),
                                 retune=retune_to_resonance)

            async def store_point(self, point):
                # Keep the dressed levels only
                self.rows.append((point.value,
                                  point.result.omega_minus,
                                  point.result.omega_plus))

        async def print_levels():
            async with MySweep() as sweep:
                async for point in sweep.points():
                    print(f"phi3={point.value} : {point.result.levels[:3]}")

        asyncio.run(print_levels())

    """

    def __init__(
        self,
        *,
        params: CircuitParams,
        values: Sequence[float],
        fock: FockConfig,
        axis: str = "phi3",
        levels: int = 12,
        retune: Optional[Retune] = None,
        track_threshold: float = 0.5,
        threads: int = 1,
        loop: asyncio.AbstractEventLoop = None,
    ) -> None:
        super().__init__(
            params=params,
            values=values,
            fock=fock,
            axis=axis,
            levels=levels,
            retune=retune,
            track_threshold=track_threshold,
            threads=threads,
            loop=loop,
        )


class SimpleModesSweep(StorePointMixin, RetuneMixin, ModesSweep):  # Classical modes
    """
    A simple helper class sweeping the classical normal modes with
    optional retuning and per-point storage.

    :param params: Device parameters, the swept flux is overridden per point
    :param values: Strictly monotone flux values of the swept channel
    :param axis: Swept channel
    :param retune: Retuning rule applied to every point
    :param threads: Number of points evaluated concurrently
    :param loop: Asyncio loop used

    **Usage example**::

        async def print_modes():
            sweep = SimpleModesSweep(params=CircuitParams.preset('one_excitation_fit'),
                                     values=numpy.linspace(0, 0.5, 101))
            async with sweep:
                async for point in sweep.points():
                    print(point.result.to_row(point.value))

        asyncio.run(print_modes())

    """

    def __init__(
        self,
        *,
        params: CircuitParams,
        values: Sequence[float],
        axis: str = "phi3",
        retune: Optional[Retune] = None,
        threads: int = 1,
        loop: asyncio.AbstractEventLoop = None,
    ) -> None:
        super().__init__(params=params, values=values, axis=axis, retune=retune, threads=threads, loop=loop)


class SimpleCouplingsSweep(StorePointMixin, RetuneMixin, CouplingsSweep):  # Two-site couplings
    """
    A simple helper class sweeping the effective couplings with optional
    retuning and per-point storage.

    :param params: Device parameters, the swept flux is overridden per point
    :param values: Strictly monotone flux values of the swept channel
    :param axis: Swept channel
    :param v_correction: Fold ``-V/6`` into the hopping
    :param sloshing_correction: Add the hopping mediated by the sloshing mode
    :param renormalize: Renormalize the couplings when eliminating the
        rigid mode
    :param mu: Chemical potential detuning
    :param retune: Retuning rule applied to every point
    :param threads: Number of points evaluated concurrently
    :param loop: Asyncio loop used

    **Usage example**::

        class MySweep(SimpleCouplingsSweep):
            async def store_point(self, point):
                # Only report the hopping sign changes
                if abs(point.result.j_total) < 1e-3:
                    print(f"J vanishes near phi3={point.value}")

        sweep = MySweep(params=CircuitParams.preset('one_excitation_fit'),
                        values=numpy.linspace(0, 0.5, 501))
        asyncio.run(sweep.run())

    """

    def __init__(
        self,
        *,
        params: CircuitParams,
        values: Sequence[float],
        axis: str = "phi3",
        v_correction: bool = True,
        sloshing_correction: bool = True,
        renormalize: bool = True,
        mu: float = 0.0,
        retune: Optional[Retune] = None,
        threads: int = 1,
        loop: asyncio.AbstractEventLoop = None,
    ) -> None:
        super().__init__(
            params=params,
            values=values,
            axis=axis,
            v_correction=v_correction,
            sloshing_correction=sloshing_correction,
            renormalize=renormalize,
            mu=mu,
            retune=retune,
            threads=threads,
            loop=loop,
        )
