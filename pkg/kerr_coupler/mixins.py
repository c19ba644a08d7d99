"""
Mixins module: Provide various sweep mixins
"""
import logging
from typing import AsyncIterator, Callable, Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .circuit import CircuitParams
from .core import SweepPoint

logger = logging.getLogger("kerr_coupler")

# Some type aliases
Retune = Callable[[CircuitParams], CircuitParams]


class RetuneMixin:
    """
    Mixin applying a retuning rule to the parameters of every point, for
    example to keep both transmons on resonance while the coupler is swept.

    :param retune: Callable mapping the parameters of a point to the
        parameters actually computed. ``None`` keeps the fluxes fixed.
    """

    def __init__(self, *, retune: Optional[Retune] = None, **kwargs) -> None:
        super().__init__(**kwargs)
        self.retune = retune

    async def params_at(self, value: float) -> CircuitParams:
        """
        See :py:func:`BaseSweep.params_at`
        """
        params = await super().params_at(value)
        if self.retune is None:
            return params
        return self.retune(params)


class TrackLabelsMixin:
    """
    Mixin following the levels of a spectrum sweep adiabatically: at each
    point, the levels are matched to those of the previous point by maximal
    total eigenvector overlap. Results exposing ``modes`` and ``vectors_in``
    are compared in the oscillator bases of the first point, since the
    truncated bases move with the biases.

    ``point.track[t]`` is the level index followed by track ``t`` (track
    ``t`` starts on level ``t``). A continuation whose squared overlap is
    below ``track_threshold`` is flagged in ``point.track_ambiguous``.

    :param track_threshold: Minimal squared overlap of a trusted continuation
    """

    def __init__(self, *, track_threshold: float = 0.5, **kwargs) -> None:
        super().__init__(**kwargs)
        self.track_threshold = track_threshold

    async def points(self) -> AsyncIterator[SweepPoint]:
        """
        See :py:func:`BaseSweep.points`
        """
        previous = None
        track = None
        reference = None
        async for point in super().points():
            vectors = getattr(point.result, "eigenvectors", None)
            if vectors is None:
                yield point
                continue

            modes = getattr(point.result, "modes", None)
            if modes and reference is None:
                reference = modes
            elif modes:
                vectors = point.result.vectors_in(reference)

            if previous is None:
                track = np.arange(vectors.shape[1])
                ambiguous = np.zeros(vectors.shape[1], dtype=bool)
            else:
                overlap = np.abs(previous.T @ vectors) ** 2
                rows, cols = linear_sum_assignment(-overlap)
                continuation = np.empty(len(rows), dtype=int)
                continuation[rows] = cols
                ambiguous = overlap[track, continuation[track]] < self.track_threshold
                track = continuation[track]
                if np.any(ambiguous):
                    logger.warning(
                        "Label tracking ambiguous at %s=%.6f for track(s) %s",
                        getattr(self, "axis", "axis"),
                        point.value,
                        np.flatnonzero(ambiguous).tolist(),
                    )
            previous = vectors
            yield point._replace(track=track.copy(), track_ambiguous=ambiguous)


class StorePointMixin:
    """
    Mixin calling :py:func:`StorePointMixin.store_point` on every point as
    soon as it is available, before it is yielded. Used to flush partial
    sweeps to disk.

    This mixin is not enough, you must implement
    :py:func:`StorePointMixin.store_point` in a subclass.
    """

    async def points(self) -> AsyncIterator[SweepPoint]:
        """
        See :py:func:`BaseSweep.points`
        """
        async for point in super().points():
            await self.store_point(point)
            yield point

    async def store_point(self, point: SweepPoint) -> None:
        """
        Callback called to store a point. You should override this method to
        implement your custom logic.

        :param point: The evaluated point
        """


class AllMixin(
    StorePointMixin,  # Store every point as soon as computed
    TrackLabelsMixin,  # Continuous labels along the sweep
    RetuneMixin,  # Optional retuning rule
):
    """
    Helper class to add all mixin with one class
    """
