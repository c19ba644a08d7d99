"""
Core module: define the root sweep class with main logic
"""
import abc
import asyncio
import collections
import concurrent.futures
import logging
from typing import Any, AsyncIterator, List, NamedTuple, Optional, Sequence

import numpy as np

from .circuit import FLUX_AXES, CircuitParams
from .exceptions import ParameterError

logger = logging.getLogger("kerr_coupler")


class SweepPoint(NamedTuple):
    """One evaluated point of a flux sweep"""

    index: int  #: Position along the sweep axis
    value: float  #: Flux bias of the swept channel
    params: CircuitParams  #: Parameters the point was computed with
    result: Any  #: Output of :py:func:`BaseSweep.compute`
    track: Optional[np.ndarray] = None  #: Level index followed by each track
    track_ambiguous: Optional[np.ndarray] = None  #: Low overlap continuation per track


def _check_axis(axis: str, values: Sequence[float]) -> np.ndarray:
    if axis not in FLUX_AXES:
        raise ParameterError(f"unknown sweep axis {axis!r}, expected one of {FLUX_AXES}")
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or not len(values):
        raise ParameterError("sweep values must be a non empty 1-D sequence")
    if not np.all(np.isfinite(values)):
        raise ParameterError("sweep values must be finite")
    steps = np.diff(values)
    if len(steps) and not (np.all(steps > 0) or np.all(steps < 0)):
        raise ParameterError("sweep values must be strictly monotone")
    return values


class BaseSweep(abc.ABC):
    """
    Base low-level flux sweep class.

    Can not be used directly: must be sub-classed with at least a
    :py:func:`BaseSweep.compute` implementation. The class drives the
    evaluation of every point of the sweep in a thread pool and yields the
    points in axis order. Additional functionalities can be added with
    provided mixins.

    :param params: Device parameters, the swept flux is overridden per point
    :param values: Strictly monotone flux values of the swept channel
    :param axis: Swept channel, ``'phi1'``, ``'phi2'`` or ``'phi3'``
    :param threads: Number of points evaluated concurrently
    :param loop: Asyncio loop used

    This class supports the asynchronous context manager protocol.

    All main members are coroutine, even if the default implementation does
    not need it. With this convention, sub classes and mixins can easily
    override these members.

    See :py:class:`SimpleSpectrumSweep` for an usage example.
    """

    params: CircuitParams  #: Parameters of every other bias
    values: np.ndarray  #: Sweep points
    axis: str  #: Swept flux channel
    threads: int  #: Worker threads evaluating points
    executor: Optional[concurrent.futures.ThreadPoolExecutor]  #: Running pool
    should_stop: bool  #: Set to True to stop the sweep

    def __init__(
        self,
        *,
        params: CircuitParams,
        values: Sequence[float],
        axis: str = "phi3",
        threads: int = 1,
        loop: asyncio.AbstractEventLoop = None,
    ) -> None:
        if threads < 1:
            raise ParameterError(f"threads must be at least 1, got {threads}")
        self.params = params
        self.values = _check_axis(axis, values)
        self.axis = axis
        self.threads = threads
        self._loop = loop
        self.executor = None
        self.should_stop = False
        super().__init__()

    # -------------------- High level api --------------------

    async def start(self) -> None:
        """
        Create the worker pool.

        Most of the time, use the async context manager interface that will
        call this method directly.
        """
        if self.executor is None:
            self.executor = concurrent.futures.ThreadPoolExecutor(
                max_workers=self.threads, thread_name_prefix="kerr_coupler"
            )
        self.should_stop = False
        logger.info("Sweep %s: %d points, %d thread(s)", self.axis, len(self.values), self.threads)

    async def points(self) -> AsyncIterator[SweepPoint]:
        """
        Asynchronous generator that yields every evaluated point, in axis
        order::

            async for point in sweep.points():
                print(point.value, point.result)

        Up to ``threads`` points are computed ahead of the one being
        yielded. Calling :py:func:`BaseSweep.ask_stop` inside the loop body
        stops the generator before the next point.
        """
        owned = self.executor is None
        if owned:
            await self.start()
        pending = collections.deque()
        next_index = 0
        try:
            while next_index < len(self.values) or pending:
                while next_index < len(self.values) and len(pending) < self.threads:
                    task = self.loop.create_task(
                        self.evaluate(next_index, float(self.values[next_index]))
                    )
                    pending.append(task)
                    next_index += 1
                if self.should_stop:
                    return
                point = await pending.popleft()
                logger.debug("Sweep %s: point %d done (%s=%.6f)", self.axis, point.index, self.axis, point.value)
                yield point
        finally:
            for task in pending:
                task.cancel()
            if owned:
                await self.stop()

    async def run(self) -> List[SweepPoint]:
        """Evaluate the whole sweep and return its points"""
        return [point async for point in self.points()]

    async def ask_stop(self) -> None:
        """
        Ask the sweep to stop::

            async for point in sweep.points():
                ...
                if ...:
                    await sweep.ask_stop()

        Points already submitted to the pool are cancelled.
        """
        self.should_stop = True

    async def stop(self) -> None:
        """Stop the sweep and shut the worker pool down"""
        await self.ask_stop()
        if self.executor is not None:
            executor, self.executor = self.executor, None
            # Running computations finish in the default pool, off the loop
            await self.loop.run_in_executor(None, executor.shutdown)
        logger.info("Sweep %s stopped", self.axis)

    # -------------------- Point logic --------------------

    async def params_at(self, value: float) -> CircuitParams:
        """
        Provide the parameters of the point at ``value`` of the swept
        channel
        """
        return self.params.replace(**{self.axis: value})

    @abc.abstractmethod
    def compute(self, params: CircuitParams) -> Any:
        """
        Abstract method computing the result of one point. It runs in a
        worker thread and must not touch the sweep state.
        """

    async def evaluate(self, index: int, value: float) -> SweepPoint:
        """Compute one point in the worker pool"""
        params = await self.params_at(value)
        result = await self.loop.run_in_executor(self.executor, self.compute, params)
        return SweepPoint(index=index, value=value, params=params, result=result)

    # -------------------- SPECIALS METHODS -------------------- #

    @property
    def loop(self) -> asyncio.AbstractEventLoop:
        """
        Running event loop
        """
        if self._loop is None:
            return asyncio.get_running_loop()
        return self._loop

    # Asynchronous context manager

    async def __aenter__(self):
        await self.start()
        return self

    async def __aexit__(self, exc_type, exc, tb):
        await self.stop()
