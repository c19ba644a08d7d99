"""
Command line module: ``kerr-coupler`` console script running the pipeline
from one JSON run configuration
"""
import argparse
import asyncio
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence

import numpy as np

from . import SimpleCouplingsSweep, SimpleModesSweep, SimpleSpectrumSweep
from .calibration import (
    FIT_PARAMETERS,
    MODEL_TRANSITIONS,
    CrosstalkMatrix,
    SpectrumPoint,
    SweetspotObservation,
    calibrate_crosstalk,
    fit_circuit_params,
    forward_model,
    load_spectrum_csv,
)
from .circuit import FLUX_AXES, CircuitParams
from .core import SweepPoint
from .effective import COUPLINGS_COLUMNS, couplings_for
from .exceptions import ConfigurationError, KerrCouplerError, ParameterError
from .export import FORMATS, TableSink, provenance, write_json
from .hamiltonian import SPECTRUM_COLUMNS, FockConfig
from .modes import MODES_COLUMNS
from .spectroscopy import (
    BRANCH_COLUMNS,
    J_SOURCES,
    KERR_COLUMNS,
    KERR_PHI3_RANGE,
    add_frequency_noise,
    avoided_crossing_scan,
    cross_kerr_observable,
    fit_crossing,
    retune_to_resonance,
)

logger = logging.getLogger("kerr_coupler")

COMMANDS = ("modes", "spectrum", "couplings", "crossing", "kerr", "fit", "calibrate")

#: Allowed keys of every configuration section
SECTION_KEYS: Dict[str, frozenset] = {
    "sweep": frozenset({"axis", "start", "stop", "points"}),
    "spectrum": frozenset({"levels", "retune", "track_threshold"}),
    "couplings": frozenset({"v_correction", "sloshing_correction", "renormalize", "mu", "retune"}),
    "crossing": frozenset({"start", "stop", "points", "window", "levels"}),
    "kerr": frozenset({"j_source", "coupler_order", "retune", "levels"}),
    "fit": frozenset({"data", "synthetic", "free", "model", "restarts", "perturbation", "max_nfev"}),
    "calibrate": frozenset({"data", "synthetic", "sweetspots"}),
}
TOP_LEVEL_KEYS = frozenset({"preset", "params", "params_file", "fock"}) | frozenset(SECTION_KEYS)

#: Commands sweeping along the ``sweep`` section
SWEEP_COMMANDS = ("modes", "spectrum", "couplings", "kerr")

OBSERVATION_HEADER = ("dof", "offset", "applied_phi1", "applied_phi2", "applied_phi3")

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2


# -------------------- Run configuration --------------------


@dataclasses.dataclass(frozen=True)
class SweepRange:
    axis: str
    start: float
    stop: float
    points: int

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], *, section: str = "sweep", axis: str = "phi3") -> "SweepRange":
        _check_keys(section, data, SECTION_KEYS["sweep"])
        try:
            sweep = cls(
                axis=str(data.get("axis", axis)),
                start=float(data["start"]),
                stop=float(data["stop"]),
                points=data["points"],
            )
        except KeyError as e:
            raise ConfigurationError(f"{section}: missing {e.args[0]!r}") from None
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"{section}: {e}") from None
        if sweep.axis not in FLUX_AXES:
            raise ConfigurationError(f"{section}: unknown axis {sweep.axis!r}, expected one of {FLUX_AXES}")
        if not isinstance(sweep.points, int) or isinstance(sweep.points, bool) or sweep.points < 1:
            raise ConfigurationError(f"{section}: points must be a positive integer")
        if sweep.points > 1 and sweep.start == sweep.stop:
            raise ConfigurationError(f"{section}: empty range")
        return sweep

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.points)


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """
    Validated run configuration.

    :param params: Device parameters
    :param fock: Truncation settings
    :param sweep: Sweep range of the sweeping commands
    :param sections: Raw command sections
    :param raw: Configuration document, hashed in the provenance
    :param base_dir: Directory of the configuration, data paths are
        relative to it
    """

    params: CircuitParams
    fock: FockConfig
    sweep: Optional[SweepRange]
    sections: Dict[str, Dict[str, Any]]
    raw: Dict[str, Any]
    base_dir: Path

    def section(self, name: str) -> Dict[str, Any]:
        return self.sections.get(name, {})

    def path(self, value: str) -> Path:
        path = Path(value)
        return path if path.is_absolute() else self.base_dir / path

    def validate_for(self, command: str) -> None:
        """Check everything ``command`` needs before anything is computed"""
        if command not in COMMANDS:
            raise ConfigurationError(f"unknown command {command!r}")
        if command in SWEEP_COMMANDS and self.sweep is None:
            raise ConfigurationError(f"{command} needs a 'sweep' section")
        getattr(self, f"_validate_{command}", lambda: None)()

    def _validate_crossing(self) -> None:
        crossing = self.section("crossing")
        if {"start", "stop", "points"} & set(crossing):
            SweepRange.from_dict(
                {key: crossing[key] for key in ("start", "stop", "points") if key in crossing},
                section="crossing",
                axis="phi1",
            )
        _check_positive_int("crossing", crossing, "levels")
        _check_positive_int("crossing", crossing, "points")

    def _validate_kerr(self) -> None:
        kerr = self.section("kerr")
        if kerr.get("j_source", "effective") not in J_SOURCES:
            raise ConfigurationError(f"kerr: unknown j_source {kerr['j_source']!r}, expected one of {J_SOURCES}")
        order = kerr.get("coupler_order")
        if order is not None:
            FockConfig.from_dict(dict(self.fock.to_dict(), coupler_order=order))
        _check_positive_int("kerr", kerr, "levels")
        low, high = KERR_PHI3_RANGE
        if self.sweep.axis != "phi3" or not (low <= self.sweep.start <= high and low <= self.sweep.stop <= high):
            raise ConfigurationError(f"kerr: the sweep must stay on phi3 within [{low}, {high}]")

    def _validate_spectrum(self) -> None:
        _check_positive_int("spectrum", self.section("spectrum"), "levels")

    def _validate_fit(self) -> None:
        fit = self.section("fit")
        model = fit.get("model", "simplified")
        if model not in MODEL_TRANSITIONS:
            raise ConfigurationError(f"fit: unknown model {model!r}")
        unknown = sorted(set(fit.get("free", ())) - set(FIT_PARAMETERS))
        if unknown:
            raise ConfigurationError(f"fit: cannot free {', '.join(unknown)}")
        _check_positive_int("fit", fit, "restarts")
        _check_positive_int("fit", fit, "max_nfev")
        _check_source("fit", fit, self)
        if "data" in fit:
            _check_points(load_spectrum_csv(self.path(fit["data"])), model)
            return
        synthetic = fit["synthetic"]
        _check_keys("fit.synthetic", synthetic, {"truth", "phi3", "transitions", "noise_mhz"})
        _truth(self.params, synthetic)
        transitions = synthetic.get("transitions", ["minus", "plus"])
        bad = sorted(set(transitions) - set(MODEL_TRANSITIONS[model]))
        if bad:
            raise ConfigurationError(f"fit.synthetic: transition(s) {', '.join(bad)} not in the {model} model")
        if not synthetic.get("phi3"):
            raise ConfigurationError("fit.synthetic: phi3 must list at least one bias")

    def _validate_calibrate(self) -> None:
        calibrate = self.section("calibrate")
        _check_source("calibrate", calibrate, self)
        if "data" in calibrate:
            load_observations_csv(self.path(calibrate["data"]))
            return
        synthetic = calibrate["synthetic"]
        _check_keys("calibrate.synthetic", synthetic, {"m", "offsets", "values", "noise"})
        _crosstalk_truth(calibrate)
        if len(synthetic.get("values", ())) < 2:
            raise ConfigurationError("calibrate.synthetic: values must list at least two foreign biases")


def _truth(params: CircuitParams, synthetic: Mapping[str, Any]) -> CircuitParams:
    """Parameters generating synthetic data: the run parameters with overrides"""
    return CircuitParams.from_dict(dict(params.to_dict(), **synthetic.get("truth", {})))


def _crosstalk_truth(section: Mapping[str, Any]) -> CrosstalkMatrix:
    synthetic = section["synthetic"]
    try:
        return CrosstalkMatrix(
            m=synthetic.get("m", np.eye(3)),
            offsets=synthetic.get("offsets", np.zeros(3)),
            sweetspots=section.get("sweetspots") or np.zeros(3),
        )
    except (ValueError, KerrCouplerError) as e:
        raise ConfigurationError(f"calibrate.synthetic: {e}") from None


def _check_keys(section: str, data: Any, allowed) -> None:
    if not isinstance(data, Mapping):
        raise ConfigurationError(f"{section}: expected an object")
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigurationError(f"{section}: unknown key(s) {', '.join(unknown)}")


def _check_positive_int(section: str, data: Mapping[str, Any], key: str) -> None:
    value = data.get(key)
    if value is not None and (not isinstance(value, int) or isinstance(value, bool) or value < 1):
        raise ConfigurationError(f"{section}: {key} must be a positive integer")


def _check_source(section: str, data: Mapping[str, Any], config: RunConfig) -> None:
    if ("data" in data) == ("synthetic" in data):
        raise ConfigurationError(f"{section}: give exactly one of 'data' and 'synthetic'")
    if "data" in data and not config.path(data["data"]).is_file():
        raise ConfigurationError(f"{section}: data file {data['data']} not found")


def _check_points(points: Sequence[SpectrumPoint], model: str) -> None:
    if not points:
        raise ConfigurationError("fit: the data file holds no point")
    for point in points:
        if point.flux_channel not in FLUX_AXES:
            raise ConfigurationError(f"fit: unknown flux channel {point.flux_channel!r}")
        if point.transition not in MODEL_TRANSITIONS[model]:
            raise ConfigurationError(f"fit: transition {point.transition!r} is not part of the {model} model")


def _read_document(path: Path) -> Any:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"cannot read {path}: {e.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from None


def _load_params(document: Mapping[str, Any], base_dir: Path) -> CircuitParams:
    if "params_file" in document and "params" in document:
        raise ConfigurationError("give at most one of 'params' and 'params_file'")
    if "params_file" in document:
        inline = _read_document(base_dir / document["params_file"])
    else:
        inline = document.get("params", {})
    _check_keys("params", inline, {field.name for field in dataclasses.fields(CircuitParams)})
    if "preset" in document:
        return CircuitParams.preset(document["preset"], **inline)
    if not inline:
        raise ConfigurationError("give device parameters with 'params', 'params_file' or 'preset'")
    return CircuitParams.from_dict(inline)


def load_run_config(path: Any) -> RunConfig:
    """
    Read and validate a JSON run configuration. Every failure raises
    :py:class:`ConfigurationError` or :py:class:`ParameterError`.
    """
    path = Path(path)
    document = _read_document(path)
    _check_keys("config", document, TOP_LEVEL_KEYS)
    for name in SECTION_KEYS:
        if name in document and name != "sweep":
            _check_keys(name, document[name], SECTION_KEYS[name])
    base_dir = path.parent
    params = _load_params(document, base_dir)
    fock = FockConfig.from_dict(document.get("fock", {}))
    sweep = SweepRange.from_dict(document["sweep"]) if "sweep" in document else None
    sections = {name: dict(document[name]) for name in SECTION_KEYS if name in document and name != "sweep"}
    return RunConfig(params=params, fock=fock, sweep=sweep, sections=sections, raw=document, base_dir=base_dir)


def load_observations_csv(path: Path) -> List[SweetspotObservation]:
    """Read sweetspot observations written with :py:data:`OBSERVATION_HEADER`"""
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(row for row in handle if not row.startswith("#"))
        missing = set(OBSERVATION_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise ConfigurationError(f"{path}: missing column(s) {', '.join(sorted(missing))}")
        try:
            return [
                SweetspotObservation(
                    dof=int(row["dof"]),
                    offset=float(row["offset"]),
                    applied=tuple(float(row[f"applied_{axis}"]) for axis in FLUX_AXES),
                )
                for row in reader
            ]
        except ValueError as e:
            raise ConfigurationError(f"{path}: line {reader.line_num}: {e}") from None


# -------------------- Commands --------------------


class _SinkMixin:
    """Write the rows of every point to a table as soon as it is computed"""

    def __init__(self, *, sink: TableSink, rows: Callable[[SweepPoint], List[Sequence[Any]]], **kwargs) -> None:
        self.sink = sink
        self.rows = rows
        super().__init__(**kwargs)

    async def store_point(self, point: SweepPoint) -> None:
        for row in self.rows(point):
            self.sink.write_row(row)


class ModesJob(_SinkMixin, SimpleModesSweep):
    pass


class CouplingsJob(_SinkMixin, SimpleCouplingsSweep):
    pass


class SpectrumJob(_SinkMixin, SimpleSpectrumSweep):
    pass


def _columns(columns: Sequence[str], axis: str) -> List[str]:
    return [axis] + list(columns[1:])


def _retune(section: Mapping[str, Any]):
    return retune_to_resonance if section.get("retune") else None


def cmd_modes(config: RunConfig, args: argparse.Namespace) -> List[Path]:
    sweep = config.sweep
    with _sink(config, args, "modes", _columns(MODES_COLUMNS, sweep.axis)) as sink:
        job = ModesJob(
            params=config.params,
            values=sweep.values(),
            axis=sweep.axis,
            threads=args.threads,
            sink=sink,
            rows=lambda point: [point.result.to_row(point.value)],
        )
        asyncio.run(job.run())
    return [sink.path]


def cmd_spectrum(config: RunConfig, args: argparse.Namespace) -> List[Path]:
    sweep, section = config.sweep, config.section("spectrum")
    with _sink(config, args, "spectrum", _columns(SPECTRUM_COLUMNS, sweep.axis)) as sink:
        job = SpectrumJob(
            params=config.params,
            values=sweep.values(),
            fock=config.fock,
            axis=sweep.axis,
            levels=section.get("levels", 12),
            retune=_retune(section),
            track_threshold=section.get("track_threshold", 0.5),
            threads=args.threads,
            sink=sink,
            rows=lambda point: point.result.to_rows(point.value),
        )
        asyncio.run(job.run())
    return [sink.path]


def cmd_couplings(config: RunConfig, args: argparse.Namespace) -> List[Path]:
    sweep, section = config.sweep, config.section("couplings")
    with _sink(config, args, "couplings", _columns(COUPLINGS_COLUMNS, sweep.axis)) as sink:
        job = CouplingsJob(
            params=config.params,
            values=sweep.values(),
            axis=sweep.axis,
            v_correction=section.get("v_correction", True),
            sloshing_correction=section.get("sloshing_correction", True),
            renormalize=section.get("renormalize", True),
            mu=section.get("mu", 0.0),
            retune=_retune(section),
            threads=args.threads,
            sink=sink,
            rows=lambda point: [point.result.to_row(point.value)],
        )
        asyncio.run(job.run())
    return [sink.path]


def cmd_crossing(config: RunConfig, args: argparse.Namespace) -> List[Path]:
    section = config.section("crossing")
    if "start" in section:
        values = SweepRange.from_dict(
            {key: section[key] for key in ("start", "stop", "points")}, section="crossing", axis="phi1"
        ).values()
    else:
        center = retune_to_resonance(config.params).phi1
        window = section.get("window", 0.03)
        values = np.linspace(center - window, center + window, section.get("points", 15))
    scan = avoided_crossing_scan(
        config.params, config.fock, values, levels=section.get("levels", 8), threads=args.threads
    )
    with _sink(config, args, "crossing", _columns(BRANCH_COLUMNS, "phi1")) as sink:
        for row in scan.branch_rows():
            sink.write_row(row)
    sign = int(np.sign(couplings_for(retune_to_resonance(config.params)).j_total)) or None
    fit = fit_crossing(scan, sign=sign)
    report = write_json(Path(args.out) / "crossing_fit.json", fit.to_dict(), _stamp(config, args))
    return [sink.path, report]


def cmd_kerr(config: RunConfig, args: argparse.Namespace) -> List[Path]:
    section = config.section("kerr")
    points = cross_kerr_observable(
        config.params,
        config.fock,
        config.sweep.values(),
        j_source=section.get("j_source", "effective"),
        coupler_order=section.get("coupler_order"),
        retune=_retune(section),
        levels=section.get("levels"),
        threads=args.threads,
    )
    with _sink(config, args, "kerr", KERR_COLUMNS) as sink:
        for point in points:
            sink.write_row(point.to_row())
    return [sink.path]


def _synthetic_spectrum(config: RunConfig, section: Mapping[str, Any], seed: Optional[int]) -> List[SpectrumPoint]:
    synthetic = section["synthetic"]
    truth = _truth(config.params, synthetic)
    points = [
        SpectrumPoint("phi3", float(phi3), transition, 0.0)
        for phi3 in synthetic["phi3"]
        for transition in synthetic.get("transitions", ["minus", "plus"])
    ]
    model = section.get("model", "simplified")
    frequencies = forward_model(truth, points, model=model, fock=config.fock)
    noise = synthetic.get("noise_mhz", 0.0) * 1e-3
    if noise:
        frequencies = add_frequency_noise(frequencies, noise, seed)
    return [point._replace(freq_ghz=float(freq)) for point, freq in zip(points, frequencies)]


def cmd_fit(config: RunConfig, args: argparse.Namespace) -> List[Path]:
    section = config.section("fit")
    if "data" in section:
        data = load_spectrum_csv(config.path(section["data"]))
    else:
        data = _synthetic_spectrum(config, section, args.seed)
    kwargs = {key: section[key] for key in ("restarts", "perturbation", "max_nfev") if key in section}
    if "free" in section:
        kwargs["free"] = section["free"]
    report = fit_circuit_params(
        data, config.params, model=section.get("model", "simplified"), fock=config.fock, seed=args.seed, **kwargs
    )
    return [write_json(Path(args.out) / "fit_report.json", report.to_dict(), _stamp(config, args))]


def cmd_calibrate(config: RunConfig, args: argparse.Namespace) -> List[Path]:
    section = config.section("calibrate")
    sweetspots = section.get("sweetspots")
    if "data" in section:
        observations = load_observations_csv(config.path(section["data"]))
    else:
        synthetic = section["synthetic"]
        truth = _crosstalk_truth(section)
        observations = [
            obs
            for dof in range(3)
            for foreign in range(3)
            if foreign != dof
            for obs in truth.observations(dof, foreign, synthetic["values"])
        ]
        noise = synthetic.get("noise", 0.0)
        if noise:
            offsets = add_frequency_noise([obs.offset for obs in observations], noise, args.seed)
            observations = [obs._replace(offset=float(v)) for obs, v in zip(observations, offsets)]
    calibration = calibrate_crosstalk(observations, sweetspots=sweetspots)
    return [write_json(Path(args.out) / "crosstalk.json", calibration.to_dict(), _stamp(config, args))]


COMMAND_FUNCTIONS: Dict[str, Callable[[RunConfig, argparse.Namespace], List[Path]]] = {
    "modes": cmd_modes,
    "spectrum": cmd_spectrum,
    "couplings": cmd_couplings,
    "crossing": cmd_crossing,
    "kerr": cmd_kerr,
    "fit": cmd_fit,
    "calibrate": cmd_calibrate,
}


def _stamp(config: RunConfig, args: argparse.Namespace) -> Dict[str, Any]:
    return provenance(config.raw, command=args.command, seed=args.seed)


def _sink(config: RunConfig, args: argparse.Namespace, name: str, columns: Sequence[str]) -> TableSink:
    return TableSink(Path(args.out) / name, columns, _stamp(config, args), fmt=args.format)


# -------------------- Entry point --------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kerr-coupler",
        description="Circuit, spectrum and calibration engine of two transmons with a nonlinear coupler.",
    )
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--format", choices=FORMATS, default="csv", help="format of sweep tables")
    parser.add_argument("--seed", type=int, default=0, help="seed of restarts and synthetic noise")
    parser.add_argument("--threads", type=int, default=1, help="sweep points computed concurrently")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug")
    parser.add_argument("command", choices=COMMANDS)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Console script entry point, returns the exit status.

    Sweeping commands run their own event loop with :py:func:`asyncio.run`,
    so ``main`` cannot be called from a running loop. Inside a coroutine,
    drive the sweep classes directly instead.
    """
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    try:
        if args.threads < 1:
            raise ConfigurationError("--threads must be at least 1")
        config = load_run_config(args.config)
        config.validate_for(args.command)
    except (ConfigurationError, ParameterError) as e:
        print(f"kerr-coupler: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        files = COMMAND_FUNCTIONS[args.command](config, args)
    except KerrCouplerError as e:
        logger.error("%s failed: %s", args.command, e)
        print(f"kerr-coupler: {args.command} failed: {e}", file=sys.stderr)
        return EXIT_RUNTIME

    for path in files:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
