"""
Export module: CSV and JSON writers stamping every file with its
provenance
"""
import csv
import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np

from .__version__ import __version__
from .exceptions import ConfigurationError

logger = logging.getLogger("kerr_coupler")

FORMATS = ("csv", "json")


def config_digest(config: Mapping[str, Any]) -> str:
    """SHA-256 of the canonical JSON form of a configuration"""
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def provenance(config: Mapping[str, Any], **extra: Any) -> Dict[str, Any]:
    stamp = {"package": "kerr_coupler", "version": __version__, "config_sha256": config_digest(config)}
    stamp.update(extra)
    return stamp


def _plain(value: Any) -> Any:
    """JSON friendly copy: numpy types unwrapped, non finite floats to null"""
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_plain(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return repr(value) if math.isfinite(value) else ""
    return str(value)


def write_json(path: Union[str, Path], payload: Mapping[str, Any], stamp: Mapping[str, Any]) -> Path:
    """Write a JSON report with its provenance under the ``provenance`` key"""
    path = Path(path)
    document = dict(_plain(payload))
    document["provenance"] = _plain(stamp)
    path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


class TableSink:
    """
    Row writer of a result table. CSV rows are flushed as soon as they are
    written, JSON tables are written on :py:func:`TableSink.close`.

    :param path: File path without extension
    :param columns: Column names
    :param stamp: Provenance written in the header
    :param fmt: ``'csv'`` or ``'json'``
    """

    def __init__(
        self, path: Union[str, Path], columns: Sequence[str], stamp: Mapping[str, Any], fmt: str = "csv"
    ) -> None:
        if fmt not in FORMATS:
            raise ConfigurationError(f"unknown output format {fmt!r}")
        self.path = Path(path).with_suffix("." + fmt)
        self.columns = tuple(columns)
        self.stamp = dict(stamp)
        self.fmt = fmt
        self.rows: List[Sequence[Any]] = []
        self._handle = None
        self._writer = None
        if fmt == "csv":
            self._handle = open(self.path, "w", newline="", encoding="utf-8")
            for key in sorted(self.stamp):
                self._handle.write(f"# {key}: {self.stamp[key]}\n")
            self._writer = csv.writer(self._handle, lineterminator="\n")
            self._writer.writerow(self.columns)
            self._handle.flush()

    def write_row(self, row: Sequence[Any]) -> None:
        if len(row) != len(self.columns):
            raise ValueError(f"row of {len(row)} values for {len(self.columns)} columns")
        self.rows.append(tuple(row))
        if self._writer is not None:
            self._writer.writerow([_cell(value) for value in row])
            self._handle.flush()

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None
        elif self.fmt == "json":
            write_json(self.path, {"columns": list(self.columns), "rows": self.rows}, self.stamp)
        logger.info("Wrote %d row(s) to %s", len(self.rows), self.path)

    def __enter__(self) -> "TableSink":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.close()


def read_table(path: Union[str, Path]) -> Dict[str, Any]:
    """Read back a table written by :py:class:`TableSink`"""
    path = Path(path)
    if path.suffix == ".json":
        document = json.loads(path.read_text(encoding="utf-8"))
        return {"columns": document["columns"], "rows": document["rows"], "provenance": document["provenance"]}
    stamp: Dict[str, Optional[str]] = {}
    lines = path.read_text(encoding="utf-8").splitlines()
    body = []
    for line in lines:
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            stamp[key] = value
        else:
            body.append(line)
    rows = list(csv.reader(body))
    return {"columns": rows[0], "rows": rows[1:], "provenance": stamp}
