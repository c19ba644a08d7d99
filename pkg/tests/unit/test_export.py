"""
Unit tests for result tables and provenance stamps
"""
import json
import math

import numpy as np
import pytest

from kerr_coupler import ConfigurationError, __version__
from kerr_coupler.export import TableSink, config_digest, provenance, read_table, write_json


def test_config_digest():
    """
    Test config digest : should not depend on the key order
    """
    assert config_digest({"a": 1, "b": [1, 2]}) == config_digest({"b": [1, 2], "a": 1})
    assert config_digest({"a": 1}) != config_digest({"a": 2})
    assert len(config_digest({})) == 64


def test_provenance():
    """
    Test provenance : should stamp the package version and extra keys
    """
    stamp = provenance({"a": 1}, command="modes")
    assert stamp["version"] == __version__
    assert stamp["package"] == "kerr_coupler"
    assert stamp["command"] == "modes"
    assert stamp["config_sha256"] == config_digest({"a": 1})


def test_csv_table(tmp_path):
    """
    Test CSV table : rows should be on disk as soon as written and non
    finite values left empty
    """
    sink = TableSink(tmp_path / "modes", ("phi3", "freq"), {"command": "modes"})
    assert sink.path.name == "modes.csv"
    sink.write_row((0.0, 1.5))
    assert sink.path.read_text().splitlines()[-1] == "0.0,1.5"
    sink.write_row((0.1, math.nan))
    sink.close()

    table = read_table(sink.path)
    assert table["columns"] == ["phi3", "freq"]
    assert table["rows"] == [["0.0", "1.5"], ["0.1", ""]]
    assert table["provenance"] == {"command": "modes"}


def test_json_table(tmp_path):
    """
    Test JSON table : should be written on close with nan as null
    """
    with TableSink(tmp_path / "kerr", ("phi3", "ratio"), {"command": "kerr"}, fmt="json") as sink:
        sink.write_row((np.float64(0.3), math.nan))
        sink.write_row((0.4, 2.5))
        assert not sink.path.exists()

    table = read_table(sink.path)
    assert table["rows"] == [[0.3, None], [0.4, 2.5]]
    assert table["provenance"]["command"] == "kerr"


def test_table_errors(tmp_path):
    """
    Test tables : should reject unknown formats and rows of the wrong size
    """
    with pytest.raises(ConfigurationError):
        TableSink(tmp_path / "table", ("a",), {}, fmt="xlsx")
    with TableSink(tmp_path / "table", ("a", "b"), {}) as sink:
        with pytest.raises(ValueError):
            sink.write_row((1.0,))


def test_write_json(tmp_path):
    """
    Test JSON report : numpy values should be converted and the provenance
    added
    """
    path = write_json(
        tmp_path / "fit.json",
        {"matrix": np.eye(2), "count": np.int64(3), "rms": math.inf},
        {"command": "fit"},
    )
    document = json.loads(path.read_text())
    assert document["matrix"] == [[1.0, 0.0], [0.0, 1.0]]
    assert document["count"] == 3
    assert document["rms"] is None
    assert document["provenance"] == {"command": "fit"}
