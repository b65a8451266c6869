# tests/test_output_service.py

"""
Result files are byte-stable and JSON-clean.
"""

import json

import numpy as np

from services import output_service


def test_plain_converts_numpy_values():
    value = output_service.plain({
        "a": np.float64(0.5),
        "b": np.int64(3),
        "c": np.array([1.0, 2.0]),
        "d": (np.bool_(True), None),
        "e": float("nan"),
    })
    assert value == {"a": 0.5, "b": 3, "c": [1.0, 2.0], "d": [True, None], "e": "nan"}
    assert type(value["b"]) is int


def test_write_outputs(tmp_path):
    rows = [{"s": 0.1, "phi": 1 / 3, "stderr": None}]
    paths = output_service.write_outputs(str(tmp_path), "phi", rows, {"value": np.float64(1 / 3), "n": 5})
    assert paths["csv"].name == "phi.csv"
    assert paths["summary"].name == "phi_summary.json"
    assert paths["csv"].read_text() == f"s,phi,stderr\n0.1,{1 / 3!r},\n"
    assert json.loads(paths["summary"].read_text()) == {"n": 5, "value": 1 / 3}
    assert not list(tmp_path.glob("*.tmp"))


def test_rewrite_is_identical(tmp_path):
    rows = [{"x": float(v)} for v in np.linspace(0, 1, 7)]
    first = output_service.write_csv(tmp_path / "a.csv", rows).read_bytes()
    second = output_service.write_csv(tmp_path / "a.csv", rows).read_bytes()
    assert first == second


def test_summary_line():
    line = output_service.summary_line("phi", {"value": 0.75, "stderr": 0.0, "seed": 1}, ["value", "stderr", "gap"])
    assert line == "phi value=0.75 stderr=0.0"
