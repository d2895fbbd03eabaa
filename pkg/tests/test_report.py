import csv
import json
import math
from datetime import datetime, timezone

import numpy as np
import pytest

from heisenlab.report import SUMMARY_HEADER, dumps, run_metadata, to_jsonable, write_outputs


def test_to_jsonable():
    obj = {1: np.float64(math.inf), "a": (np.int64(3), np.bool_(True)), "b": np.array([1.0, -math.inf]),
           "c": float("nan")}
    assert to_jsonable(obj) == {"1": "inf", "a": [3, True], "b": [1.0, "-inf"], "c": "nan"}
    assert to_jsonable(1 / 3, 4) == 0.3333
    with pytest.raises(TypeError):
        to_jsonable(object())


def test_dumps_is_canonical():
    a = dumps({"b": 1.0, "a": [0.1 + 0.2]})
    b = dumps({"a": [0.30000000000000004], "b": 1.0})
    assert a == b and a.endswith("\n")
    assert json.loads(a) == {"a": [0.3], "b": 1.0}


def test_write_outputs(tmp_path):
    summary = [("fam", "C", "inf", 1, "pass", "pass", "yes")]
    curves = {"fam(x=1)__c": (("N", "v"), [(64, 0.5), (128, 1 / 3)])}
    meta = run_metadata("classify", datetime(2026, 1, 1, tzinfo=timezone.utc), 1.23456, {"hits": 0})
    written = write_outputs(tmp_path, {"z": 1}, summary, curves, meta)
    assert json.loads((tmp_path / "report.json").read_text()) == {"z": 1}
    rows = list(csv.reader(open(tmp_path / "summary.csv")))
    assert tuple(rows[0]) == SUMMARY_HEADER and rows[1][4] == "pass"
    (path,) = written["curves"]
    assert path.parent.name == "curves" and path.name == "fam_x=1___c.csv"
    assert list(csv.reader(open(path)))[2] == ["128", "0.333333333333"]
    assert json.loads((tmp_path / "metadata.json").read_text())["elapsed_seconds"] == 1.235
