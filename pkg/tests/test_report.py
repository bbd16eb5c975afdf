import json
import math

import numpy as np
import pytest

from lochom.errors import UsageError
from lochom.report import Report, Table, canonical, dumps, emit_report, svg_plot


def _report():
    rep = Report("jn_verify", "decay")
    rep.check("b_positive", np.True_)
    rep.measured.update(b_hat=np.float64(1.5), sizes=np.arange(3), top=math.inf)
    rep.tables["jn"] = Table(("lambda", "D", "bound"), [[0.1, 0.5, 1.0], [0.2, 0.25, math.inf]])
    return rep


def test_canonical_handles_numpy_and_nonfinite():
    assert canonical({1: np.int64(2), "s": {3, 1}, "x": -math.inf, "n": math.nan}) == \
        {"1": 2, "s": [1, 3], "x": "-inf", "n": "nan"}


def test_json_is_sorted_and_stable():
    text = _report().to_json()
    assert text == _report().to_json()
    doc = json.loads(text)
    assert list(doc) == sorted(doc)
    assert doc["passed"] is True and doc["measured"]["top"] == "inf"
    assert dumps({"b": 1, "a": 2}).index('"a"') < dumps({"b": 1, "a": 2}).index('"b"')


def test_emitters_write_expected_files(tmp_path):
    rep = _report()
    (js,) = emit_report(rep, "json", tmp_path / "r")
    assert js.name == "r.json"
    (csv,) = emit_report(rep, "csv", tmp_path / "r")
    lines = csv.read_text().splitlines()
    assert lines[0] == "lambda,D,bound" and lines[2].endswith(",inf")
    (svg,) = emit_report(rep, "svg", tmp_path / "r")
    body = svg.read_text()
    assert body.startswith("<svg") and body.count("<polyline") == 2


def test_emitters_reject_bad_requests(tmp_path):
    with pytest.raises(UsageError):
        emit_report(_report(), "xlsx", tmp_path / "r")
    with pytest.raises(UsageError):
        emit_report(Report("axioms", "x"), "csv", tmp_path / "r")
    with pytest.raises(UsageError):
        svg_plot(Table(("a", "b"), [["x", "y"]]))


def test_failed_check_fails_report():
    rep = _report()
    rep.check("other", 0)
    assert not rep.passed
