import json
from pathlib import Path

import pytest

from lochom.cli import main, parse_named
from lochom.errors import UsageError


def _tree(root: Path) -> dict:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_parse_named_values():
    assert parse_named("grid1d:N=64,s=2.5,profile=step") == ("grid1d", {"N": 64, "s": 2.5, "profile": "step"})
    assert parse_named("tiny4") == ("tiny4", {})
    with pytest.raises(UsageError):
        parse_named("grid1d:N")


def test_axioms_exit_zero(tmp_path, capsys):
    code = main(["axioms", "--space", "grid1d:N=64", "--exhaustive", "--out", str(tmp_path)])
    assert code == 0
    assert capsys.readouterr().out.startswith("PASS")
    summary = next(tmp_path.rglob("summary.json"))
    assert json.loads(summary.read_text())["passed"] is True


def test_usage_errors_exit_two(tmp_path, capsys):
    assert main(["frobnicate"]) == 2
    assert main(["axioms", "--space", "torus", "--out", str(tmp_path)]) == 2
    assert main(["axioms", "--format", "xlsx", "--out", str(tmp_path)]) == 2
    assert main(["axioms", "--threads", "0", "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"pipeline": [\n  "axioms",\n]}')
    assert main(["run", str(bad)]) == 2
    assert "bad.json:3:" in capsys.readouterr().err
    unknown = tmp_path / "unknown.json"
    unknown.write_text(json.dumps({"pipeline": [{"op": "nope"}]}))
    assert main(["run", str(unknown)]) == 2
    assert "config.pipeline[0].op" in capsys.readouterr().err


def test_run_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"space": {"name": "grid1d", "params": {"N": 128}},
                               "function": {"name": "atom_spike"},
                               "pipeline": [{"op": "maximal", "params": {"p": 3}}, "bmo"],
                               "out": str(tmp_path / "out")}))
    assert main(["run", str(cfg)]) == 0
    names = {p.name for p in (tmp_path / "out").rglob("*.json")}
    assert "summary.json" in names and any(n.startswith("01_bmo") for n in names)
    assert main(["run", str(cfg), "--out", str(tmp_path / "elsewhere")]) == 0
    assert any((tmp_path / "elsewhere").rglob("summary.json"))


def test_cubes_writes_dot(tmp_path):
    dot = tmp_path / "tree.dot"
    assert main(["cubes", "--space", "grid1d:N=128", "--depth", "3", "--dot", str(dot),
                 "--out", str(tmp_path / "out")]) == 0
    assert dot.read_text().startswith("digraph")


def test_suite_on_tiny4_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["suite", "--space", "tiny4", "--seed", "7", "--format", "json,csv,svg",
                     "--out", str(out)]) == 0
    assert _tree(a) == _tree(b)
    assert len(_tree(a)) > 10


def test_coarse_space_reports_missing_root(tmp_path, capsys):
    assert main(["cz", "--space", "grid2d:side=16", "--out", str(tmp_path)]) == 1
    out = capsys.readouterr().out
    assert out.startswith("FAIL") and "refine the grid" in out
