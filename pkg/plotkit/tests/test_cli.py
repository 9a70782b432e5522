import json

import pytest

from plotkit.cli import load_spec_file, main
from plotkit.tables import SchemaError


def test_positional_invocation(grids_1d, tmp_path, capsys):
    out = str(tmp_path / "scan.svg")
    rc = main(["line_scan", *grids_1d, out, "--labels", "top,bottom,random",
               "--title", "masked scans"])
    assert rc == 0
    assert "line_scan -> " in capsys.readouterr().out
    assert open(out, "rb").read().startswith(b"<?xml")


def test_spec_file_renders_batch(grid_2d, sweep_csv, tmp_path, capsys):
    spec = tmp_path / "figs.json"
    spec.write_text(json.dumps([
        {"kind": "surface3d", "inputs": grid_2d,
         "output": str(tmp_path / "one.svg")},
        {"kind": "paucity_boxgrid", "inputs": [sweep_csv],
         "output": str(tmp_path / "two.svg"), "title": "restarts"},
    ]))
    assert main(["--spec", str(spec)]) == 0
    assert (tmp_path / "one.svg").exists() and (tmp_path / "two.svg").exists()


def test_spec_file_validation(tmp_path):
    spec = tmp_path / "bad.json"
    spec.write_text(json.dumps([{"kind": "line_scan"}]))
    with pytest.raises(SchemaError, match="missing"):
        load_spec_file(spec)
    spec.write_text(json.dumps([{"kind": "line_scan", "inputs": "a.csv",
                                 "output": "o.svg", "colour": "red"}]))
    with pytest.raises(SchemaError, match="unknown figure fields"):
        load_spec_file(spec)
    spec.write_text("{broken")
    with pytest.raises(SchemaError, match="invalid JSON"):
        load_spec_file(spec)


def test_schema_error_reaches_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n1,2\n")
    rc = main(["sorted_scores", str(bad), str(tmp_path / "o.svg")])
    assert rc == 1
    assert "missing column" in capsys.readouterr().err


def test_usage_error_without_enough_positionals(capsys):
    assert main(["line_scan"]) == 2
    assert "need either --spec" in capsys.readouterr().err
