import json
import math
import os

import numpy as np
import pytest

from rdsym.cli import main
from rdsym.config import parse_config, serialize_config
from rdsym.exceptions import ConfigError
from rdsym.fields import GridSpec, ScalarField
from rdsym.geometry import GeometrySummary
from rdsym.io import (REPORT_COLUMNS, read_pgm, read_report, snapshot_name, write_report,
                      write_snapshot)

CONFIGS = os.path.join(os.path.dirname(__file__), os.pardir, "configs")


def _doc(**over):
    doc = {
        "grid": {"half_width": 18.0, "nodes_per_side": 121},
        "solver": {"t_end": 5.0, "record_interval": 0.5},
        "reaction": {"variant": "fisher_kpp"},
        "scenario": {"variant": "symmetrization",
                     "datum": {"bumps": [{"center": [0.0, 0.0], "radius": 1.5}]},
                     "thetas": [0.5]},
    }
    for section, val in over.items():
        doc[section] = val
    return doc


def _errors(doc):
    with pytest.raises(ConfigError) as info:
        parse_config(json.dumps(doc))
    return info.value.errors


def test_minimal_config_defaults():
    cfg = parse_config(json.dumps(_doc()))
    assert cfg.solver.cfl_fraction == 0.8 and cfg.ray_count == 720
    assert cfg.solver.boundary_tolerance == 1e-6 and cfg.late_fraction == 0.5
    assert cfg.output.directory == "out" and cfg.seed == 0
    assert cfg.grid.h == pytest.approx(0.3)


def test_spacing_alternative():
    cfg = parse_config(json.dumps(_doc(grid={"half_width": 18.0, "spacing": 0.3})))
    assert cfg.grid.n == 121


def test_threshold_outside_saturation_range():
    doc = _doc()
    doc["scenario"]["thetas"] = [1.5]
    errs = _errors(doc)
    assert any("scenario.thetas[0]" in e and "threshold outside (0, Z)" in e for e in errs)


def test_even_node_count_rejected():
    errs = _errors(_doc(grid={"half_width": 18.0, "nodes_per_side": 100}))
    assert any("nodes_per_side must be odd" in e for e in errs)


def test_errors_are_collected_with_paths():
    doc = _doc(solver={"t_end": -1, "record_interval": 0.5, "cfl_fraction": 1.5})
    doc["reaction"] = {"variant": "nope"}
    doc["scenario"]["datum"]["bumps"][0]["radius"] = 30.0
    errs = _errors(doc)
    for path in ("solver.t_end", "solver.cfl_fraction", "reaction", "scenario.datum.bumps[0]"):
        assert any(e.startswith(path + ":") for e in errs), (path, errs)


def test_syntax_error_reports_position():
    with pytest.raises(ConfigError) as info:
        parse_config('{"grid": {"half_width": 1,,}}')
    assert "line 1, column" in info.value.errors[0]


def test_unknown_keys_and_missing_sections():
    doc = _doc()
    doc["extra"] = 1
    del doc["solver"]
    errs = _errors(doc)
    assert any(e.startswith("config.extra") for e in errs)
    assert any(e.startswith("solver") for e in errs)


@pytest.mark.parametrize("name", sorted(n for n in os.listdir(CONFIGS) if n.endswith(".json")))
def test_shipped_configs_round_trip(name):
    with open(os.path.join(CONFIGS, name)) as fh:
        cfg = parse_config(fh.read())
    text = serialize_config(cfg)
    assert parse_config(text) == cfg
    assert serialize_config(parse_config(text)) == text


def _summary(**kw):
    base = dict(t=0.5, theta=0.5, R_i=1.25, center_i=(0.1, -0.2), R_e=1.5, center_e=(0.0, 0.0),
                r_origin=1.3, star_shaped=True, max_polar_slope=0.1, radial_dev=1e-3,
                solution_id="u")
    base.update(kw)
    return GeometrySummary(**base)


def test_report_csv_format_and_round_trip(tmp_path):
    rows = [_summary(), _summary(t=0.1 + 0.2, R_i=None, center_i=None, R_e=None, center_e=None,
                                 r_origin=None, star_shaped=None, max_polar_slope=None,
                                 radial_dev=None)]
    path = tmp_path / "r.csv"
    write_report(rows, path)
    raw = path.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == ",".join(REPORT_COLUMNS)
    assert lines[1].startswith("0.5,0.5,1.25,0.1,-0.2,1.5,0.0,0.0,1.3,0.25,true,")
    assert lines[2].startswith("0.30000000000000004,0.5,,,,,,,,,,")
    back = read_report(path)
    assert back == rows


def test_report_reader_checks_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t,theta\n1,2\n")
    with pytest.raises(ValueError):
        read_report(path)


def test_snapshot_files(tmp_path):
    grid = GridSpec(2.0, 5)
    vals = np.zeros((5, 5))
    vals[4, 0] = 2.0   # x = 2, y = -2: bottom right of the image
    vals[0, 4] = 1.0   # x = -2, y = 2: top left
    base = write_snapshot(ScalarField(grid, vals, time=1.5), tmp_path, "snap_u")
    assert os.path.basename(base) == snapshot_name("snap_u", 1.5) == "snap_u_t1.5000"
    img, maxval = read_pgm(base + ".pgm")
    assert maxval == 255 and img.shape == (5, 5)
    assert img[4, 4] == 255 and img[0, 0] == 128 and img.sum() == 383
    grid_csv = np.loadtxt(base + ".csv", delimiter=",")
    assert grid_csv[4, 4] == 2.0 and grid_csv[0, 0] == 1.0


def _write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def test_cli_run_and_report(tmp_path, capsys):
    doc = _doc(output={"directory": str(tmp_path / "out"), "snapshots": True,
                       "snapshot_stride": 3})
    cfg = _write(tmp_path, doc)
    assert main(["run", "--config", cfg]) == 0
    out = tmp_path / "out"
    assert (out / "report.csv").exists() and (out / "verdicts.csv").exists()
    assert parse_config((out / "config.json").read_text()) == parse_config(json.dumps(doc))
    snaps = sorted(os.listdir(out / "snapshots"))
    assert "snap_u_t0.0000.pgm" in snaps and "snap_u_t1.5000.csv" in snaps
    assert len(snaps) == 2 * 4
    capsys.readouterr()
    assert main(["report", "--config", cfg]) == 0
    assert "re-derived" in capsys.readouterr().out


def test_cli_out_override_and_seed(tmp_path):
    cfg = _write(tmp_path, _doc())
    for name, seed in (("a", 0), ("b", 0), ("c", 7)):
        assert main(["run", "--config", cfg, "--out", str(tmp_path / name),
                     "--seed", str(seed)]) == 0
    same = [(tmp_path / n / "report.csv").read_bytes() for n in ("a", "b")]
    assert same[0] == same[1]
    # the enclosing circle is unique, so another seed only moves it by rounding
    a = read_report(tmp_path / "a" / "report.csv")
    c = read_report(tmp_path / "c" / "report.csv")
    for ra, rc in zip(a, c, strict=True):
        if ra.R_e is not None:
            assert rc.R_e == pytest.approx(ra.R_e, abs=1e-12)
            assert np.allclose(rc.center_e, ra.center_e, atol=1e-12)


def test_cli_domain_too_small(tmp_path, capsys):
    rc = main(["run", "--config", os.path.join(CONFIGS, "too_small.json"),
               "--out", str(tmp_path)])
    assert rc == 1
    err = capsys.readouterr().err
    assert err.startswith("run aborted (t=") and "boundary" in err
    assert read_report(tmp_path / "report.csv")


def test_cli_invalid_config(tmp_path, capsys):
    cfg = _write(tmp_path, _doc(grid={"half_width": 18.0, "nodes_per_side": 100}))
    assert main(["run", "--config", cfg]) == 1
    assert "nodes_per_side must be odd" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 1
    assert main(["run", "--config", cfg, "--threads", "0"]) == 1


@pytest.mark.parametrize("reaction, expect", [
    ({"variant": "fisher_kpp"}, ["KPP: pass", "superposition: pass", "lower bound: pass"]),
    ({"variant": "bistable", "a": 0.25}, ["KPP: FAIL", "superposition: FAIL"]),
    ({"variant": "linear", "zeta": {"a": 1.0, "b": 0.5, "omega": 2.0}},
     ["KPP: pass", "superposition: pass"]),
])
def test_cli_validate_reaction(tmp_path, capsys, reaction, expect):
    cfg = _write(tmp_path, _doc(reaction=reaction))
    assert main(["validate-reaction", "--config", cfg]) == 0
    out = capsys.readouterr().out
    for text in expect:
        assert text in out


def test_cli_verdict_failure_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path, _doc(output={"directory": str(tmp_path / "o")}))
    assert main(["run", "--config", cfg]) == 0
    rows = read_report(tmp_path / "o" / "report.csv")
    bad = [r.__class__(**{**r.__dict__, "R_e": r.R_e + 50.0}) if r.R_e is not None and r.t > 2
           else r for r in rows]
    write_report(bad, tmp_path / "bad.csv")
    capsys.readouterr()
    assert main(["report", "--config", cfg, "--csv", str(tmp_path / "bad.csv")]) == 2
    assert "fail" in capsys.readouterr().out
    assert main(["report", "--config", cfg, "--csv", str(tmp_path / "none.csv")]) == 1
