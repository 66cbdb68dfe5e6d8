import csv
import json
from fractions import Fraction

import pytest

from roundtaylor.bounds import PUBLISHED_CONSTANTS
from roundtaylor.cli import main
from roundtaylor.pipeline import (
    PipelineConfig,
    RunJob,
    export_trajectory,
    parse_config,
    repro_intro,
    run_many,
)
from roundtaylor.topology import ProofConstants

PC = ProofConstants.published()


def test_config_rejects_decimals():
    with pytest.raises(ValueError, match="decimals"):
        parse_config("sb = 0.00002")
    with pytest.raises(ValueError):
        parse_config("sb = 2e-5")


def test_config_records_deviations():
    cfg = parse_config("# tighter window\nsb = 1/100000\ngrid_exponent = 15\nsteps.E1 = 1000\n")
    assert cfg.constants.sb == Fraction(1, 100000)
    devs = cfg.deviations()
    assert any(d.startswith("sb = 1/100000") for d in devs)
    assert any(d.startswith("grid_exponent = 15") for d in devs)
    assert any(d.startswith("steps.E1 = 1000") for d in devs)
    assert PipelineConfig().deviations() == []


def test_config_rejects_unknown_keys():
    with pytest.raises(ValueError):
        parse_config("colour = 1/2")


def test_intro_reproduction_matches_published_table():
    rep = repro_intro()
    assert rep["verdict"] == "pass"
    assert rep["first_mismatch"] is None
    assert all(r["within_H"] for r in rep["rows"])
    assert rep["rows"][0]["z"] == "252083/500000"


def test_intro_reproduction_at_coarser_grid_differs():
    rep = repro_intro(grid_exponent=5)
    assert rep["verdict"] == "fail" and rep["first_mismatch"] == 1


def _jobs():
    return [RunJob(f"J{i}", "W", PC.a0, PC.b0 + i * PC.sb, PC.t0 / 100, 20, 14, PUBLISHED_CONSTANTS["W"])
            for i in range(3)]


def test_run_many_is_independent_of_worker_count():
    dump = lambda res: json.dumps({k: v.summary() for k, v in res.items()}, sort_keys=True)  # noqa: E731
    serial = dump(run_many(_jobs(), serial=True))
    parallel = dump(run_many(_jobs(), workers=2))
    assert serial == parallel


def test_export_trajectory_initial_row(tmp_path):
    out = tmp_path / "traj.csv"
    info = export_trajectory(PC.a0, PC.b0, PC.t0 / 1000, 1, out)
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["t", "x1", "y1", "z1", "x2", "y2", "z2", "x3", "y3", "z3"]
    assert info["rows"] == 2 and len(rows) == 3
    first = [float(v) for v in rows[1]]
    assert first[0] == 0
    assert first[1:4] == [0, 0, 0]
    assert first[4:7] == [10, 0, 0]
    assert first[7:10] == [-10, 0, 0]


def test_export_trajectory_rejects_zero_steps(tmp_path):
    with pytest.raises(ValueError):
        export_trajectory(PC.a0, PC.b0, PC.t0, 0, tmp_path / "x.csv")


def test_cli_repro_and_dump(tmp_path, capsys):
    report = tmp_path / "intro.json"
    assert main(["repro", "intro", "--report", str(report)]) == 0
    assert json.loads(report.read_text())["verdict"] == "pass"
    assert main(["repro", "intro", "--grid-exp", "5", "--report", str(report)]) == 1
    assert main(["dump", "phi"]) == 0
    assert "phi58" in capsys.readouterr().out


def test_cli_bounds_subset(tmp_path):
    report = tmp_path / "b.json"
    assert main(["verify", "bounds", "--phi", "3", "--budget", "20000", "--report", str(report)]) == 0
    rep = json.loads(report.read_text())
    assert rep["dictionary"]["3"]["status"] == "certified"
    assert main(["verify", "bounds", "--phi", "42", "--budget", "20000", "--report", str(report)]) == 1


def test_cli_reports_bad_config(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("sb = 0.1\n")
    assert main(["verify", "bounds", "--config", str(cfg)]) == 1
