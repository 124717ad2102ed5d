"""Command-line harness: batches, reports, landscape, solve, replay."""

import json
import math
import os

import numpy as np
import numpy.testing as npt
import pytest

from conewton import cli, instance_io, problems, solver
from conewton.cli import main, parse_angle


def _read_csv(path):
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    header = lines[0].split(",")
    return header, [dict(zip(header, ln.split(","))) for ln in lines[1:]]


def _read_manifest(out_dir):
    with open(os.path.join(out_dir, "manifest.json"), encoding="ascii") as fh:
        return json.load(fh)


def test_parse_angle():
    assert parse_angle("pi/6") == pytest.approx(math.pi / 6, rel=1e-15)
    assert parse_angle("5pi/12") == pytest.approx(5 * math.pi / 12, rel=1e-15)
    assert parse_angle("2pi/3") == pytest.approx(2 * math.pi / 3, rel=1e-15)
    assert parse_angle("pi") == pytest.approx(math.pi, rel=1e-15)
    assert parse_angle(" PI/4 ") == pytest.approx(math.pi / 4, rel=1e-15)
    assert parse_angle("0.75") == 0.75


CIRC_FLAGS = ["circular", "--n", "30", "--m", "7", "--omegas", "pi/6,pi/4",
              "--seeds", "3", "--start", "SP0", "--maxiter", "100"]


def test_circular_batch_reports(tmp_path):
    out = str(tmp_path / "c")
    assert main(CIRC_FLAGS + ["--out", out]) == 0
    for name in ("results.csv", "times.csv", "manifest.json", "residuals.png"):
        assert os.path.exists(os.path.join(out, name)), name

    header, rows = _read_csv(os.path.join(out, "results.csv"))
    assert header == ["seed", "omega", "start", "status", "residual", "iters"]
    assert len(rows) == 6
    for row in rows:
        assert row["status"] == "Solved"
        assert float(row["residual"]) <= 1e-8
        assert row["start"] == "SP0"
    assert {r["omega"] for r in rows} == {"pi/6", "pi/4"}

    # times.csv carries the wall clock so results.csv can stay deterministic
    theader, trows = _read_csv(os.path.join(out, "times.csv"))
    assert theader == ["seed", "omega", "start", "seconds"]
    assert len(trows) == 6
    assert all(float(r["seconds"]) >= 0.0 for r in trows)

    doc = _read_manifest(out)
    assert doc["format"] == cli.MANIFEST_FORMAT
    assert doc["command"] == "circular"
    assert doc["config"]["tol"] == 1e-8
    assert len(doc["results"]) == 6
    assert all("step_counts" in r for r in doc["results"])
    assert "numpy" in doc["environment"]
    assert "rows" in doc["generator_metadata"]


def test_circular_rerun_is_byte_identical(tmp_path):
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(CIRC_FLAGS + ["--out", out1]) == 0
    assert main(CIRC_FLAGS + ["--out", out2]) == 0
    with open(os.path.join(out1, "results.csv"), "rb") as fh:
        first = fh.read()
    with open(os.path.join(out2, "results.csv"), "rb") as fh:
        second = fh.read()
    assert first == second


def test_circular_sp1_hits_strongly_stationary(tmp_path):
    out = str(tmp_path / "sp1")
    assert main(["circular", "--n", "30", "--m", "7", "--omegas", "pi/12",
                 "--seeds", "6", "--start", "SP1", "--out", out]) == 0
    _, rows = _read_csv(os.path.join(out, "results.csv"))
    assert any(r["status"] == "StronglyStationary" for r in rows)
    for r in rows:
        if r["status"] == "StronglyStationary":
            assert float(r["residual"]) > 1e-3  # stationary, not a solution


def test_circular_json_format(tmp_path):
    out = str(tmp_path / "j")
    assert main(CIRC_FLAGS + ["--out", out, "--format", "json"]) == 0
    with open(os.path.join(out, "results.json"), encoding="ascii") as fh:
        rows = json.load(fh)
    assert len(rows) == 6 and rows[0]["status"] == "Solved"


def test_lowrank_subset_reports(tmp_path):
    out = str(tmp_path / "lr")
    assert main(["lowrank", "--n", "10", "--p", "0.1", "--rank", "1",
                 "--seeds", "2", "--maxiter", "1500", "--out", out]) == 0
    header, rows = _read_csv(os.path.join(out, "results.csv"))
    assert header == ["seed", "p", "r_max", "start", "status", "residual",
                      "iters"]
    assert len(rows) == 2
    assert all(r["status"] == "Solved" for r in rows)
    assert all(r["start"] in ("rowrank1", "perturb") for r in rows)

    # summary percentages must recompute exactly from the manifest rows
    doc = _read_manifest(out)
    _, summary = _read_csv(os.path.join(out, "summary.csv"))
    for cell in summary:
        thr = float(cell["threshold_seconds"])
        matching = [r for r in doc["results"]
                    if str(r["r_max"]) == cell["r_max"] and r["p"] == cell["p"]]
        hit = sum(1 for r in matching
                  if r["status"] == "Solved" and r["wall_time"] <= thr)
        assert cell["solved_pct"] == "%.1f" % (100.0 * hit / len(matching))
    assert os.path.exists(os.path.join(out, "times.png"))


def test_lowrank_failure_rows_keep_best_residual(tmp_path):
    out = str(tmp_path / "hard")
    assert main(["lowrank", "--n", "10", "--p", "0.3", "--rank", "3",
                 "--seeds", "1", "--maxiter", "30", "--out", out]) == 0
    _, rows = _read_csv(os.path.join(out, "results.csv"))
    assert len(rows) == 1
    row = rows[0]
    assert row["status"] in ("Solved", "MaxIterations", "ProgressStalled",
                             "LinesearchStalled", "StronglyStationary")
    assert np.isfinite(float(row["residual"]))
    assert int(row["iters"]) <= 30


def test_landscape_optimal_multiplier(tmp_path):
    out = str(tmp_path / "land")
    assert main(["landscape", "--omega", "pi/4", "--a", "1,1", "--b", "1",
                 "--c", "1,0", "--multiplier", "optimal",
                 "--range=-2,2,-2,2", "--resolution", "101",
                 "--out", out]) == 0
    header, grid = _read_csv(os.path.join(out, "grid.csv"))
    assert header == ["x1", "x2", "h_norm"]
    assert len(grid) == 101 * 101
    doc = _read_manifest(out)
    result = doc["results"][0]
    assert result["grid_min"] <= 0.1
    assert result["feasible_samples"] > 0

    _, overlays = _read_csv(os.path.join(out, "overlays.csv"))
    kinds = {r["kind"] for r in overlays}
    assert {"solution", "feasible", "ray"} <= kinds
    sol = next(r for r in overlays if r["kind"] == "solution")
    y_sol = np.array([float(sol["x1"]), float(sol["x2"])])
    # grid minimum coincides with the solver's point to grid resolution
    npt.assert_allclose(result["grid_argmin"], y_sol, atol=0.05)
    # and its cone projection is the known program solution (1/2, 1/2)
    from conewton import cones
    npt.assert_allclose(cones.project(cones.circular(2, math.pi / 4), y_sol),
                        [0.5, 0.5], atol=1e-6)
    assert os.path.exists(os.path.join(out, "landscape.png"))


def test_landscape_nonoptimal_multiplier_isolated_minimum(tmp_path):
    out = str(tmp_path / "land-no")
    assert main(["landscape", "--omega", "pi/4", "--a", "1,1", "--b", "1",
                 "--c", "1,0", "--multiplier", "nonoptimal",
                 "--range=-12,2,-10,2", "--resolution", "141",
                 "--out", out]) == 0
    doc = _read_manifest(out)
    result = doc["results"][0]
    sigma = result["sigma"]
    w = np.array([1.0, 0.0]) - np.array([1.0, 1.0]) * sigma
    # the fixed-multiplier stationary point sits at y = -w with ||H|| = |b|
    assert w[0] > abs(w[1])  # strictly dual-interior slack
    npt.assert_allclose(result["grid_argmin"], -w, atol=0.1)
    assert 0.9 <= result["grid_min"] <= 1.1

    _, overlays = _read_csv(os.path.join(out, "overlays.csv"))
    stat = [r for r in overlays if r["kind"] == "stationary"]
    assert len(stat) == 1
    npt.assert_allclose([float(stat[0]["x1"]), float(stat[0]["x2"])], -w,
                        atol=1e-9)


def test_landscape_window_without_feasible_points(tmp_path):
    out = str(tmp_path / "land-empty")
    assert main(["landscape", "--omega", "pi/4", "--a", "1,1", "--b", "1",
                 "--c", "1,0", "--sigma", "0.0",
                 "--range=-2,-1,-2,-1", "--resolution", "41",
                 "--out", out]) == 0
    doc = _read_manifest(out)
    assert doc["results"][0]["feasible_samples"] == 0
    _, overlays = _read_csv(os.path.join(out, "overlays.csv"))
    assert not any(r["kind"] == "feasible" for r in overlays)


def test_landscape_rejects_non_2d():
    with pytest.raises(SystemExit):
        main(["landscape", "--a", "1,1,1", "--c", "1,0,0", "--out", "/tmp/x"])
    with pytest.raises(SystemExit):
        main(["landscape", "--range=-2,2", "--out", "/tmp/x"])


def test_solve_round_trip_matches_in_process(tmp_path, capsys):
    inst = problems.generate_circular(8, 2, math.pi / 6, 5)
    path = str(tmp_path / "inst.txt")
    instance_io.write_instance(path, inst)
    rc = main(["solve", "--instance", path])
    captured = capsys.readouterr().out
    assert rc == 0

    prob = problems.build_circular(inst)
    y0, s0 = problems.starting_point("SP0", 5, 8, 2)
    rep = solver.solve(prob, y0, s0, solver.SolverConfig())
    assert f"status: {rep.status}" in captured
    assert f"residual: {rep.final_h_norm:.6e}" in captured
    assert f"iterations: {rep.iterations}" in captured


def test_solve_exit_code_strongly_stationary(tmp_path, capsys):
    inst = problems.generate_circular(30, 7, math.pi / 12, 0)
    path = str(tmp_path / "inst.txt")
    instance_io.write_instance(path, inst)
    rc = main(["solve", "--instance", path, "--start", "SP1"])
    assert rc == 2
    assert "status: StronglyStationary" in capsys.readouterr().out


def test_solve_exit_code_unsolved(tmp_path, capsys):
    inst = problems.generate_completion(10, 0.3, 3, 0)
    path = str(tmp_path / "inst.txt")
    instance_io.write_instance(path, inst)
    rc = main(["solve", "--instance", path, "--maxiter", "10"])
    capsys.readouterr()
    assert rc == 3


def test_solve_malformed_header_exit_64(tmp_path, capsys):
    path = str(tmp_path / "bad.txt")
    with open(path, "w") as fh:
        fh.write("NCP-INSTANCE v2 circular-lp\n")
    rc = main(["solve", "--instance", path])
    err = capsys.readouterr().err
    assert rc == 64
    assert "line 1" in err


def test_solve_missing_file_exit_66(tmp_path, capsys):
    rc = main(["solve", "--instance", str(tmp_path / "nope.txt")])
    capsys.readouterr()
    assert rc == 66


def test_solve_tol_override_lands_in_manifest(tmp_path, capsys):
    inst = problems.generate_circular(8, 2, math.pi / 6, 5)
    path = str(tmp_path / "inst.txt")
    instance_io.write_instance(path, inst)
    out = str(tmp_path / "rep")
    rc = main(["solve", "--instance", path, "--tol", "1e-6", "--out", out])
    capsys.readouterr()
    assert rc == 0
    doc = _read_manifest(out)
    assert doc["config"]["tol"] == 1e-6
    assert doc["flags"]["start"] == "SP0"


def test_replay_reproduces_results_csv(tmp_path):
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(CIRC_FLAGS + ["--out", out1]) == 0
    assert main(["replay", os.path.join(out1, "manifest.json"),
                 "--out", out2]) == 0
    with open(os.path.join(out1, "results.csv"), "rb") as fh:
        first = fh.read()
    with open(os.path.join(out2, "results.csv"), "rb") as fh:
        second = fh.read()
    assert first == second


def test_replay_rejects_foreign_json(tmp_path, capsys):
    path = str(tmp_path / "other.json")
    with open(path, "w") as fh:
        json.dump({"format": "something-else"}, fh)
    rc = main(["replay", path, "--out", str(tmp_path / "o")])
    capsys.readouterr()
    assert rc == 64


def test_jobs_env_cap(monkeypatch, tmp_path):
    monkeypatch.setenv("CONEWTON_THREADS", "1")
    assert cli._cap_jobs(8, 100) == 1
    monkeypatch.setenv("CONEWTON_THREADS", "4")
    assert cli._cap_jobs(8, 100) == 4
    assert cli._cap_jobs(8, 2) == 2
    monkeypatch.delenv("CONEWTON_THREADS")
    assert cli._cap_jobs(3, 100) == 3

    # a capped parallel request still produces the deterministic report
    monkeypatch.setenv("CONEWTON_THREADS", "1")
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    small = ["circular", "--n", "12", "--m", "3", "--omegas", "pi/4",
             "--seeds", "2"]
    assert main(small + ["--out", out1, "--jobs", "4"]) == 0
    assert main(small + ["--out", out2, "--jobs", "1"]) == 0
    with open(os.path.join(out1, "results.csv"), "rb") as fh:
        first = fh.read()
    with open(os.path.join(out2, "results.csv"), "rb") as fh:
        second = fh.read()
    assert first == second


def test_usage_errors_exit_nonzero():
    with pytest.raises(SystemExit) as err:
        main(["circular", "--start", "SP7"])
    assert err.value.code != 0
    with pytest.raises(SystemExit):
        main([])
