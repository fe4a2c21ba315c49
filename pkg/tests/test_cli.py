import json
import subprocess
import sys

import numpy as np
import pytest

from pathqv import __version__, cli, truncvar
from pathqv.cli import RunConfig, main, no_finite_limit, resolve_config
from pathqv.paths import SampledPath, load_csv, write_csv


@pytest.fixture
def walk_csv(tmp_path):
    out = tmp_path / "walk.csv"
    assert main(["synth", "--walk", "--steps", "4096", "--h", "0.015625", "--seed", "3", "-o", str(out)]) == 0
    return out


def read_json(path):
    return json.loads(path.read_text())


# -- synth / qv / tv examples ----------------------------------------------------------------

def test_synth_walk_rows(tmp_path):
    out = tmp_path / "w.csv"
    assert main(["synth", "--walk", "--steps", "65536", "--h", "0.00390625", "--seed", "7", "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,x1" and len(lines) == 65537 + 1
    p = load_csv(out)
    assert float((p.increments() ** 2).sum()) == 1.0


def test_synth_oscillator(tmp_path):
    out = tmp_path / "o.csv"
    assert main(["synth", "--oscillator", "--n-max", "3", "-o", str(out)]) == 0
    assert len(load_csv(out)) == 1 + 2 * (1 + 4 + 9)


def test_qv_example(tmp_path):
    walk = tmp_path / "walk.csv"
    main(["synth", "--walk", "--steps", "65536", "--h", "0.00390625", "--seed", "7", "-o", str(walk)])
    out = tmp_path / "qv.json"
    proc = tmp_path / "qv.csv"
    assert main(["qv", "-i", str(walk), "--levels", "3..10", "--tol", "1e-9", "-o", str(out),
                 "--process-csv", str(proc)]) == 0
    rep = read_json(out)
    assert rep["converged"] is True and rep["converged_at"] == 9
    assert rep["levels"] == list(range(3, 11)) and rep["sup_diffs"][-2:] == [0.0, 0.0]
    assert rep["qv_T"] == [[1.0]] and rep["tol"] == 1e-9
    assert rep["version"] == __version__ and rep["config"]["n_min"] == 3
    assert proc.read_text().splitlines()[0] == "t,qv_11,jump_11"


def test_tv_example(walk_csv, tmp_path):
    out = tmp_path / "tv.json"
    assert main(["tv", "-i", str(walk_csv), "--c", "0.25,0.125,0.0625", "-o", str(out)]) == 0
    rows = read_json(out)["table"]
    assert [r["c"] for r in rows] == [0.25, 0.125, 0.0625]
    for r in rows:
        assert r["sandwich_lower_gap"] >= 0 and r["sandwich_upper_gap"] >= 0
        assert r["identity_relative_residual"] <= 1e-12
        assert r["tv_2c"] <= r["tv_regularized"] <= r["tv_2c"] + 2 * r["c"]
    csv_out = tmp_path / "tv.csv"
    assert main(["tv", "-i", str(walk_csv), "--c", "0.25", "-o", str(csv_out)]) == 0
    assert csv_out.read_text().startswith("c,tv_c,c_tv_c,")


def test_partition_command(tmp_path):
    src = tmp_path / "p.csv"
    write_csv(SampledPath([0, 1, 2, 3], [0.0, 0.3, 0.6, 0.3]), src)
    out, trace = tmp_path / "part.csv", tmp_path / "trace.json"
    assert main(["partition", "-i", str(src), "--family", "lebesgue", "--level", "1",
                 "-o", str(out), "--trace", str(trace)]) == 0
    assert out.read_text() == "k,t\n0,0.0\n1,2.0\n2,3.0\n"
    tr = read_json(trace)
    assert tr["dyadic_value"] == [0.0, 0.5]
    for fam in ("drawupdown", "epsilon"):
        assert main(["partition", "-i", str(src), "--family", fam, "--level", "1", "-o", str(out)]) == 0
        assert out.read_text().startswith("k,t\n0,0.0\n")


def test_integrate_command(walk_csv, tmp_path):
    out = tmp_path / "int.json"
    assert main(["integrate", "-i", str(walk_csv), "--levels", "3..8", "-o", str(out)]) == 0
    rep = read_json(out)
    assert rep["converged"] and rep["ibp"]["sup_residual"] <= 1e-10
    p = load_csv(walk_csv)
    expected = 0.5 * p.values[-1, 0] ** 2 - 0.5
    assert abs(rep["integral_T"] - expected) <= 1e-12
    assert abs(rep["stieltjes_T"] - rep["integral_T"]) <= 1e-12


# -- studies ---------------------------------------------------------------------------------

STUDY = ["converge", "--walk", "--steps", "1024", "--h", "0.03125", "--seeds", "0..3",
         "--levels", "3..7", "--c", "0.125,0.0625"]


def test_converge_walk_study(tmp_path):
    out = tmp_path / "study.json"
    assert main(STUDY + ["-o", str(out), "--out-dir", str(tmp_path / "tables")]) == 0
    study = read_json(out)
    assert study["paths"] == 4 and "warning" not in study and study["flags"] == []
    assert all(r["reference"] == 1.0 for r in study["tv_table"])
    assert study["config"]["jump_threshold"] == 0.03125
    fams = {r["family"] for r in study["partition_table"]}
    assert fams == {"lebesgue", "drawupdown", "epsilon"}
    assert (tmp_path / "tables" / "tv_table.csv").read_text().startswith("c,estimate,proof_estimate,reference")
    assert (tmp_path / "tables" / "partition_table.csv").exists()
    assert set(study["summary"]) == {"c", "estimate_T", "reference_T", "abs_err"}


def test_study_json_is_byte_identical(tmp_path, monkeypatch):
    out = tmp_path / "s.json"
    monkeypatch.setenv("PATHQV_THREADS", "1")
    assert main(STUDY + ["-o", str(out)]) == 0
    first = out.read_bytes()
    monkeypatch.setenv("PATHQV_THREADS", "3")
    assert main(STUDY + ["-o", str(out)]) == 0
    assert out.read_bytes() == first


def test_unconverged_reference_warns(tmp_path):
    out = tmp_path / "s.json"
    args = ["converge", "--walk", "--steps", "1024", "--h", "0.03125", "--levels", "1..2", "--c", "0.1", "-o", str(out)]
    assert main(args) == 0
    assert "did not converge" in read_json(out)["warning"]


def test_pure_jump_study(tmp_path):
    src = tmp_path / "jumps.csv"
    write_csv(SampledPath([0, 0.25, 0.5, 0.75], [0.0, 1.0, -0.5, 0.5], horizon=1.0), src)
    out = tmp_path / "s.json"
    assert main(["converge", "-i", str(src), "--levels", "3..6", "--c", "0.25,0.0625,0.001", "-o", str(out)]) == 0
    study = read_json(out)
    ref = study["references"][0]
    assert ref["jump_T"] == ref["qv_T"] == 1.0 + 2.25 + 1.0 and ref["cont_T"] == 0.0
    assert study["tv_table"][-1]["estimate"] < 0.01


def test_oscillator_flag(tmp_path):
    out = tmp_path / "s.json"
    cs = ",".join(repr(0.5 * 2 ** (-k / 2)) for k in range(5))
    assert main(["converge", "--oscillator", "--n-max", "40", "--levels", "3..4", "--c", cs, "--method", "fast", "-o", str(out)]) == 0
    study = read_json(out)
    assert "no finite limit detected" in study["flags"]
    est = [r["estimate"] for r in study["tv_table"]]
    assert all(b > a for a, b in zip(est, est[1:]))


def test_no_finite_limit_rule():
    assert no_finite_limit([1, 2, 4, 8])
    assert not no_finite_limit([1, 1.1, 1.2, 1.3])  # increasing but bounded growth
    assert not no_finite_limit([1, 2, 4])
    assert not no_finite_limit([1, 2, 1.5, 4, 8])
    assert no_finite_limit([5, 1, 2, 3, 4, 0])


def test_report_writes_figures(tmp_path):
    out_dir = tmp_path / "rep"
    args = ["report", "--walk", "--steps", "1024", "--h", "0.03125", "--seeds", "1", "--levels", "3..6",
            "--c", "0.25,0.125", "--out-dir", str(out_dir)]
    assert main(args) == 0
    names = {p.name for p in out_dir.iterdir()}
    assert {"study.json", "tv_table.csv", "partition_table.csv", "tv_estimates.png",
            "partition_errors.png", "path.png"} <= names
    assert (out_dir / "path.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    assert read_json(out_dir / "study.json")["figures"] == ["tv_estimates.png", "partition_errors.png", "path.png"]


# -- configuration -----------------------------------------------------------------------------

def test_config_file_and_flag_precedence(tmp_path, walk_csv):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"# study settings\ninput = {walk_csv}\nlevels = 2..5\ntol = 1e-6\nc = 0.5,0.25\n")
    rc = resolve_config(["qv", "--config", str(cfg), "--levels", "4..9"])
    assert (rc.n_min, rc.n_max, rc.tol, rc.input) == (4, 9, 1e-6, str(walk_csv))
    assert rc.c_grid == (0.5, 0.25)


def test_config_defaults():
    rc = resolve_config(["tv", "-i", "x.csv"])
    assert isinstance(rc, RunConfig) and rc.c_grid == (0.25, 0.125, 0.0625) and rc.jump_threshold == 0.0
    d = rc.to_dict()
    assert d["command"] == "tv" and d["c_grid"] == [0.25, 0.125, 0.0625]


@pytest.mark.parametrize("argv", [
    ["frobnicate"],
    ["synth", "--walk", "--oscillator"],
    ["qv", "-i", "/nonexistent/file.csv"],
    ["qv", "-i", "x.csv", "--levels", "9..3"],
    ["qv", "-i", "x.csv", "--levels", "a..b"],
    ["qv", "-i", "x.csv", "--tol", "0"],
    ["tv", "-i", "x.csv", "--c", "0.1,0.2"],
    ["tv", "-i", "x.csv", "--c", "-1"],
    ["converge", "-i", "x.csv", "--walk"],
    ["synth"],
    ["qv", "--config", "/nonexistent.cfg"],
])
def test_validation_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert "error" in capsys.readouterr().err


def test_bad_csv_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,x1\n0,0\n0,1\n")
    assert main(["qv", "-i", str(bad)]) == 2
    assert "row 3: duplicate time" in capsys.readouterr().err


def test_bad_config_line(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("levels 3..4\n")
    assert main(["qv", "--config", str(cfg)]) == 2
    cfg.write_text("colour = blue\n")
    assert main(["qv", "--config", str(cfg)]) == 2


def test_bad_thread_count(monkeypatch, tmp_path):
    monkeypatch.setenv("PATHQV_THREADS", "lots")
    assert main(STUDY + ["-o", str(tmp_path / "s.json")]) == 2


def test_invariant_violation_exits_3(walk_csv, tmp_path, monkeypatch, capsys):
    real = truncvar.regularize

    def faulty(path, c):
        r = real(path, c)
        return truncvar.RegularizedPath(c, path.with_values(np.zeros_like(path.values) + path.values[0]),
                                        r.tv_of_regularized)

    monkeypatch.setattr(truncvar, "regularize", faulty)
    assert main(["tv", "-i", str(walk_csv), "--c", "0.125", "-o", str(tmp_path / "t.json")]) == 3
    err = capsys.readouterr().err
    dump = json.loads(err.split("\n", 1)[1])
    assert dump["diagnostics"]["c"] == 0.125 and "lower_gap" in dump["diagnostics"]


def test_identity_violation_exits_3(walk_csv, tmp_path, monkeypatch):
    real = cli.tv_integral_identity

    def skewed(path, c):
        r = real(path, c)
        return truncvar.IdentityCheck(r.lhs, r.rhs + 1.0, 1.0)

    monkeypatch.setattr(cli, "tv_integral_identity", skewed)
    assert main(["tv", "-i", str(walk_csv), "--c", "0.125", "-o", str(tmp_path / "t.json")]) == 3


def test_console_script(tmp_path):
    out = tmp_path / "w.csv"
    r = subprocess.run([sys.executable, "-m", "pathqv.cli", "synth", "--walk", "--steps", "8", "-o", str(out)],
                       capture_output=True, text=True)
    assert r.returncode == 0 and len(out.read_text().splitlines()) == 10
    r = subprocess.run([sys.executable, "-m", "pathqv.cli", "nope"], capture_output=True, text=True)
    assert r.returncode == 2
