import filecmp
import math
import os
import subprocess
import sys
from pathlib import Path

import pytest

from hessgd.bench import load_config, parse_config, read_summary, read_trace, run_experiment, summarize, tune_grid
from hessgd.bench.cli import main
from hessgd.bench.selftest import run_selftest
from hessgd.bench.traces import HEADER, emit_trace
from hessgd.errors import ConfigError, ParseError, TuningFailed
from hessgd.scaling import Flag
from hessgd.trace import Status

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

NINE = """
[problem]
kind = logistic
n = 120
d = 5
classes = 3

[run]
seeds = 0 1
max_units = 2000

[output]
dir = {out}

[method.CGMR]
[method.MR]
[method.CG]
[method.GD-limited]
id = gd-ls
[method.fixed]
alpha = theory
[method.heavy-ball]
[method.nesterov]
[method.adam]
lr = 1e-2
[method.pono]
"""

QUAD_TUNE = """
[problem]
kind = quadratic
d = 2
mu = 1
L = 4
linear = false

[method.fixed]
alpha = 0.25

[tune]
method = fixed
grid = {grid}
"""


def _nine(out, **run):
    cfg = parse_config(NINE.format(out=out))
    for k, v in run.items():
        setattr(cfg, k, v)
    return cfg


# --- config grammar --------------------------------------------------------------


def test_parse_shipped_configs():
    cfg = load_config(CONFIGS / "logistic.ini")
    assert [m.label for m in cfg.methods] == ["CGMR", "MR", "CG", "GD-limited", "fixed", "heavy-ball", "nesterov", "adam", "pono"]
    assert cfg.method("CG").params["rule"] == "CG"
    assert cfg.method("GD-limited").kind == "gd-ls"
    assert cfg.method("nesterov").params == {"alpha": "theory", "beta": "theory"}
    assert cfg.problem["feature_spread"] == 30.0
    tune = load_config(CONFIGS / "tune_quadratic.ini").tune
    assert (tune.method, tune.param, tune.grid) == ("fixed", "alpha", [1.0, 0.25, 0.01])


@pytest.mark.parametrize(
    "text, field",
    [
        ("[problem]\nkind = logistic\n", "method"),
        ("[method.CG]\n", "problem"),
        ("[problem]\nkind = spam\n[method.CG]\n", "problem.kind"),
        ("[problem]\nkind = quadratic\nmu = -1\n[method.CG]\n", "problem.mu"),
        ("[problem]\nkind = quadratic\nfoo = 1\n[method.CG]\n", "problem.foo"),
        ("[problem]\nkind = quadratic\n[method.CG]\nrho = 0.7\n", "method.CG.rho"),
        ("[problem]\nkind = quadratic\n[method.x]\nid = newton\n", "method.x.id"),
        ("[problem]\nkind = quadratic\n[method.adam]\n", "method.adam.lr"),
        ("[problem]\nkind = quadratic\n[method.fixed]\n", "method.fixed.alpha"),
        ("[problem]\nkind = quadratic\n[method.CG]\n[run]\nmax_units = lots\n", "run.max_units"),
        ("[problem]\nkind = quadratic\n[method.CG]\n[run]\nseeds = 1 1\n", "run.seeds"),
        ("[problem]\nkind = quadratic\n[method.CG]\n[extra]\n", "extra"),
        ("[problem]\nkind = quadratic\n[method.CG]\n[tune]\nmethod = MR\ngrid = 1\n", "tune.method"),
        ("[problem]\nkind = quadratic\n[method.CG]\n[diagnostics]\nwolfe_eta = 2\n", "diagnostics.wolfe_eta"),
    ],
)
def test_config_errors_name_the_field(text, field):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert str(exc.value).startswith(field + ":") or str(exc.value).startswith(field)


def test_config_comments_and_case(tmp_path):
    cfg = parse_config("# header\n[problem]\nkind = quadratic ; inline\nL = 9\nmu = 3\n[method.MRCG]\n")
    assert cfg.problem == {"kind": "quadratic", "L": 9.0, "mu": 3.0}
    assert cfg.methods[0].params == {"rule": "MRCG"}


def test_libsvm_path_is_relative_to_config(tmp_path):
    (tmp_path / "sub").mkdir()
    ini = tmp_path / "sub" / "exp.ini"
    ini.write_text("[problem]\nkind = libsvm\npath = data.svm\n[method.CG]\n")
    assert load_config(ini).problem["path"] == str(tmp_path / "sub" / "data.svm")


def test_validation_before_running(tmp_path):
    bad_sigma = parse_config(f"[problem]\nkind = rosenbrock2d\n[method.CG]\nsigma = 0\n[output]\ndir = {tmp_path}/o\n")
    with pytest.raises(ConfigError, match="method.CG.sigma"):
        run_experiment(bad_sigma)
    assert not (tmp_path / "o").exists()
    bad_theory = parse_config(f"[problem]\nkind = quartic1d\n[method.fixed]\nalpha = theory\n[output]\ndir = {tmp_path}/o\n")
    with pytest.raises(ConfigError):
        run_experiment(bad_theory)
    missing = parse_config(f"[problem]\nkind = libsvm\npath = {tmp_path}/none.svm\n[method.CG]\n")
    with pytest.raises(ConfigError, match="problem"):
        run_experiment(missing)


# --- experiment matrix ---------------------------------------------------------


@pytest.fixture(scope="module")
def nine_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("nine")
    return run_experiment(_nine(out / "a"))


def test_matrix_writes_every_trace(nine_run):
    res = nine_run
    assert len(res.trace_files) == 18 and all(p.exists() for p in res.trace_files)
    assert res.summary_file.exists()
    assert len(read_summary(res.summary_file)) == 18
    assert not res.failed


def test_traces_parse_back_and_match_summary(nine_run):
    for row in read_summary(nine_run.summary_file):
        recs = read_trace(nine_run.output_dir / f"{row.method}_seed{row.seed}.csv")
        again = summarize(recs, row.method, row.seed, row.status)
        assert again.iterations == row.iterations and again.units == row.units and again.final_f == row.final_f
        assert (again.spc, again.lpc, again.nc) == (row.spc, row.lpc, row.nc)
        assert recs[0].k == 0 and [r.k for r in recs] == list(range(len(recs)))
        if row.method in ("CGMR", "MR", "CG"):
            assert row.spc + row.lpc + row.nc == row.iterations
            assert recs[0].units >= 4
        if row.method in ("fixed", "heavy-ball", "nesterov", "adam"):
            assert all(r.flag is Flag.NONE and r.ls_trials == 0 for r in recs)
            assert math.isnan(row.unit_step_rate)
        if row.status == Status.BUDGET_EXHAUSTED.value:
            # the budget check before the last step passed; the terminal row reached it
            assert recs[-3].units < 2000 <= recs[-1].units


def test_rerun_is_byte_identical_and_worker_independent(nine_run, tmp_path):
    run_experiment(_nine(tmp_path / "b"), workers=2)
    for p in nine_run.trace_files + [nine_run.summary_file]:
        assert filecmp.cmp(p, tmp_path / "b" / p.name, shallow=False), p.name


def test_trace_round_trip(nine_run, tmp_path):
    src = nine_run.trace_files[0]
    recs = read_trace(src)
    emit_trace(recs, tmp_path / "copy.csv")
    assert (tmp_path / "copy.csv").read_bytes() == src.read_bytes()


def test_trace_diagnostic_columns(tmp_path):
    cfg = parse_config(
        f"[problem]\nkind = rosenbrock2d\n[method.CGMR]\n[diagnostics]\nwolfe_eta = 0.9\nsecond_order = yes\n[output]\ndir = {tmp_path}\n"
    )
    res = run_experiment(cfg)
    header = res.trace_files[0].read_text().splitlines()[0].split(",")
    assert header == HEADER + ["wolfe", "sod_ratio"]
    recs = read_trace(res.trace_files[0])
    assert all(r.wolfe_eta_holds in (True, False) for r in recs[:-1])
    assert all(r.sod_ratio <= 1e-10 for r in recs[:-1] if r.sod_ratio is not None)


def test_bad_trace_header(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ParseError):
        read_trace(p)
    p.write_text(",".join(HEADER) + "\n0,1,1,1,1,SPC,1\n")
    with pytest.raises(ParseError) as exc:
        read_trace(p)
    assert exc.value.line == 2


# --- tuning --------------------------------------------------------------------


def test_tune_selects_the_stable_step():
    res = tune_grid(parse_config(QUAD_TUNE.format(grid="1, 0.25, 0.01")), "fixed", [1, 0.25, 0.01])
    status = {p.value: p.status for p in res.points}
    assert status[1.0] == Status.DIVERGED.value
    assert res.best == 0.25
    assert res.total_units == sum(p.units for p in res.points)


def test_tune_single_point_and_all_diverged():
    cfg = parse_config(QUAD_TUNE.format(grid="0.1"))
    assert tune_grid(cfg, "fixed", [0.1]).best == 0.1
    with pytest.raises(TuningFailed):
        tune_grid(cfg, "fixed", [1.0, 2.0])


def test_tune_falls_back_to_final_objective():
    cfg = _nine("unused", max_units=200)
    res = tune_grid(cfg, "fixed", [1e-5])
    assert res.best == 1e-5 and res.points[0].status == Status.BUDGET_EXHAUSTED.value
    res = tune_grid(cfg, "fixed", [1e-5, 1e-2])
    assert res.best == 1e-2


# --- command line ----------------------------------------------------------------


def test_cli_run_and_exit_codes(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "ok.ini").write_text("[problem]\nkind = quadratic\nd = 3\n[method.CGMR]\n[output]\ndir = out\n")
    assert main(["run", "ok.ini"]) == 0
    assert (tmp_path / "out" / "CGMR_seed0.csv").exists()
    (tmp_path / "bad.ini").write_text("[problem]\nkind = quadratic\n")
    assert main(["run", "bad.ini"]) == 1
    assert "method" in capsys.readouterr().err
    assert main(["run", "missing.ini"]) == 1
    # a one-trial search on an ascent-prone start stalls: the run is Failed
    (tmp_path / "fail.ini").write_text("[problem]\nkind = rosenbrock2d\n[method.CG]\nmax_trials = 1\n[output]\ndir = f\n")
    assert main(["run", "fail.ini"]) == 2
    assert (tmp_path / "f" / "CG_seed0.csv").exists()
    assert "Failed" in (tmp_path / "f" / "summary.csv").read_text()


def test_cli_output_override(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("HESSGD_OUTPUT_DIR", str(tmp_path / "elsewhere"))
    (tmp_path / "ok.ini").write_text("[problem]\nkind = quartic1d\n[method.CGMR]\n[output]\ndir = out\n")
    assert main(["run", "ok.ini"]) == 0
    assert (tmp_path / "elsewhere" / "summary.csv").exists() and not (tmp_path / "out").exists()


def test_cli_tune(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert main(["tune", str(CONFIGS / "tune_quadratic.ini")]) == 0
    out = capsys.readouterr().out
    assert "selected alpha=0.25" in out
    assert (tmp_path / "results" / "tune" / "tune_fixed.csv").exists()
    (tmp_path / "all_bad.ini").write_text(QUAD_TUNE.format(grid="1 2"))
    assert main(["tune", "all_bad.ini"]) == 2


def test_cli_check_and_selftest(capsys):
    assert main(["check", "rosenbrock2d", "--points", "2"]) == 0
    assert main(["check", str(CONFIGS / "logistic.ini"), "--points", "1"]) == 0
    out = capsys.readouterr().out
    assert out.count("[PASS]") == 6
    assert main(["selftest"]) == 0
    assert "[FAIL]" not in capsys.readouterr().out


def test_selftest_reports_each_suite():
    lines = []
    assert run_selftest(out=lines.append)
    assert len(lines) >= 7 and all(line.startswith("[PASS]") for line in lines)


def test_console_script_entry_point(tmp_path):
    env = dict(os.environ)
    out = subprocess.run([sys.executable, "-m", "hessgd.bench.cli", "--help"], capture_output=True, text=True, env=env)
    assert out.returncode == 0 and "selftest" in out.stdout
