import numpy as np
import pytest

from extfgm import io
from extfgm.cli import main
from extfgm.params import simulation_params


@pytest.fixture
def params_file(tmp_path):
    path = tmp_path / "model.toml"
    path.write_text("d = 3\nlambda1.12 = 0.15\nlambda2.123 = 0.03\n")
    return str(path)


def run(*args):
    return main([str(a) for a in args])


def test_check_exit_codes(tmp_path, params_file, capsys):
    assert run("check", "--params", params_file) == 0
    assert "valid" in capsys.readouterr().out
    bad = tmp_path / "bad.toml"
    bad.write_text("d = 2\nlambda1.12 = 0.6\n")
    assert run("check", "--params", bad) == 2
    assert "excess 0.8" in capsys.readouterr().out
    sim = tmp_path / "sim.csv"
    io.write_params(simulation_params(), str(sim))
    assert run("check", "--params", sim) == 2
    assert run("check", "--params", tmp_path / "missing.toml") == 3
    broken = tmp_path / "broken.toml"
    broken.write_text("lambda1.12 = [\n")
    assert run("check", "--params", broken) == 3
    assert run("nonsense") == 3


def test_config_file_supplies_params(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text("seed = 4\nd = 2\n[lambda1]\n12 = 0.2\n")
    assert run("--config", cfg, "check") == 0
    cfg.write_text("d = 3\nparams = 'x.csv'\n")
    assert run("--config", cfg, "check") == 3


def test_simulate_is_deterministic(tmp_path, params_file):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert run("--seed", 11, "--out", out1, "simulate", "--params", params_file, "--n", 300) == 0
    assert run("simulate", "--params", params_file, "--n", 300, "--seed", 11, "--out", out2) == 0
    a = (out1 / "samples.csv").read_bytes()
    assert a == (out2 / "samples.csv").read_bytes()
    assert run("simulate", "--params", params_file, "--seed", 12, "--out", out2) == 0
    assert a != (out2 / "samples.csv").read_bytes()


def test_simulate_invalid_requires_flag(tmp_path):
    sim = tmp_path / "sim.csv"
    io.write_params(simulation_params(), str(sim))
    assert run("simulate", "--params", sim, "--out", tmp_path) == 2
    assert run("simulate", "--params", sim, "--out", tmp_path, "--allow-invalid", "--n", 50) == 0
    assert run("simulate", "--params", sim, "--out", tmp_path, "--project", "--n", 50) == 3


def test_estimate_recovers_parameters(tmp_path, params_file, capsys):
    run("--seed", 1, "--out", tmp_path, "simulate", "--params", params_file, "--n", 20000)
    data = tmp_path / "samples.csv"
    assert run("estimate", "--input", data, "--out", tmp_path) == 0
    assert "lambda1_12" in capsys.readouterr().out
    est = io.params_from_csv(_estimates_as_params(tmp_path / "estimates.csv"), d=3)
    assert abs(est.get(1, 0b11) - 0.15) < 0.03
    cov = io.covariance_from_csv((tmp_path / "covariance.csv").read_text())
    assert cov.matrix.shape == (8, 8)


def _estimates_as_params(path):
    lines = path.read_text().splitlines()
    return "k,mask,lambda\n" + "\n".join(",".join(l.split(",")[:3]) for l in lines[1:])


def test_rows_and_pit_options(tmp_path, params_file):
    run("--out", tmp_path, "simulate", "--params", params_file, "--n", 200)
    data = tmp_path / "samples.csv"
    assert run("estimate", "--input", data, "--rows", "1:100", "--out", tmp_path) == 0
    first = (tmp_path / "estimates.csv").read_text()
    assert run("estimate", "--input", data, "--out", tmp_path) == 0
    assert first != (tmp_path / "estimates.csv").read_text()
    assert run("estimate", "--input", data, "--rows", "0:10") == 3
    assert run("estimate", "--input", data, "--rows", "a:b") == 3
    assert run("estimate", "--input", data, "--pit", "ranks", "--out", tmp_path) == 0
    two = tmp_path / "two.toml"
    two.write_text("d = 2\n")
    assert run("estimate", "--input", data, "--params", two) == 3
    raw = tmp_path / "raw.csv"
    raw.write_text("c1,c3,c5,c7\n" + "\n".join(
        ",".join(f"{x:.5f}" for x in row)
        for row in np.random.default_rng(0).normal(-0.1, 0.1, (60, 4))
    ))
    assert run("estimate", "--input", raw, "--pit", "gent", "--out", tmp_path) == 0
    assert run("estimate", "--input", raw) == 3


def test_ci_and_test(tmp_path, params_file, capsys):
    run("--out", tmp_path, "simulate", "--params", params_file, "--n", 2000)
    data = tmp_path / "samples.csv"
    assert run("ci", "--input", data, "--alpha", 0.1, "--out", tmp_path) == 0
    assert "90% lower" in capsys.readouterr().out
    assert (tmp_path / "ci.csv").read_text().startswith("k,mask,lambda,lower,upper")
    assert run("test", "--input", data, "--out", tmp_path) == 0
    assert "df = 4" in capsys.readouterr().out
    strong = tmp_path / "strong.toml"
    strong.write_text("d = 2\nlambda2.12 = 0.19\n")
    run("--out", tmp_path / "s", "simulate", "--params", strong, "--n", 5000)
    assert run("test", "--input", tmp_path / "s" / "samples.csv", "--out", tmp_path) == 0
    assert run("test", "--input", tmp_path / "s" / "samples.csv", "--strict", "--out", tmp_path) == 1


def test_gof_exit_codes(tmp_path, params_file):
    run("--out", tmp_path, "simulate", "--params", params_file, "--n", 3000, "--seed", 3)
    data = tmp_path / "samples.csv"
    assert run("gof", "--input", data, "--params", params_file, "--alpha", 0.01, "--out", tmp_path) == 0
    dev = (tmp_path / "deviation.csv").read_text().splitlines()
    assert dev[0] == "u1,dev1,u2,dev2,u3,dev3" and len(dev) == 3001
    wrong = tmp_path / "wrong.toml"
    wrong.write_text("d = 2\nlambda1.12 = 0.3\n")
    (tmp_path / "two.toml").write_text("d = 2\n")
    run("--out", tmp_path / "i", "simulate", "--params", tmp_path / "two.toml", "--n", 5000)
    assert run("gof", "--input", tmp_path / "i" / "samples.csv", "--params", wrong,
               "--alpha", 0.01, "--out", tmp_path) == 1
    # without parameters the reduced fit is checked; here it fails the
    # constraint, so it needs an explicit projection
    assert run("gof", "--input", data, "--out", tmp_path) == 2
    assert run("gof", "--input", data, "--project", "--out", tmp_path) in (0, 1)


def test_select(tmp_path, params_file, capsys):
    run("--out", tmp_path, "simulate", "--params", params_file, "--n", 3000)
    data = tmp_path / "samples.csv"
    assert run("select", "--input", data, "--out", tmp_path) == 0
    out = capsys.readouterr().out
    for name in ("classical", "extended-full", "extended-reduced"):
        assert name in out
    reduced = io.read_params(str(tmp_path / "reduced.csv"))
    assert reduced.get(1, 0b11) != 0
    scores = (tmp_path / "scores.csv").read_text().splitlines()
    assert scores[0] == "model,loglik,p_active,aic,bic" and len(scores) == 4


def test_study_outputs_are_thread_independent(tmp_path):
    args = ["study", "--preset", "simulation", "--allow-invalid", "--which", "coverage",
            "--sizes", "200", "--replications", 40, "--seed", 5]
    assert run(*args, "--out", tmp_path / "a", "--threads", 1) == 0
    assert run(*args, "--out", tmp_path / "b", "--threads", 2) == 0
    a = (tmp_path / "a" / "study_coverage.csv").read_bytes()
    assert a == (tmp_path / "b" / "study_coverage.csv").read_bytes()
    assert run("study", "--preset", "simulation", "--sizes", "100", "--out", tmp_path) == 2


def test_study_markdown_and_chi2(tmp_path, capsys):
    assert run("study", "--preset", "simulation", "--allow-invalid", "--sizes", "100,200",
               "--format", "md", "--out", tmp_path) == 0
    assert (tmp_path / "study_consistency.md").read_text().startswith("|")
    capsys.readouterr()
    assert run("study", "--preset", "simulation", "--allow-invalid", "--which", "chi2-calibration",
               "--sizes", "300", "--replications", 20, "--out", tmp_path) == 0
    assert "rejection_rate" in capsys.readouterr().out
