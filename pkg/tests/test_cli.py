import csv
import json

import pytest

from wavshrink import cli
from wavshrink.prior import NumericalDegeneracy

FAST = ["--iterations", "3000", "--burn-in", "1000", "--thin", "10"]


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def exit_code(argv):
    # argparse reports its own errors through SystemExit
    try:
        return cli.main(argv)
    except SystemExit as exc:
        return exc.code


def test_fit_writes_outputs(tmp_path):
    out = tmp_path / "fit"
    assert cli.main(["--out", str(out), "--alpha", "0.5", "--beta", "0.1", *FAST]) == 0
    summary = read_rows(out / "summary.csv")
    assert summary[0] == ["grid", "mean", "p05", "p25", "p75", "p95"]
    assert len(summary) == 257
    trace = read_rows(out / "trace.csv")
    assert trace[0] == ["iter", "model_size", "log_post"]
    assert len(trace) == 201
    diag = json.loads((out / "diagnostics.json").read_text())
    for key in ("acceptance_rate", "reanchor_max_drift", "seed", "config", "runtime_seconds"):
        assert key in diag
    assert diag["config"]["alpha"] == 0.5 and diag["config"]["iterations"] == 3000
    assert set(cli.DEFAULTS) - {"preset"} <= set(diag["config"])
    assert (out / "data.csv").exists()


def test_fit_is_deterministic(tmp_path):
    for name in ("a", "b"):
        assert cli.main(["--out", str(tmp_path / name), "--seed", "7", *FAST]) == 0
    for f in ("summary.csv", "trace.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_fit_on_input_file(tmp_path):
    data = tmp_path / "obs.csv"
    data.write_text("phase,value,sigma\n" + "".join(f"{i / 40 + 1.0},{(-1) ** i},0.5\n" for i in range(40)))
    out = tmp_path / "o"
    assert cli.main(["--input", str(data), "--out", str(out), "--J", "5", "--J0", "2", *FAST]) == 0
    assert not (out / "data.csv").exists()
    assert len(read_rows(out / "summary.csv")) == 257


def test_config_file_and_override_precedence(tmp_path):
    conf = tmp_path / "run.cfg"
    conf.write_text("# comment\nalpha = 0.7\nbeta: 0.9\nseed = 3\nburn-in = 100\niterations = 600\nthin = 5\n")
    out = tmp_path / "o"
    assert cli.main(["--config", str(conf), "--beta", "0.2", "--out", str(out)]) == 0
    echoed = json.loads((out / "diagnostics.json").read_text())["config"]
    assert echoed["alpha"] == 0.7
    assert echoed["beta"] == 0.2
    assert echoed["seed"] == 3 and echoed["burn_in"] == 100


def test_resolve_config_defaults():
    cfg = cli.resolve_config({}, {})
    assert cfg.hyperparams.alpha == 0.5 and cfg.hyperparams.beta == 0.1
    assert cfg.family.label == "db4" and cfg.mode == "fit"


@pytest.mark.parametrize(
    "argv",
    [
        ["--alpha", "1.5"],
        ["--mode", "nope"],
        ["--J", "3", "--J0", "3"],
        ["--burn-in", "50", "--iterations", "50"],
        ["--family", "sym8"],
        ["--unknown-flag"],
        ["--config", "/nonexistent/file.cfg"],
    ],
)
def test_usage_errors(tmp_path, argv):
    assert exit_code([*argv, "--out", str(tmp_path / "o")]) == 1


def test_bad_config_key(tmp_path):
    conf = tmp_path / "bad.cfg"
    conf.write_text("colour = blue\n")
    assert cli.main(["--config", str(conf), "--out", str(tmp_path / "o")]) == 1


def test_data_errors(tmp_path):
    assert cli.main(["--input", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "o")]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("0.1,1,1\n0.2,x,1\n")
    assert cli.main(["--input", str(bad), "--out", str(tmp_path / "o")]) == 2


def test_numerical_error(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise NumericalDegeneracy("singular")

    monkeypatch.setattr(cli, "smooth_prior", boom)
    assert cli.main(["--out", str(tmp_path / "o"), *FAST]) == 3


def test_degenerate_prior_exit_code(tmp_path):
    argv = ["--out", str(tmp_path / "o"), "--beta", "1e-300", "--sigma0sq", "0", *FAST]
    assert cli.main(argv) == 3


def test_prior_sim(tmp_path):
    out = tmp_path / "p"
    assert cli.main(["--mode", "prior-sim", "--J", "4", "--J0", "2", "--out", str(out)]) == 0
    report = json.loads((out / "prior_sim.json").read_text())
    tv = report["mean_total_variation"]
    assert tv["beta=0.1,full"] < tv["beta=0.9,full"]
    assert tv["beta=0.1,thresholded"] < tv["beta=0.9,thresholded"]
    assert report["ordering_pvalues"]["full"] < 0.01
    draws = read_rows(out / "prior_beta0.1_full.csv")
    assert len(draws) == 501 and len(draws[0]) == 16
    assert (out / "prior_beta0.9_thresholded.csv").exists()
    assert (out / "diagnostics.json").exists()


def test_enumerate_check(tmp_path):
    out = tmp_path / "e"
    argv = ["--mode", "enumerate-check", "--J", "3", "--J0", "1", "--iterations", "20000", "--burn-in", "0",
            "--out", str(out)]
    assert cli.main(argv) == 0
    report = json.loads((out / "enumerate_check.json").read_text())
    assert report["n_models"] == 64 and report["n_recorded"] == 20000
    assert 0 <= report["tv_distance"] < 0.1


def test_preset_panels(tmp_path):
    out = tmp_path / "fig"
    assert cli.main(["--preset", "sensitivity", "--out", str(out), "--iterations", "1200", "--burn-in", "200"]) == 0
    for a, b in cli.SENSITIVITY_PRESET:
        sub = out / f"alpha{a:g}_beta{b:g}"
        diag = json.loads((sub / "diagnostics.json").read_text())
        assert diag["config"]["alpha"] == a and diag["config"]["beta"] == b
        assert len(read_rows(sub / "summary.csv")) == 257


def test_preset_requires_fit(tmp_path):
    assert cli.main(["--preset", "sensitivity", "--mode", "prior-sim", "--out", str(tmp_path)]) == 1
