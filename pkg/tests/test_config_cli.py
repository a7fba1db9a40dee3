import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from greysim.cli import main
from greysim.config import ConfigError, ExperimentConfig, dump_config, parse_config
from greysim.fbm import read_paths_csv

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=60, deadline=None)
@given(
    st.floats(0.01, 1.99),
    st.floats(0.01, 1.0),
    st.floats(1e-3, 100.0),
    st.integers(1, 10_000),
    st.integers(0, 2**63 - 1),
    st.integers(1, 64),
    st.lists(finite, min_size=1, max_size=3),
    st.sampled_from(["circulant", "cholesky"]),
    st.lists(st.sampled_from(["moments", "cf", "density", "all"]), min_size=1, max_size=3),
)
def test_config_roundtrip(alpha, beta, horizon, steps, seed, streams, x0, method, suite):
    cfg = ExperimentConfig(
        alpha=alpha, beta=beta, horizon=horizon, steps=steps, seed=seed, streams=streams,
        x0=x0, method=method, suite=suite,
        field_name="sine", field_params={"sigma": [[alpha, -beta]], "a": horizon},
    )
    assert parse_config(dump_config(cfg)) == cfg


def test_config_defaults_and_partial_file():
    cfg = parse_config("[params]\nalpha = 1.2\nbeta = 0.4\n")
    assert (cfg.alpha, cfg.beta, cfg.steps) == (1.2, 0.4, ExperimentConfig().steps)


@pytest.mark.parametrize(
    "text",
    [
        "[params]\nalpha = 2.5\n",
        "[params]\nbeta = x\n",
        "[params]\ngamma = 1\n",
        "[bogus]\nk = 1\n",
        "[run]\nmethod = fft\n",
        "[field]\nsigma = [[1.0\n",
        "not an ini file",
    ],
)
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_config_replace_ignores_none():
    cfg = ExperimentConfig().replace(alpha=None, beta=0.3)
    assert cfg.alpha == 1.5 and cfg.beta == 0.3


# --- CLI -----------------------------------------------------------------------


def test_specfun_eval(capsys):
    assert main(["specfun", "eval", "mwright", "--beta", "0.5", "0", "1"]) == 0
    rows = [line.split(",") for line in capsys.readouterr().out.split()]
    assert float(rows[0][1]) == pytest.approx(0.5641895835, abs=1e-10)
    assert main(["specfun", "eval", "ml", "--beta", "0.5", "1"]) == 2


def test_usage_errors(capsys):
    assert main(["verify", "--suite", "moments", "--alpha", "1.5"]) == 2
    assert "missing --beta" in capsys.readouterr().err
    assert main(["nonsense"]) == 2
    assert main(["verify", "--suite", "nope", "--alpha", "1.5", "--beta", "0.7"]) == 2
    assert main(["verify", "--alpha", "2.5", "--beta", "0.7"]) == 2
    assert main(["sample", "--alpha", "1.5", "--beta", "0.7", "--config", "/nonexistent.ini"]) == 2
    assert main(["report", "/nonexistent.json"]) == 2


def test_seed_env(monkeypatch, capsys):
    monkeypatch.setenv("GREYSIM_SEED", "abc")
    assert main(["young", "selftest"]) == 2
    monkeypatch.setenv("GREYSIM_SEED", "5")
    assert main(["young", "selftest"]) == 0


def test_solve_writes_csv(tmp_path):
    out = tmp_path / "paths.csv"
    assert main(["solve", "--field", "constant", "--sigma", "1", "--t", "1", "--paths", "20",
                 "--steps", "32", "--out", str(out)]) == 0
    grid, values = read_paths_csv(out)
    assert values.shape == (20, 33, 1) and grid.horizon == 1.0


def test_solve_field_flags(tmp_path):
    out = tmp_path / "p.csv"
    assert main(["solve", "--field", "linear_bounded", "--sigma", "[[1, 0.2], [0, 1]]", "--x0", "[0.5, -0.5]",
                 "--paths", "3", "--steps", "8", "--out", str(out)]) == 0
    _, v = read_paths_csv(out)
    assert v.shape == (3, 9, 2) and np.array_equal(v[:, 0], np.tile([0.5, -0.5], (3, 1)))
    assert main(["solve", "--field", "geometric", "--sigma", "1", "--paths", "2", "--out", str(out)]) == 2


def test_sample_and_fbm(tmp_path, capsys):
    out = tmp_path / "s.csv"
    yout = tmp_path / "y.txt"
    assert main(["sample", "--alpha", "1.5", "--beta", "0.5", "--paths", "4", "--steps", "16",
                 "--out", str(out), "--y-out", str(yout)]) == 0
    assert read_paths_csv(out)[1].shape == (4, 17, 1)
    assert np.loadtxt(yout).shape == (4,)
    assert main(["fbm", "--hurst", "0.7", "--paths", "1", "--steps", "4"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "t,x1" and len(lines) == 6


def test_density_cli(tmp_path):
    out = tmp_path / "d.csv"
    assert main(["density", "--alpha", "1.5", "--beta", "1", "--points", "3", "--zmin", "0", "--zmax", "0",
                 "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "z,p" and float(rows[1].split(",")[1]) == pytest.approx(0.3989422804)
    assert main(["density", "--alpha", "1.5", "--beta", "0.7", "--estimator", "kde", "--samples", "500",
                 "--points", "5", "--out", str(out)]) == 0


def test_config_file_with_override(tmp_path, capsys):
    cfg = ExperimentConfig(alpha=1.5, beta=0.7, samples=2000, suite=["moments"], seed=3)
    path = tmp_path / "run.ini"
    path.write_text(dump_config(cfg))
    out = tmp_path / "r.json"
    assert main(["verify", "--config", str(path), "--out", str(out), "--quiet"]) == 0
    a = json.loads(out.read_text())
    assert {r["seed"] for r in a} == {3}
    assert main(["verify", "--config", str(path), "--seed", "4", "--out", str(out), "--quiet"]) in (0, 1)
    assert {r["seed"] for r in json.loads(out.read_text())} == {4}


def test_verify_deterministic_and_report(tmp_path, capsys):
    outs = []
    for k in range(2):
        f = tmp_path / f"r{k}.json"
        code = main(["verify", "--suite", "moments,cf", "--alpha", "1.5", "--beta", "0.7", "--seed", "42",
                     "--samples", "20000", "--omit-timing", "--out", str(f), "--quiet"])
        assert code == 0
        outs.append(f.read_bytes())
    assert outs[0] == outs[1]
    f = tmp_path / "r2.json"
    main(["verify", "--suite", "moments,cf", "--alpha", "1.5", "--beta", "0.7", "--seed", "42",
          "--samples", "20000", "--streams", "3", "--omit-timing", "--out", str(f), "--quiet"])
    assert f.read_bytes() != outs[0]
    capsys.readouterr()
    assert main(["report", str(tmp_path / "r0.json")]) == 0
    assert capsys.readouterr().out.strip().endswith("passed")


def test_report_with_failure_exits_one(tmp_path):
    f = tmp_path / "r.json"
    code = main(["verify", "--suite", "young", "--alpha", "1.5", "--beta", "0.7", "--out", str(f), "--quiet"])
    assert code == 0
    data = json.loads(f.read_text())
    data[0]["statistic"] = 1.0
    data[0]["pass"] = False
    f.write_text(json.dumps(data))
    assert main(["report", str(f)]) == 1


def test_entry_point_subprocess():
    r = subprocess.run([sys.executable, "-m", "greysim", "specfun", "eval", "ml", "--beta", "1", "-1"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("-1,0.36787944117144")


def test_config_output_paths(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = ExperimentConfig(steps=4, paths=2, samples=2000, suite=["moments"],
                           paths_csv="x.csv", report_json="r.json")
    (tmp_path / "run.ini").write_text(dump_config(cfg))
    assert main(["solve", "--config", "run.ini"]) == 0
    assert read_paths_csv(tmp_path / "x.csv")[1].shape == (2, 5, 1)
    assert main(["verify", "--config", "run.ini", "--quiet"]) == 0
    assert json.loads((tmp_path / "r.json").read_text())[0]["check_id"]
    assert main(["solve", "--config", "run.ini", "--out", "y.csv"]) == 0
    assert (tmp_path / "y.csv").exists()
