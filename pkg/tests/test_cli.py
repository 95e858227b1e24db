import json
import subprocess
import sys

import numpy as np
import pytest

from decdens.cli import EXIT_DATA, EXIT_USAGE, main
from decdens.core import SampleData
from decdens.estimators import grenander

TINY = ["--iters", "200", "--burn", "100"]


@pytest.fixture
def datafile(tmp_path):
    p = tmp_path / "data.txt"
    vals = np.random.default_rng(0).exponential(size=60)
    p.write_text("".join(f"{float(v)!r}\n" for v in vals))
    return p


def read_csv(path):
    lines = path.read_text().splitlines()
    return lines[0].split(","), [row.split(",") for row in lines[1:]]


def test_fit_writes_summaries_and_manifest(tmp_path, datafile):
    out = tmp_path / "fit"
    assert main(["fit", str(datafile), "--out", str(out), "--base", "A", "--grid-points", "25"] + TINY) == 0
    header, rows = read_csv(out / "f_summary.csv")
    assert header == ["x", "mean", "median", "lo", "hi"]
    assert len(rows) == 25 and float(rows[0][0]) == 0.0
    _, h0 = read_csv(out / "H0_summary.csv")
    assert [float(v) for v in h0[0][1:]] == [0.0, 0.0, 0.0, 0.0]
    m = json.loads((out / "manifest.json").read_text())
    assert m["settings"]["seed"] == 0 and m["settings"]["iters"] == 200
    assert 0 <= m["run"]["acceptance_rate"] <= 1
    assert m["run"]["draws"] == 100
    assert set(m["outputs"]) == {"f_summary.csv", "H0_summary.csv"}


def test_fit_is_deterministic_and_replayable(tmp_path, datafile):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    args = ["fit", str(datafile), "--base", "D", "--seed", "5"] + TINY
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert main(["replay", str(a / "manifest.json"), "--out", str(c)]) == 0
    for name in ("f_summary.csv", "H0_summary.csv", "manifest.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes() == (c / name).read_bytes()


def test_missing_file_exits_3_without_outputs(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["fit", str(tmp_path / "nope.txt"), "--out", str(out)] + TINY) == EXIT_DATA
    assert not out.exists() or not any(out.iterdir())
    assert "data error" in capsys.readouterr().err


def test_bad_line_exits_3(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("1.0\n-2\n")
    assert main(["zero", str(p), "--out", str(tmp_path / "o"), "--no-bayes"]) == EXIT_DATA


def test_unknown_kind_exits_2(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["study", "bogus", "--out", str(tmp_path)])
    assert exc.value.code == EXIT_USAGE


def test_invalid_setting_exits_2(tmp_path, datafile):
    assert main(["fit", str(datafile), "--out", str(tmp_path / "o"), "--iters", "10", "--burn", "10"]) == EXIT_USAGE


def test_zero_no_bayes(tmp_path, datafile, capsys):
    out = tmp_path / "z"
    assert main(["zero", str(datafile), "--out", str(out), "--no-bayes"]) == 0
    header, rows = read_csv(out / "zero_estimates.csv")
    assert header == ["estimator", "value"]
    assert [r[0] for r in rows] == ["G", "P", "S", "A", "H"]
    tuning = json.loads((out / "tuning.json").read_text())
    for key in ("alpha_n", "beta_hat", "B21_hat", "b_hat", "fprime_hat"):
        assert key in tuning
    assert "f^P" in capsys.readouterr().out


def test_zero_with_bayes(tmp_path, datafile):
    out = tmp_path / "z"
    assert main(["zero", str(datafile), "--out", str(out)] + TINY) == 0
    _, rows = read_csv(out / "zero_estimates.csv")
    assert rows[-1][0] == "B" and float(rows[-1][1]) > 0


def test_zero_tiny_pilot_is_grenander(tmp_path, datafile):
    out = tmp_path / "z"
    assert main(["zero", str(datafile), "--out", str(out), "--no-bayes", "--alpha0", "1e-12"]) == 0
    tuning = json.loads((out / "tuning.json").read_text())
    g0 = grenander(SampleData(np.loadtxt(datafile))).at_zero()
    assert tuning["pilot0"] == pytest.approx(g0, rel=1e-8)


def test_zero_forced_penalty_is_grenander(tmp_path, datafile):
    out = tmp_path / "z"
    assert main(["zero", str(datafile), "--out", str(out), "--no-bayes", "--penalty", "1e-12"]) == 0
    _, rows = read_csv(out / "zero_estimates.csv")
    vals = dict(rows)
    assert float(vals["P"]) == pytest.approx(float(vals["G"]), rel=1e-8)


def test_study_compare_shape(tmp_path):
    out = tmp_path / "cmp"
    rc = main(["study", "compare", "--out", str(out), "--n", "30,60", "--reps", "3"] + TINY)
    assert rc == 0
    header, rows = read_csv(out / "comparison.csv")
    assert header == ["n", "estimator", "bias", "variance", "mse"]
    assert [(r[0], r[1]) for r in rows] == [(n, e) for n in ("30", "60") for e in "PSAH"]


def test_study_rate_tiny(tmp_path):
    out = tmp_path / "rate"
    rc = main(["study", "rate", "--out", str(out), "--n", "40,80,160", "--reps", "2", "--warmup", "100"] + TINY)
    assert rc == 0
    header, rows = read_csv(out / "rate.csv")
    assert header == ["variant", "n", "rmse"] and len(rows) == 6
    slopes = json.loads((out / "slopes.json").read_text())
    assert set(slopes) == {"A", "B"} and set(slopes["A"]) == {"all", "tail"}


def test_study_rate_rejects_other_bases(tmp_path):
    rc = main(["study", "rate", "--out", str(tmp_path), "--n", "40,80,160", "--bases", "C"] + TINY)
    assert rc == EXIT_USAGE


def test_study_marginal_zero(tmp_path):
    out = tmp_path / "mz"
    assert main(["study", "marginal-zero", "--out", str(out), "--n", "50", "--thin", "2"] + TINY) == 0
    lines = (out / "zero_draws_n50.csv").read_text().splitlines()
    assert lines[0] == "f0" and len(lines) == 51


def test_config_precedence(tmp_path, datafile):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"iters": 300, "burn": 100, "seed": 9, "base": "B"}))
    out = tmp_path / "o"
    assert main(["fit", str(datafile), "--out", str(out), "--config", str(cfg), "--seed", "4",
                 "--grid-points", "10"]) == 0
    s = json.loads((out / "manifest.json").read_text())["settings"]
    assert (s["iters"], s["burn"], s["seed"], s["base"]) == (300, 100, 4, "B")


def test_config_unknown_key(tmp_path, datafile):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"iterations": 3}))
    assert main(["fit", str(datafile), "--out", str(tmp_path / "o"), "--config", str(cfg)]) == EXIT_USAGE


def test_console_entry_point(tmp_path, datafile):
    r = subprocess.run([sys.executable, "-m", "decdens.cli", "zero", str(datafile), "--out", str(tmp_path / "o"),
                        "--no-bayes"], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert "alpha_n" in r.stdout
