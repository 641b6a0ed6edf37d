import csv
import io
import math
import subprocess
import sys

import numpy as np

from hwl.cli import main, read_config


def run(args, capsys):
    code = main(args)
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    body = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


def header(text):
    return dict(line[2:].split("=", 1) for line in text.splitlines() if line.startswith("# "))


def test_interval_exact_constant(capsys):
    code, out, _ = run(["variance-curve", "--window", "interval", "--alpha", "0.6", "--kappa", "1",
                        "--h", "0.02", "--method", "exact1d"], capsys)
    assert code == 0
    v = np.array([float(r["variance"]) for r in rows(out)])
    assert len(v) == 50
    assert v.max() / v.min() - 1 < 1e-11
    assert list(rows(out)[0]) == ["s", "h", "variance", "stderr", "method", "window", "alpha", "kappa", "seed"]


def test_disk_spectral_decreasing(capsys):
    code, out, _ = run(["variance-curve", "--window", "disk", "--alpha", "1", "--kappa", "1", "--h", "0.1",
                        "--s-max", "0.5", "--method", "spectral"], capsys)
    assert code == 0
    v = np.array([float(r["variance"]) for r in rows(out)])
    assert np.all(np.diff(v) < 0)


def test_inadmissible_alpha(capsys):
    code, out, err = run(["variance-curve", "--alpha", "3", "--kappa", "1", "--window", "disk"], capsys)
    assert code == 2
    assert "alpha must lie in (0, n/kappa)" in err
    assert out == ""


def test_usage_error(capsys):
    code, _, err = run(["variance-curve", "--method", "bogus"], capsys)
    assert code == 2 and "error" in err
    code, _, _ = run(["no-such-command"], capsys)
    assert code == 2


def test_parseval_gate_exit(capsys):
    code, _, err = run(["variance-curve", "--window", "square", "--s-min", "0.96", "--s-max", "0.96",
                        "--grid-m", "200", "--lambda-max", "400"], capsys)
    assert code == 3 and "Parseval" in err


def test_same_seed_byte_identical(tmp_path):
    outs = []
    for i, threads in enumerate(("1", "3", "1")):
        path = tmp_path / f"o{i}.csv"
        code = main(["variance-curve", "--window", "square", "--method", "mc", "--samples", "2e5", "--h", "0.1",
                     "--s-max", "0.2", "--seed", "7", "--threads", threads, "--output", str(path)])
        assert code == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] == outs[2]
    assert b"\r" not in outs[0]


def test_config_roundtrip(tmp_path):
    first = tmp_path / "a.csv"
    assert main(["variance-curve", "--window", "disk", "--method", "mc", "--samples", "1e5", "--h", "0.1",
                 "--s-max", "0.1", "--seed", "11", "--output", str(first)]) == 0
    second = tmp_path / "b.csv"
    assert main(["variance-curve", "--config", str(first), "--output", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    cfg = read_config(first)
    assert cfg["seed"] == "11" and cfg["method"] == "mc"


def test_flag_overrides_config(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("window=interval\nalpha=0.6\nmethod=exact1d\nh=0.1\n")
    code, out, _ = run(["variance-curve", "--config", str(cfg), "--alpha", "0.3"], capsys)
    assert code == 0
    assert header(out)["alpha"] == "0.3" and header(out)["window"] == "interval"


def test_env_seed_fallback(capsys, monkeypatch):
    monkeypatch.setenv("HWL_SEED", "42")
    code, out, _ = run(["moment", "--window", "disk", "--samples", "1e4"], capsys)
    assert code == 0 and header(out)["seed"] == "42"


def test_fig2_files(tmp_path):
    assert main(["fig2", "--h", "0.1", "--s-max", "0.3", "--output", str(tmp_path)]) == 0
    curves = {}
    for name in ("interval", "disk", "square"):
        text = (tmp_path / f"fig2_{name}.csv").read_text()
        curves[name] = np.array([float(r["variance"]) for r in rows(text)])
    assert curves["interval"].max() / curves["interval"].min() - 1 < 0.01
    assert np.all(np.diff(curves["disk"]) < 0) and np.all(np.diff(curves["square"]) < 0)
    assert header((tmp_path / "fig2_interval.csv").read_text())["curve-alpha"] == "0.6"


def test_fig2_mc_agrees_with_spectral(tmp_path):
    spec_dir, mc_dir = tmp_path / "s", tmp_path / "m"
    base = ["fig2", "--h", "0.1", "--s-max", "0.2"]
    assert main(base + ["--output", str(spec_dir)]) == 0
    assert main(base + ["--method", "mc", "--samples", "1e6", "--output", str(mc_dir)]) == 0
    for name in ("interval", "disk", "square"):
        a = rows((spec_dir / f"fig2_{name}.csv").read_text())
        b = rows((mc_dir / f"fig2_{name}.csv").read_text())
        for ra, rb in zip(a, b):
            va, vb = float(ra["variance"]), float(rb["variance"])
            se = math.hypot(float(ra["stderr"]), float(rb["stderr"]))
            assert abs(va - vb) <= max(3 * se, 0.02 * va)


def test_crofton_check_row(capsys):
    code, out, _ = run(["crofton-check", "--window", "disk", "--t", "0.25", "--h", "0.1", "--kalpha", "1",
                        "--samples", "1e6"], capsys)
    assert code == 0
    (row,) = rows(out)
    assert row["pass"] == "true"


def test_moment_disk(capsys):
    code, out, _ = run(["moment", "--window", "disk", "--t", "0", "--h", "1", "--kalpha", "1", "--samples", "1e6"],
                       capsys)
    (row,) = rows(out)
    assert abs(float(row["mean"]) - 16 / (3 * math.pi)) < 3 * float(row["stderr"])


def test_bounds_disk(capsys):
    code, out, _ = run(["bounds", "--window", "disk", "--h", "0.1", "--t-large", "100"], capsys)
    (row,) = rows(out)
    assert row["lower_ok"] == "true" and row["upper_ok"] == "true"


def test_simulate_and_dump(tmp_path, capsys):
    dump = tmp_path / "f.bin"
    code, out, _ = run(["simulate", "--grid-side", "128", "--r", "20", "--replicates", "4", "--lags", "1,2",
                        "--dump", str(dump)], capsys)
    assert code == 0
    assert len(rows(out)) == 5
    assert "cov-mean" in header(out)
    assert dump.stat().st_size == 32 + 128 * 128 * 8


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "hwl", "variance-curve", "--window", "interval", "--alpha", "0.6",
                          "--method", "exact1d", "--h", "0.5"], capture_output=True, text=True)
    assert res.returncode == 0
    assert len(rows(res.stdout)) == 2
