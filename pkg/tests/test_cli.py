import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest

from emdapf.cli import default_scenario_path, main
from emdapf.plant import ScenarioConfig, dump_scenario, load_scenario, with_burst_amplitude
from emdapf.signal import read_csv, write_csv


def digest(d):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(d.iterdir())}


def test_packaged_default_matches_code_defaults():
    assert load_scenario(default_scenario_path()) == ScenarioConfig()


def test_run_writes_everything_and_repeats(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--mode", "both", "--out", str(a)]) == 0
    m = json.loads((a / "manifest.json").read_text())
    assert sorted(p.name for p in a.iterdir()) == sorted(m["files"])
    assert m["scenario_fingerprint"] == ScenarioConfig().fingerprint()
    assert m["config"] == default_scenario_path().read_text()
    assert main(["run", "--mode", "both", "--out", str(b)]) == 0
    da, db = digest(a), digest(b)
    da.pop("manifest.json"), db.pop("manifest.json")
    assert da == db
    ma, mb = (json.loads((d / "manifest.json").read_text()) for d in (a, b))
    ma.pop("out_dir"), mb.pop("out_dir")
    assert ma == mb


def test_run_single_mode(tmp_path):
    assert main(["run", "--mode", "emd", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "trace_emd_enhanced.csv").exists()
    assert not (tmp_path / "trace_baseline.csv").exists()


def test_bad_config_leaves_nothing(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("line1:\n  i_peek: 3\n")
    out = tmp_path / "out"
    assert main(["run", "--scenario", str(cfg), "--out", str(out)]) == 2
    assert not out.exists()
    assert "unknown key" in capsys.readouterr().err
    assert main(["compare", "--scenario", str(tmp_path / "missing.yaml"), "--out", str(out)]) == 2
    assert not out.exists()


def test_unwritable_output_is_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["run", "--mode", "baseline", "--out", str(blocker / "sub")]) == 4


def test_usage_errors():
    assert main([]) == 2
    assert main(["run", "--mode", "sideways", "--out", "x"]) == 2


def write_series(path, t, x):
    write_csv(path, t, [("value", x)])


def test_decompose_constant(tmp_path):
    t = np.arange(1000) * 1e-4
    src = tmp_path / "c.csv"
    write_series(src, t, np.full(t.size, 3.0))
    assert main(["decompose", "--in", str(src), "--out", str(tmp_path / "o")]) == 0
    header, data = read_csv(tmp_path / "o" / "decomposition.csv")
    assert header == ["time", "residue"]
    np.testing.assert_array_equal(data[:, 1], 3.0)
    assert "imfs: 0" in (tmp_path / "o" / "summary.txt").read_text()


def test_decompose_two_tone(tmp_path):
    t = np.arange(20000) * 1e-5
    x = 5 * np.sin(2 * np.pi * 50 * t) + np.sin(2 * np.pi * 900 * t)
    src = tmp_path / "two.csv"
    write_series(src, t, x)
    out = tmp_path / "o"
    assert main(["decompose", "--in", str(src), "--stop", "f0=50", "--sd", "0.2", "--out", str(out)]) == 0
    header, data = read_csv(out / "decomposition.csv")
    assert len(header) >= 3  # time, at least one IMF, residue
    assert np.max(np.abs(data[:, 1:].sum(axis=1) - x)) <= 1e-9 * np.max(np.abs(x))
    summary = (out / "summary.txt").read_text()
    rel = float(summary.split("relative to peak: ")[1])
    assert rel <= 1e-9
    m = json.loads((out / "manifest.json").read_text())
    assert m["config"] == {"sd_threshold": 0.2, "stop": "f0=50"}


@pytest.mark.parametrize(
    "content",
    ["", "time,value\n", "time,value\n0,1\n0.1,2\n0.25,3\n0.3,4\n", "a,b,c\n0,1,2\n"],
    ids=["empty", "header-only", "non-uniform", "wrong-columns"],
)
def test_decompose_input_errors(tmp_path, content):
    src = tmp_path / "in.csv"
    src.write_text(content)
    assert main(["decompose", "--in", str(src), "--out", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o").exists()


def test_decompose_option_errors(tmp_path):
    src = tmp_path / "in.csv"
    write_series(src, np.arange(10) * 0.1, np.arange(10.0))
    assert main(["decompose", "--in", str(src), "--sd", "0.5", "--out", str(tmp_path / "o")]) == 2
    assert main(["decompose", "--in", str(src), "--stop", "never", "--out", str(tmp_path / "o")]) == 2
    assert main(["decompose", "--in", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "o")]) == 2


def test_decompose_degenerate_is_compute_error(tmp_path):
    src = tmp_path / "in.csv"
    write_series(src, np.array([0.0, 0.1]), np.array([1.0, 2.0]))
    assert main(["decompose", "--in", str(src), "--out", str(tmp_path / "o")]) == 3


def test_compare_reports_every_axis(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["compare", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    for name in ("reactive power eliminated", "power factor oscillation reduced", "THD comparable", "burst removed"):
        assert name in text
    assert text == (out / "comparison.txt").read_text()
    gp = (out / "plot_compare.gp").read_text()
    assert "trace_" in gp and "comparison.csv" in gp
    m = json.loads((out / "manifest.json").read_text())
    assert sorted(p.name for p in out.iterdir()) == sorted(m["files"])


def test_compare_without_burst(tmp_path, capsys):
    cfg = tmp_path / "s.yaml"
    cfg.write_text(dump_scenario(with_burst_amplitude(ScenarioConfig(), 0.0)))
    assert main(["compare", "--scenario", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert "burst removed: N/A" in capsys.readouterr().out


def test_inputs_are_not_modified(tmp_path):
    cfg = tmp_path / "s.yaml"
    cfg.write_text(dump_scenario(ScenarioConfig()))
    before = cfg.read_bytes()
    assert main(["run", "--scenario", str(cfg), "--mode", "baseline", "--out", str(tmp_path / "o")]) == 0
    assert cfg.read_bytes() == before
    assert sorted(p.name for p in tmp_path.iterdir()) == ["o", "s.yaml"]


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "emdapf", "--version"], capture_output=True, text=True)
    assert r.returncode == 0
    assert r.stdout.startswith("emdapf ")
