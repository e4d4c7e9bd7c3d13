import json
import subprocess
import sys
from pathlib import Path

import pytest
import yaml

from nvespin.cli import EXIT_CONFIG, EXIT_DATA, EXIT_OK, EXIT_SOLVER, main
from nvespin.presets import preset_path

ROOT = Path(__file__).resolve().parents[1]


def _cfg(tmp_path, doc, name="run.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump({"schema_version": 1, **doc}))
    return p


SMALL_ESEEM = {"eseem": {"points": 1024}, "processing": {"dump_intermediates": True, "bandwidth_ns": 100}}


def test_simulate_spectrum(tmp_path):
    out = tmp_path / "o"
    assert main(["simulate-spectrum", "--config", str(ROOT / "configs/spectrum-110.yaml"), "--out", str(out)]) == 0
    sticks = (out / "sticks.csv").read_text().splitlines()
    assert sticks[0] == "label,site,branch,field_mT,intensity,amplitude"
    assert len(sticks) == 9
    assert (out / "spectrum.csv").read_text().startswith("field_mT,amplitude\n")
    assert (out / "resolved_config.yaml").exists()


def test_empty_window(tmp_path):
    cfg = _cfg(tmp_path, {"spectrum": {"window_mT": [300.0, 300.0]}})
    assert main(["simulate-spectrum", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o/sticks.csv").read_text() == "label,site,branch,field_mT,intensity,amplitude\n"


def test_simulate_eseem_outputs(tmp_path):
    out = tmp_path / "o"
    cfg = _cfg(tmp_path, SMALL_ESEEM)
    assert main(["simulate-eseem", "--config", str(cfg), "--out", str(out)]) == 0
    for name in ("trace.csv", "trace_filtered.csv", "ft_uncorrected.csv", "ft.csv", "peaks.json"):
        assert (out / name).exists(), name
    rep = json.loads((out / "peaks.json").read_text())
    assert rep["modulation_depth"] > 0.5
    assert {"-1", "0"} == set(rep["nuclear_frequencies"])
    resolved = yaml.safe_load((out / "resolved_config.yaml").read_text())
    assert resolved["field"]["magnitude_mT"] == pytest.approx(rep["field_mT"])


def test_on_axis_flat_trace_has_no_peaks(tmp_path):
    cfg = _cfg(tmp_path, {"field": {"nominal_axis": [1, 1, 1], "euler_deg": [0, 0, 0]}, "eseem": {"points": 512}})
    assert main(["simulate-eseem", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o/peaks.json").read_text())
    assert rep["peaks"] == [] and rep["additive_triples"] == []
    assert rep["modulation_depth"] < 1e-6


def test_byte_identical_reruns_and_resolved_round_trip(tmp_path):
    cfg = _cfg(tmp_path, {**SMALL_ESEEM, "sample": "C"})
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert main(["simulate-eseem", "--config", str(cfg), "--out", str(a)]) == 0
    assert main(["simulate-eseem", "--config", str(cfg), "--out", str(b)]) == 0
    assert main(["simulate-eseem", "--config", str(a / "resolved_config.yaml"), "--out", str(c)]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir()) == sorted(p.name for p in c.iterdir())
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes() == (c / n).read_bytes(), n
    assert json.loads((a / "peaks.json").read_text())["sample"]["label"] == "C"


def test_scan(tmp_path):
    cfg = _cfg(tmp_path, {"eseem": {"points": 512}, "scan": {"field_min_mT": 300, "field_max_mT": 360,
                                                             "step_mT": 20}})
    assert main(["scan-cancellation", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    summary = json.loads((tmp_path / "o/scan_summary.json").read_text())
    assert summary["n_fields"] == 4
    assert 300 <= summary["argmax_field_mT"] <= 360


@pytest.mark.parametrize("kind,data,key", [
    ("decay", "decay_sample_C.csv", "T2_ms"),
    ("orientation", "orientation_110.csv", "parameters"),
    ("couplings", "couplings_peaks.csv", "parameters"),
])
def test_fits_on_bundled_data(tmp_path, kind, data, key):
    cfg = None
    if kind == "orientation":
        cfg = _cfg(tmp_path, {"field": {"preset": "field-110-esr"}})
    argv = ["fit", kind, str(preset_path(f"data/{data}")), "--out", str(tmp_path / "o")]
    if cfg:
        argv += ["--config", str(cfg)]
    assert main(argv) == 0
    rep = json.loads(next((tmp_path / "o").glob("fit_*.json")).read_text())
    assert key in rep
    if kind == "orientation":
        assert rep["residual_rms"] < 0.1


def test_t2_fit_with_sample(tmp_path):
    out = tmp_path / "o"
    assert main(["fit", "t2-temperature", str(preset_path("data/t2_sample_B.csv")),
                 "--config", str(ROOT / "configs/t2-sample-B.yaml"), "--out", str(out)]) == 0
    rep = json.loads((out / "fit_t2_temperature.json").read_text())
    assert rep["ea_identifiable"] and 5 < rep["t_min_K"] < 25
    assert rep["sample"]["label"] == "B"


def test_missing_config_is_exit_2(tmp_path, capsys):
    assert main(["simulate-eseem", "--config", str(tmp_path / "nope.yaml"), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_bad_key_is_exit_2(tmp_path):
    cfg = _cfg(tmp_path, {"processing": {"zerofill": 4}})
    assert main(["simulate-eseem", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    cfg = _cfg(tmp_path, {"sample": "Z"}, "s.yaml")
    assert main(["simulate-spectrum", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert main(["simulate-spectrum", "--threads", "0"]) == EXIT_CONFIG


def test_malformed_csv_is_exit_4(tmp_path, capsys):
    p = tmp_path / "d.csv"
    p.write_text("two_tau_us,amplitude\n1,0.9\n2,oops\n")
    assert main(["fit", "decay", str(p), "--out", str(tmp_path / "o")]) == EXIT_DATA
    assert f"{p}:3:" in capsys.readouterr().err
    assert main(["fit", "decay", str(tmp_path / "none.csv"), "--out", str(tmp_path / "o")]) == EXIT_DATA


def test_solver_failure_is_exit_3(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("two_tau_us,amplitude\n" + "".join(f"{k + 1},-1\n" for k in range(10)))
    assert main(["fit", "decay", str(p), "--out", str(tmp_path / "o")]) == EXIT_SOLVER
    # strongly mixed electron states: the selective two-level picture is undefined
    cfg = _cfg(tmp_path, {"field": {"nominal_axis": [1, -1, 0], "euler_deg": [0, 0, 0], "magnitude_mT": 60.0}})
    assert main(["simulate-eseem", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_SOLVER


def test_samples_validate(tmp_path, capsys):
    assert main(["samples", "validate"]) == EXIT_OK
    assert "4 samples valid" in capsys.readouterr().out
    bad = tmp_path / "s.csv"
    bad.write_text("label,edge,fluence_cm2,anneal_temperature_C,anneal_time_min,nv_concentration_cm3\n"
                   "A,{100},x,900,20,1e13\nA,{999},1e15,900,20,1e13\n")
    assert main(["samples", "validate", str(bad)]) == EXIT_DATA
    err = capsys.readouterr().err
    assert ":2:" in err and ":3:" in err
    assert main(["samples", "validate", "--out", str(tmp_path / "o")]) == EXIT_OK
    assert len(json.loads((tmp_path / "o/samples.json").read_text())) == 4


def test_console_module_runs(tmp_path):
    r = subprocess.run([sys.executable, "-m", "nvespin.cli", "samples", "validate"],
                       capture_output=True, text=True, cwd=tmp_path)
    assert r.returncode == 0 and "samples valid" in r.stdout
