import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nvespin.errors import DataFormatError
from nvespin.io import fmt, json_text, read_rows, read_table, write_csv, write_json
from nvespin.sigproc import read_decay_csv, read_eseem_csv


def test_fmt_is_deterministic():
    assert fmt(0.0) == "0" and fmt(-0.0) == "0"
    assert fmt(3) == "3" and fmt(np.int64(3)) == "3"
    assert fmt(True) == "true"
    assert fmt(float("nan")) == "nan"
    assert fmt(1 / 3) == "0.3333333333"
    assert fmt("S1+") == "S1+"


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=20))
def test_csv_round_trip(tmp_path_factory, xs):
    p = tmp_path_factory.mktemp("csv") / "x.csv"
    write_csv(p, ["a", "b"], [(x, 2 * x) for x in xs])
    tab = read_table(p, ["a", "b"])
    assert np.allclose(tab["a"], xs, rtol=1e-9, atol=1e-300)
    assert list(tab["_lines"]) == list(range(2, len(xs) + 2))


def test_json_handles_numpy_and_nonfinite(tmp_path):
    obj = {"a": np.float64(1 / 3), "b": np.arange(3), "c": float("inf"), "d": np.bool_(True), 1: (1, 2)}
    write_json(tmp_path / "o.json", obj)
    back = json.loads((tmp_path / "o.json").read_text())
    assert back == {"a": 0.3333333333, "b": [0, 1, 2], "c": None, "d": True, "1": [1, 2]}
    assert json_text(obj) == (tmp_path / "o.json").read_text()


def test_atomic_write_leaves_no_temp_files(tmp_path):
    write_csv(tmp_path / "a.csv", ["x"], [(1,)])
    write_csv(tmp_path / "a.csv", ["x"], [(2,)])
    assert sorted(p.name for p in tmp_path.iterdir()) == ["a.csv"]
    assert (tmp_path / "a.csv").read_text() == "x\n2\n"


def _write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_comments_and_extra_columns(tmp_path):
    p = _write(tmp_path, "# note\ntwo_tau_us,amplitude,extra\n\n1,0.9,x\n2,0.8,y\n")
    d = read_decay_csv(p)
    assert np.allclose(d.two_tau, [1, 2]) and np.allclose(d.amplitude, [0.9, 0.8])


@pytest.mark.parametrize("text,line", [
    ("two_tau_us,amplitude\n1,0.9\n2,abc\n", 3),
    ("two_tau_us,amplitude\n1,0.9\n2\n", 3),
    ("# c\nwrong,amplitude\n1,2\n", 2),
    ("two_tau_us,amplitude\n2,0.9\n1,0.8\n", 3),
    ("# only a comment\n", 1),
])
def test_malformed_decay_reports_line(tmp_path, text, line):
    with pytest.raises(DataFormatError) as exc:
        read_decay_csv(_write(tmp_path, text))
    assert exc.value.line == line
    assert f":{line}:" in str(exc.value)


def test_magnitude_channel(tmp_path):
    p = _write(tmp_path, "two_tau_us,amplitude,amplitude_imag\n1,3,4\n2,0,1\n")
    assert np.allclose(read_decay_csv(p, "magnitude").amplitude, [5, 1])
    with pytest.raises(DataFormatError):
        read_decay_csv(_write(tmp_path, "two_tau_us,amplitude\n1,1\n", "e.csv"), "magnitude")
    with pytest.raises(ValueError):
        read_decay_csv(p, "imag")


def test_missing_file(tmp_path):
    with pytest.raises(DataFormatError):
        read_table(tmp_path / "nope.csv", ["a"])


def test_eseem_csv(tmp_path):
    tr = read_eseem_csv(_write(tmp_path, "tau_us,v\n0,1\n0.004,0.9\n"))
    assert tr.is_uniform() and np.allclose(tr.v, [1, 0.9])
    with pytest.raises(DataFormatError):
        read_eseem_csv(_write(tmp_path, "tau_us,v\n0,1\n0,0.9\n", "b.csv"))


def test_read_rows(tmp_path):
    rows = read_rows(_write(tmp_path, "label,field_mT\nS1+,293\n"), ["label", "field_mT"])
    assert rows == [(2, {"label": "S1+", "field_mT": "293"})]
    with pytest.raises(DataFormatError):
        read_rows(_write(tmp_path, "label\nS1+\n", "c.csv"), ["label", "field_mT"])
