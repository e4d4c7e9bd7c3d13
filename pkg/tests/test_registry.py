import pytest

from nvespin.registry import RegistryError, SampleRecord, find_sample, load_sample_registry

HEADER = "label,edge,fluence_cm2,anneal_temperature_C,anneal_time_min,nv_concentration_cm3,notes\n"


def test_bundled_registry():
    recs = load_sample_registry()
    assert [r.label for r in recs] == ["A", "B", "C", "D"]
    c = find_sample(recs, "C")
    assert c.anneal_temperature_C == 1000 and c.anneal_time_min == 60
    assert "900" in c.notes
    assert find_sample(recs, "D").edge == "{110}"
    assert all(r.fluence_cm2 > 0 and r.nv_concentration_cm3 > 0 for r in recs)
    with pytest.raises(KeyError):
        find_sample(recs, "Z")


def test_record_invariants():
    with pytest.raises(ValueError):
        SampleRecord("X", "{100}", 0.0, 900, 20, 1e13)
    with pytest.raises(ValueError):
        SampleRecord("X", "{100}", 1e15, 900, 20, -1.0)
    assert SampleRecord("X", "{100}", 1e15, 900, 20, 1e13).as_dict()["label"] == "X"


def test_all_problems_collected(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text(HEADER + "A,{100},1e15,900,20,2e13,\n"
                 "A,{100},1e15,900,20,2e13,\n"
                 "B,{123},-1,900,20,abc,\n"
                 "C,{100},1e15\n")
    with pytest.raises(RegistryError) as exc:
        load_sample_registry(p)
    lines = [ln for ln, _ in exc.value.problems]
    assert lines == [3, 4, 4, 4, 5]
    assert "duplicate" in exc.value.problems[0][1]
    assert exc.value.line == 3


def test_missing_columns(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("label,edge\nA,{100}\n")
    with pytest.raises(RegistryError, match="missing column"):
        load_sample_registry(p)
    p.write_text("# nothing\n")
    with pytest.raises(RegistryError, match="no header"):
        load_sample_registry(p)
