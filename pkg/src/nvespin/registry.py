"""Diamond sample registry (irradiation and anneal history).

The registry is a CSV with one row per sample. Validation collects every
problem in the file before raising, so a broken registry is fixed in one
pass.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from pathlib import Path

from .errors import DataFormatError
from .presets import preset_path

COLUMNS = ("label", "edge", "fluence_cm2", "anneal_temperature_C", "anneal_time_min",
           "nv_concentration_cm3")
EDGES = ("{100}", "{110}", "{111}")


@dataclass(frozen=True)
class SampleRecord:
    label: str
    edge: str
    fluence_cm2: float
    anneal_temperature_C: float
    anneal_time_min: float
    nv_concentration_cm3: float
    notes: str = ""

    def __post_init__(self):
        if not self.fluence_cm2 > 0:
            raise ValueError("fluence must be positive")
        if not self.nv_concentration_cm3 > 0:
            raise ValueError("NV concentration must be positive")

    def as_dict(self) -> dict:
        return asdict(self)


class RegistryError(DataFormatError):
    """All validation problems of one registry file."""

    def __init__(self, problems: list, path=None):
        self.problems = list(problems)
        lines = [f"{path}:{ln}: {msg}" if ln else f"{path}: {msg}" for ln, msg in self.problems]
        super().__init__(f"{len(self.problems)} problem(s)\n  " + "\n  ".join(lines))
        self.path = path
        self.line = self.problems[0][0] if self.problems else None


def _number(text, name, positive, problems, lineno):
    try:
        v = float(text)
    except ValueError:
        problems.append((lineno, f"{name}: not a number: {text!r}"))
        return None
    if not math.isfinite(v) or (positive and v <= 0) or v < 0:
        problems.append((lineno, f"{name}: must be {'positive' if positive else 'non-negative'}, got {text}"))
        return None
    return v


def load_sample_registry(path=None) -> list:
    """Parse and validate a registry CSV (default: the bundled one).

    Raises
    ------
    RegistryError
        Listing every missing column, bad cell and duplicate label.
    """
    path = preset_path("samples.csv") if path is None else Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataFormatError(f"cannot read file: {exc.strerror}", path=str(path)) from exc
    problems = []
    records = []
    header = None
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        cells = [c.strip() for c in next(csv.reader([line]))]
        if header is None:
            header = cells
            missing = [c for c in COLUMNS if c not in header]
            if missing:
                problems.append((lineno, f"missing column(s) {missing}"))
                break
            continue
        if len(cells) != len(header):
            problems.append((lineno, f"expected {len(header)} fields, found {len(cells)}"))
            continue
        row = dict(zip(header, cells))
        before = len(problems)
        label = row["label"]
        if not label:
            problems.append((lineno, "label: empty"))
        elif label in seen:
            problems.append((lineno, f"label: duplicate {label!r} (first on line {seen[label]})"))
        else:
            seen[label] = lineno
        if row["edge"] not in EDGES:
            problems.append((lineno, f"edge: expected one of {list(EDGES)}, got {row['edge']!r}"))
        vals = {
            "fluence_cm2": _number(row["fluence_cm2"], "fluence_cm2", True, problems, lineno),
            "anneal_temperature_C": _number(row["anneal_temperature_C"], "anneal_temperature_C",
                                            False, problems, lineno),
            "anneal_time_min": _number(row["anneal_time_min"], "anneal_time_min", False, problems, lineno),
            "nv_concentration_cm3": _number(row["nv_concentration_cm3"], "nv_concentration_cm3",
                                            True, problems, lineno),
        }
        if len(problems) == before:
            records.append(SampleRecord(label, row["edge"], notes=row.get("notes", ""), **vals))
    if header is None:
        problems.append((1, "no header row"))
    if problems:
        raise RegistryError(problems, str(path))
    return records


def find_sample(records, label: str) -> SampleRecord:
    for r in records:
        if r.label == label:
            return r
    raise KeyError(f"unknown sample {label!r}")
