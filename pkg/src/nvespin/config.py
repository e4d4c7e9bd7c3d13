"""Run configuration: YAML documents validated against a versioned schema.

A config names a spin system (bundled preset, ``.sys`` path or inline
mapping), a field (optionally a bundled field preset), the microwave
frequency, the ESR transition and the processing chain. ``resolve`` fills
in every default so the resolved copy written next to the outputs
reproduces the run exactly.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from . import constants as C
from .errors import ConfigError
from .presets import preset_path
from .spincore import AxialTensor, NucleusSpec, SpinQuantum, SpinSystem, quadrupole_tensor, zfs_tensor

SCHEMA_VERSION = 1

_VEC3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_POS = {"type": "number", "exclusiveMinimum": 0}

NUCLEUS_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["isotope", "A_par", "A_perp"],
    "properties": {
        "label": {"type": "string"},
        "isotope": {"enum": ["14N", "13C"]},
        "A_par": {"type": "number"},
        "A_perp": {"type": "number"},
        "P_par": {"type": "number"},
        "axis": _VEC3,
    },
}

SYSTEM_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["electron"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "kind": {"const": "spin_system"},
        "name": {"type": "string"},
        "electron": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"g": _POS, "D_MHz": {"type": "number"}, "axis": _VEC3},
        },
        "nuclei": {"type": "array", "items": NUCLEUS_SCHEMA},
    },
}

FIELD_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "preset": {"type": "string"},
        "nominal_axis": _VEC3,
        "euler_deg": _VEC3,
        "magnitude_mT": _POS,
    },
}

RUN_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "seed": {"type": "integer", "minimum": 0},
        "sample": {"type": "string"},
        "spin_system": {"oneOf": [{"type": "string"}, SYSTEM_SCHEMA]},
        "field": FIELD_SCHEMA,
        "mw_frequency_GHz": _POS,
        "selection": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"manifold_pair": {"enum": ["minus_zero", "zero_plus"]},
                           "site": {"enum": [1, 2, 3, 4]}},
        },
        "spectrum": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "window_mT": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                "linewidth_mT": _POS,
                "step_mT": _POS,
                "populations": {
                    "type": "object",
                    "additionalProperties": False,
                    "patternProperties": {"^[1-4]$": {"type": "array", "items": {"type": "number"},
                                                      "minItems": 3, "maxItems": 3}},
                },
            },
        },
        "eseem": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"tau_step_us": _POS, "points": {"type": "integer", "minimum": 2},
                           "mode": {"enum": ["joint", "product"]}},
        },
        "processing": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dead_time_us": {"type": "number", "minimum": 0},
                "zero_fill": {"type": "integer", "minimum": 1},
                "window": {"enum": ["none", "hamming"]},
                "bandwidth_ns": {"oneOf": [{"type": "null"}, _POS]},
                "peak_floor": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "max_freq_MHz": {"oneOf": [{"type": "null"}, _POS]},
                "triple_tolerance_MHz": _POS,
                "dump_intermediates": {"type": "boolean"},
            },
        },
        "scan": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"field_min_mT": _POS, "field_max_mT": _POS, "step_mT": _POS},
        },
        "fit": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "decay_channel": {"enum": ["real", "magnitude"]},
                "orientation_sigma_deg": _POS,
                "initial": {"type": "object", "additionalProperties": {"type": "number"}},
            },
        },
    },
}

FIELD_PRESETS = {
    # misalignments quoted for the three crystal mounts
    "field-001": {"nominal_axis": [0.0, 0.0, 1.0], "euler_deg": [8.0, 1.0, 0.0]},
    "field-110": {"nominal_axis": [1.0, 1.0, 0.0], "euler_deg": [1.1, 2.1, 0.0]},
    "field-111": {"nominal_axis": [1.0, 1.0, 1.0], "euler_deg": [0.3, 0.9, 0.0]},
    # mount used for the field-swept ESR spectrum
    "field-110-esr": {"nominal_axis": [1.0, 1.0, 0.0], "euler_deg": [2.0, 2.2, 0.0]},
}

DEFAULTS = {
    "seed": 0,
    "spin_system": "nv-14N",
    "field": {"preset": "field-001"},
    "mw_frequency_GHz": 9.6,
    "selection": {"manifold_pair": "minus_zero", "site": 1},
    "spectrum": {"window_mT": [200.0, 500.0], "linewidth_mT": 0.5, "step_mT": 0.05,
                 "populations": {"1": [0.2, 0.6, 0.2], "2": [0.2, 0.6, 0.2],
                                 "3": [0.4, 0.2, 0.4], "4": [0.4, 0.2, 0.4]}},
    "eseem": {"tau_step_us": 0.004, "points": 5000, "mode": "joint"},
    "processing": {"dead_time_us": 0.5, "zero_fill": 8, "window": "hamming", "bandwidth_ns": None,
                   "peak_floor": 0.12, "max_freq_MHz": 20.0, "triple_tolerance_MHz": 0.02,
                   "dump_intermediates": False},
    "scan": {"field_min_mT": 100.0, "field_max_mT": 600.0, "step_mT": 10.0},
    "fit": {"decay_channel": "real", "orientation_sigma_deg": 0.1, "initial": {}},
}


def _format_errors(errors) -> str:
    lines = []
    for e in sorted(errors, key=lambda e: list(map(str, e.absolute_path))):
        key = ".".join(str(p) for p in e.absolute_path) or "<root>"
        lines.append(f"{key}: {e.message}")
    return "; ".join(lines)


def validate(doc: dict, schema: dict = RUN_SCHEMA) -> None:
    """Raise ConfigError listing every schema violation with its key path."""
    if not isinstance(doc, dict):
        raise ConfigError("<root>: configuration must be a mapping")
    errors = list(jsonschema.Draft202012Validator(schema).iter_errors(doc))
    if errors:
        raise ConfigError(_format_errors(errors))


def load_yaml(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    return {} if doc is None else doc


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "populations":
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


# ---------------------------------------------------------------------------
# Spin systems
# ---------------------------------------------------------------------------


def load_system_doc(ref, base_dir: Path | None = None) -> dict:
    """Spin-system mapping from a preset name, a ``.sys`` path or a mapping."""
    if isinstance(ref, dict):
        doc = ref
    else:
        path = Path(ref)
        if base_dir is not None and not path.is_absolute() and (base_dir / path).exists():
            path = base_dir / path
        if not path.exists():
            name = ref[:-4] if ref.endswith(".sys") else ref
            try:
                path = preset_path(f"{name}.sys")
            except FileNotFoundError:
                raise ConfigError(f"spin_system: no preset or file named {ref!r}") from None
        doc = load_yaml(path)
    try:
        validate(doc, SYSTEM_SCHEMA)
    except ConfigError as exc:
        raise ConfigError(f"spin_system.{exc}") from None
    return doc


def system_from_doc(doc: dict) -> SpinSystem:
    el = doc.get("electron", {})
    axis = tuple(el.get("axis", (1.0, 1.0, 1.0)))
    if np.linalg.norm(axis) == 0:
        raise ConfigError("spin_system.electron.axis: zero vector")
    nuclei = []
    for k, n in enumerate(doc.get("nuclei", [])):
        n_axis = tuple(n.get("axis", axis))
        if np.linalg.norm(n_axis) == 0:
            raise ConfigError(f"spin_system.nuclei.{k}.axis: zero vector")
        iso = n["isotope"]
        label = n.get("label", iso)
        hf = AxialTensor(n["A_par"], n["A_perp"], n_axis)
        if iso == "14N":
            q = quadrupole_tensor(n.get("P_par", 0.0), n_axis)
            nuclei.append(NucleusSpec(SpinQuantum(3), C.G_N["14N"], hf, q, label))
        else:
            if "P_par" in n:
                raise ConfigError(f"spin_system.nuclei.{k}.P_par: I=1/2 nuclei have no quadrupole")
            nuclei.append(NucleusSpec(SpinQuantum(2), C.G_N[iso], hf, None, label))
    return SpinSystem(el.get("g", C.G_NV), zfs_tensor(el.get("D_MHz", C.D_NV_MHZ), axis), tuple(nuclei))


# ---------------------------------------------------------------------------
# Run configs
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    doc: dict  # fully resolved mapping
    system: SpinSystem

    @property
    def seed(self) -> int:
        return int(self.doc["seed"])

    @property
    def field(self) -> dict:
        return self.doc["field"]

    @property
    def nominal_axis(self) -> np.ndarray:
        v = np.asarray(self.field["nominal_axis"], dtype=float)
        return v / np.linalg.norm(v)

    @property
    def euler(self):
        from .spincore import EulerAngles

        return EulerAngles(*self.field["euler_deg"])

    def section(self, name: str) -> dict:
        return self.doc[name]

    def dump(self) -> str:
        return yaml.safe_dump(self.doc, sort_keys=True, default_flow_style=None)


def resolve(doc: dict | None, base_dir: Path | None = None, seed: int | None = None) -> RunConfig:
    """Validate a raw config, apply defaults and inline all presets."""
    doc = {"schema_version": SCHEMA_VERSION} if doc is None else doc
    validate(doc)
    full = _merge(DEFAULTS, doc)
    if seed is not None:
        full["seed"] = int(seed)
    fld = dict(full["field"])
    if "preset" in doc.get("field", {}) or not {"nominal_axis", "euler_deg"} <= set(doc.get("field", {})):
        name = fld.pop("preset", "field-001")
        if name not in FIELD_PRESETS:
            raise ConfigError(f"field.preset: unknown preset {name!r}; choose from {sorted(FIELD_PRESETS)}")
        fld = {**FIELD_PRESETS[name], **{k: v for k, v in fld.items() if k != "preset"}}
    else:
        fld.pop("preset", None)
    if np.linalg.norm(fld["nominal_axis"]) == 0:
        raise ConfigError("field.nominal_axis: zero vector")
    full["field"] = fld
    sysdoc = load_system_doc(full["spin_system"], base_dir)
    sysdoc = {k: v for k, v in sysdoc.items() if k not in ("schema_version", "kind")}
    full["spin_system"] = sysdoc
    w = full["spectrum"]["window_mT"]
    if not w[1] >= w[0]:
        raise ConfigError("spectrum.window_mT: upper bound below lower bound")
    sc = full["scan"]
    if not sc["field_max_mT"] > sc["field_min_mT"]:
        raise ConfigError("scan.field_max_mT: must exceed field_min_mT")
    full["schema_version"] = SCHEMA_VERSION
    return RunConfig(full, system_from_doc(sysdoc))


def load_config(path=None, seed: int | None = None) -> RunConfig:
    if path is None:
        return resolve(None, seed=seed)
    return resolve(load_yaml(path), Path(path).parent, seed)
