"""Bundled spin systems, field configurations, sample registry and data."""

from __future__ import annotations

from importlib import resources
from pathlib import Path


def preset_path(name: str) -> Path:
    """Filesystem path of a bundled resource, e.g. ``"nv-14N.sys"``."""
    p = Path(str(resources.files(__package__).joinpath(name)))
    if not p.is_file():
        raise FileNotFoundError(f"no bundled preset {name!r}")
    return p


def list_presets(suffix: str = "") -> list:
    root = Path(str(resources.files(__package__)))
    return sorted(str(p.relative_to(root)) for p in root.rglob(f"*{suffix}")
                  if p.is_file() and p.suffix != ".py" and "__pycache__" not in p.parts)
