"""Synthetic measurement sets for round-trip checks and bundled examples."""

from __future__ import annotations

import numpy as np

from .eseem import ManifoldPair, TransitionSelection
from .sigproc import EchoDecay, stretched_exponential
from .spectra import Branch, resonance_fields
from .spincore import EulerAngles, FieldVector, SpinSystem, rotate_field

DEFAULT_TEMPERATURES = np.r_[np.arange(2.0, 41.0), 50, 60, 80, 100, 150, 200, 300]


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def resonant_setup(nominal_axis, euler, site: int, manifold_pair, mw_freq: float = 9.6,
                   sys: SpinSystem | None = None, window=(50.0, 800.0)):
    """(FieldVector, TransitionSelection) sitting on the selected ESR line."""
    sys = SpinSystem.nv() if sys is None else sys.electron_only()
    euler = euler if isinstance(euler, EulerAngles) else EulerAngles(*euler)
    d = rotate_field(unit(nominal_axis), euler)
    pair = ManifoldPair(manifold_pair)
    branch = Branch.MINUS if pair is ManifoldPair.MINUS_ZERO else Branch.PLUS
    fields = [ln.field for ln in resonance_fields(sys, mw_freq, d, window, site)
              if ln.label is not None and ln.label.branch is branch]
    if not fields:
        raise ValueError(f"no {branch.value} line for site {site} in {window} mT")
    return FieldVector(fields[0], d), TransitionSelection(pair, site)


def coupling_design(mw_freq: float = 9.6) -> list:
    """Both branches of every inequivalent site class at the [001] and [110] mounts.

    [001] (8, 1, 0) deg: all sites equivalent, site 1 used.
    [110] (1.1, 2.1, 0) deg: site 1 (~35 deg to B0) and site 2 (~90 deg).
    """
    out = []
    for nominal, euler, sites in (((0, 0, 1), (8.0, 1.0, 0.0), (1,)),
                                  ((1, 1, 0), (1.1, 2.1, 0.0), (1, 2))):
        for site in sites:
            for pair in ("minus_zero", "zero_plus"):
                out.append(resonant_setup(nominal, euler, site, pair, mw_freq))
    return out


def orientation_peaks(nominal_axis, euler, mw_freq: float = 9.6, noise_mT: float = 0.0,
                      seed: int = 0, sys: SpinSystem | None = None, window=(200.0, 500.0)) -> list:
    """Labelled ESR peak fields [(TransitionLabel, B_mT)] for all four sites."""
    sys = SpinSystem.nv() if sys is None else sys.electron_only()
    euler = euler if isinstance(euler, EulerAngles) else EulerAngles(*euler)
    d = rotate_field(unit(nominal_axis), euler)
    rng = np.random.default_rng(seed)
    peaks = [(ln.label, ln.field) for s in (1, 2, 3, 4) for ln in resonance_fields(sys, mw_freq, d, window, s)
             if ln.label is not None]
    return [(lab, b + noise_mT * rng.standard_normal()) for lab, b in peaks]


def decay(A: float = 1.0, T2_ms: float = 0.74, n: float = 1.45, noise: float = 0.01, seed: int = 0,
          two_tau_us=None) -> EchoDecay:
    """Stretched-exponential echo decay with additive Gaussian noise."""
    t = np.linspace(10.0, 2500.0, 120) if two_tau_us is None else np.asarray(two_tau_us, dtype=float)
    rng = np.random.default_rng(seed)
    y = stretched_exponential(t, A, T2_ms, n) + noise * rng.standard_normal(t.size)
    return EchoDecay(t, y, metadata={"A": A, "T2_ms": T2_ms, "n": n, "noise": noise, "seed": seed})


def t2_curve(model, temperatures=DEFAULT_TEMPERATURES, rel_noise: float = 0.03, seed: int = 0) -> np.ndarray:
    """(T, T2) rows from a fluctuator model with multiplicative noise."""
    t = np.asarray(temperatures, dtype=float)
    rng = np.random.default_rng(seed)
    return np.column_stack([t, model.t2(t) * (1 + rel_noise * rng.standard_normal(t.size))])
