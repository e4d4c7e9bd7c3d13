"""Fitters: crystal orientation, 14N couplings, 13C couplings and T2(T)."""

from .couplings import (
    CouplingFit,
    PeakObservation,
    SignAmbiguousCoupling,
    extract_c13_coupling,
    fit_nitrogen_couplings,
    larmor_frequency,
    synthetic_observations,
)
from .decoherence import (
    BathParams,
    FluctuatorModel,
    T2TemperatureFit,
    echo_1e_time,
    fit_t2_temperature,
    flip_flop_suppression,
    mean_dipolar_coupling,
    ou_echo_envelope,
)
from .orientation import OrientationFit, fit_orientation, predict_peaks
from .results import FitResult

__all__ = [
    "BathParams",
    "CouplingFit",
    "FitResult",
    "FluctuatorModel",
    "OrientationFit",
    "PeakObservation",
    "SignAmbiguousCoupling",
    "T2TemperatureFit",
    "echo_1e_time",
    "extract_c13_coupling",
    "fit_nitrogen_couplings",
    "fit_orientation",
    "fit_t2_temperature",
    "flip_flop_suppression",
    "larmor_frequency",
    "mean_dipolar_coupling",
    "ou_echo_envelope",
    "predict_peaks",
    "synthetic_observations",
]
