"""Spin Hamiltonian, ESR/ESEEM simulation and fitting for NV- centers in diamond."""

from .errors import ConfigError, DataFormatError, NVSpinError, SolverError
from .spincore import (
    AxialTensor,
    EulerAngles,
    FieldVector,
    NucleusSpec,
    SpinQuantum,
    SpinSystem,
    build_hamiltonian,
    eigensolve,
    rotate_field,
)

__version__ = "0.1.0"

__all__ = [
    "AxialTensor",
    "ConfigError",
    "DataFormatError",
    "EulerAngles",
    "FieldVector",
    "NVSpinError",
    "NucleusSpec",
    "SolverError",
    "SpinQuantum",
    "SpinSystem",
    "build_hamiltonian",
    "eigensolve",
    "rotate_field",
]
