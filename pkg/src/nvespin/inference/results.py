"""Common fit report shared by the fitters."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class FitResult:
    """Best-fit parameters with 1-sigma uncertainties and solver diagnostics."""

    params: dict
    uncertainties: dict
    residual_norm: float
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    converged: bool = True
    n_evaluations: int = 0
    message: str = ""
    diagnostics: dict = field(default_factory=dict)

    @property
    def residual_rms(self) -> float:
        r = np.asarray(self.residuals, dtype=float)
        return float(np.sqrt(np.mean(r**2))) if r.size else 0.0

    def to_dict(self) -> dict:
        return {
            "parameters": {k: {"value": v, "uncertainty": self.uncertainties.get(k)}
                           for k, v in self.params.items()},
            "residual_norm": self.residual_norm,
            "residual_rms": self.residual_rms,
            "residuals": np.asarray(self.residuals, dtype=float).tolist(),
            "converged": self.converged,
            "n_evaluations": self.n_evaluations,
            "message": self.message,
            "diagnostics": self.diagnostics,
        }


def jacobian_uncertainties(jac: np.ndarray, residuals: np.ndarray, dof: int | None = None):
    """Covariance s^2 (J^T J)^-1 and its square-rooted diagonal."""
    jac = np.atleast_2d(jac)
    m, p = jac.shape
    dof = max(1, m - p) if dof is None else max(1, dof)
    s2 = float(np.sum(np.asarray(residuals) ** 2)) / dof
    jtj = jac.T @ jac
    cov = np.linalg.pinv(jtj) * s2
    return cov, np.sqrt(np.clip(np.diag(cov), 0.0, None))
