"""Crystal misorientation from labelled ESR peak positions.

Only the field direction is observable, so the fit runs over (alpha, beta)
with gamma held at 0; any residual gauge freedom is reported through the
recovered direction. Inversion (B -> -B) leaves every labelled peak
unchanged, so directions are compared up to sign.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from ..errors import NonConvergence, UnderDetermined
from ..spectra import ElectronLineModel, TransitionLabel
from ..spincore import EulerAngles, SpinSystem, angle_between, rotate_field
from .results import FitResult, jacobian_uncertainties

log = logging.getLogger(__name__)

DEFAULT_ALPHA_STARTS = (0.0, 45.0, 90.0, 135.0, 180.0, 225.0, 270.0, 315.0)
DEFAULT_BETA_STARTS = (1.0, 5.0)


@dataclass
class OrientationFit:
    euler: EulerAngles
    residual_rms: float  # mT
    residuals: np.ndarray  # mT, model - measured, input order
    direction: np.ndarray
    starts: list = field(default_factory=list)
    result: FitResult | None = None

    def direction_error(self, true_direction) -> float:
        """Angle (deg) to ``true_direction`` modulo inversion."""
        a = angle_between(self.direction, true_direction)
        return min(a, 180.0 - a)


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def predict_peaks(labels, sys: SpinSystem, mw_freq: float, nominal_axis, euler: EulerAngles,
                  guesses=None) -> np.ndarray:
    """Model fields for labelled lines at the given misorientation."""
    d = rotate_field(_unit(nominal_axis), euler)
    guesses = [340.0] * len(labels) if guesses is None else guesses
    model = ElectronLineModel(sys, mw_freq)
    return np.array([model.field(d, lab, g) for lab, g in zip(labels, guesses)])


def fit_orientation(measured_peaks, sys: SpinSystem, mw_freq: float, nominal_axis,
                    alpha_starts=DEFAULT_ALPHA_STARTS, beta_starts=DEFAULT_BETA_STARTS,
                    seed: int = 0) -> OrientationFit:
    """Least-squares Euler misorientation from labelled peak fields.

    Parameters
    ----------
    measured_peaks : sequence of (label, field_mT)
        Labels are :class:`TransitionLabel` or strings like ``"S2+"``.
    sys : SpinSystem
        Site-1 defect; nuclei are ignored.
    nominal_axis : array_like
        Intended field direction (normalized internally).

    Returns
    -------
    OrientationFit
        Best of a multi-start local search over a coarse (alpha, beta) grid.
    """
    if len(measured_peaks) < 4:
        raise UnderDetermined(f"need at least 4 labelled peaks, got {len(measured_peaks)}")
    labels = [lab if isinstance(lab, TransitionLabel) else TransitionLabel.parse(lab)
              for lab, _ in measured_peaks]
    meas = np.array([float(b) for _, b in measured_peaks])
    nominal = _unit(nominal_axis)
    model = ElectronLineModel(sys, mw_freq)
    rng = np.random.default_rng(seed)
    guesses = meas.copy()

    def resid(p):
        d = rotate_field(nominal, EulerAngles(p[0], p[1], 0.0))
        pred = np.array([model.field(d, lab, g) for lab, g in zip(labels, guesses)])
        ok = np.isfinite(pred)
        guesses[ok] = pred[ok]
        return np.where(ok, pred - meas, 1e3)

    starts = [(a + rng.uniform(-1, 1), b) for b in beta_starts for a in alpha_starts]
    if len(starts) < 8:
        raise ValueError("multi-start needs at least 8 starting points")
    best = None
    log_rows = []
    n_eval = 0
    for a0, b0 in starts:
        guesses[:] = meas
        try:
            res = optimize.least_squares(resid, [a0, b0], bounds=([-np.inf, 0.0], [np.inf, 90.0]),
                                         x_scale=[1.0, 1.0], diff_step=1e-7, xtol=1e-12,
                                         ftol=1e-12, gtol=1e-12, max_nfev=200)
        except (ValueError, np.linalg.LinAlgError) as exc:  # pragma: no cover - defensive
            log.debug("start (%.1f, %.1f) failed: %s", a0, b0, exc)
            continue
        n_eval += res.nfev
        cost = float(np.sum(res.fun**2))
        log_rows.append({"start": [a0, b0], "end": res.x.tolist(), "cost": cost, "status": int(res.status)})
        if best is None or cost < best[0]:
            best = (cost, res)
    if best is None:
        raise NonConvergence("no multi-start run produced a finite solution")
    cost, res = best
    alpha = float(np.mod(res.x[0], 360.0))
    beta = float(res.x[1])
    euler = EulerAngles(alpha, beta, 0.0)
    guesses[:] = meas
    r = resid([alpha, beta])
    direction = rotate_field(nominal, euler)
    _, err = jacobian_uncertainties(res.jac, r)
    fr = FitResult(
        params={"alpha_deg": alpha, "beta_deg": beta, "gamma_deg": 0.0},
        uncertainties={"alpha_deg": float(err[0]), "beta_deg": float(err[1]), "gamma_deg": 0.0},
        residual_norm=float(np.linalg.norm(r)), residuals=r, converged=bool(res.success),
        n_evaluations=n_eval, message=str(res.message),
        diagnostics={"starts": log_rows, "direction": direction.tolist(),
                     "labels": [str(lab) for lab in labels]},
    )
    log.info("orientation fit: alpha=%.3f beta=%.3f rms=%.4g mT", alpha, beta, fr.residual_rms)
    return OrientationFit(euler, fr.residual_rms, r, direction, log_rows, fr)
