"""Bath estimates and the thermally activated fluctuator model of T2(T).

The echo attenuation from a Gaussian Ornstein-Uhlenbeck frequency noise of
rms ``delta`` (rad/s) and correlation time ``tau_c`` is

    ln V = -delta^2 tau_c^2 [2x - 3 + 4 e^-x - e^-2x],  x = tau / tau_c,

with tau half the total free evolution 2tau. The correlation time is
activated, tau_c = tau_0 exp(E_a / kT).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from .. import constants as C
from ..errors import InvalidRegime, MinimumNotBracketed, NonConvergence, UnderDetermined
from .results import FitResult

# dimensionless prefactor in nu_dd = C (mu0/4pi) g^2 muB^2 n / h (n^-1/3 spacing)
DIPOLAR_PREFACTOR = 1.0
G_P1 = 2.0024

_SERIES = [(4.0 * (-1.0) ** k - (-2.0) ** k) / math.factorial(k) for k in range(3, 16)]


@dataclass(frozen=True)
class BathParams:
    p1_concentration: float  # ppm
    inhomogeneous_linewidth: float  # kHz
    carbon13_abundance: float = 0.011

    def __post_init__(self):
        if self.p1_concentration < 0 or self.inhomogeneous_linewidth < 0:
            raise ValueError("bath parameters must be non-negative")
        if not 0.0 <= self.carbon13_abundance <= 1.0:
            raise ValueError("carbon13_abundance must lie in [0, 1]")

    @property
    def p1_density(self) -> float:
        """P1 density in cm^-3."""
        return ppm_to_density(self.p1_concentration)


@dataclass(frozen=True)
class FluctuatorModel:
    E_a: float  # meV
    tau_0: float  # s
    delta: float  # Mrad/s
    T2_bath: float  # ms
    density: float | None = None  # cm^-3, derived from delta when omitted

    def __post_init__(self):
        for name in ("E_a", "tau_0", "delta", "T2_bath"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.density is None:
            object.__setattr__(self, "density", density_from_delta(self.delta))

    def tau_c(self, temperature) -> np.ndarray:
        t = np.asarray(temperature, dtype=float)
        with np.errstate(over="ignore"):
            return self.tau_0 * np.exp(self.E_a / (C.BOLTZMANN_MEV_PER_K * t))

    def gamma_f(self, temperature) -> np.ndarray:
        """Fluctuator decoherence rate (1/s)."""
        return np.vectorize(lambda tc: 1.0 / echo_1e_time(self.delta, tc))(self.tau_c(temperature))

    def t2(self, temperature) -> np.ndarray:
        """Total T2 in ms."""
        rate = 1.0 / (self.T2_bath * 1e-3) + self.gamma_f(temperature)
        return 1e3 / rate


def ppm_to_density(ppm: float) -> float:
    return ppm * 1e-6 * C.DIAMOND_ATOMS_PER_CM3


def _ou_bracket(x):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < 1e-2
    xs = x[small]
    acc = np.zeros_like(xs)
    for k, c in reversed(list(enumerate(_SERIES, start=3))):
        acc = acc * xs + c
    out[small] = acc * xs**3
    xl = x[~small]
    out[~small] = 2 * xl - 3 + 4 * np.exp(-xl) - np.exp(-2 * xl)
    return out


def ou_echo_envelope(delta, tau_c, two_tau):
    """Hahn-echo attenuation for OU noise.

    Parameters
    ----------
    delta : float
        rms angular frequency noise in Mrad/s.
    tau_c : float
        Correlation time in s.
    two_tau : float or array
        Total free evolution time in s.
    """
    if not (np.all(np.asarray(delta) > 0) and np.all(np.asarray(tau_c) > 0)):
        raise ValueError("delta and tau_c must be positive")
    tt = np.asarray(two_tau, dtype=float)
    if np.any(tt <= 0):
        raise ValueError("two_tau must be positive")
    d = np.asarray(delta, dtype=float) * 1e6
    tc = np.asarray(tau_c, dtype=float)
    lnv = -(d * tc) ** 2 * _ou_bracket(tt / (2 * tc))
    return np.exp(lnv)


def echo_1e_time(delta, tau_c) -> float:
    """Total time 2tau (s) at which the OU echo falls to 1/e."""
    if not np.isfinite(tau_c):
        return float("inf")
    q = delta * 1e6 * tau_c
    if q > 1e6:  # quasi-static: x << 1
        return (12.0 * tau_c / (delta * 1e6) ** 2) ** (1.0 / 3.0)
    if q < 1e-6:  # motional narrowing: x >> 1
        return 1.0 / ((delta * 1e6) ** 2 * tau_c) + 3.0 * tau_c
    log_target = -2.0 * math.log(q)

    def g(logx):
        return math.log(_ou_bracket(np.array([math.exp(logx)]))[0]) - log_target

    logx = optimize.brentq(g, -40.0, 60.0, xtol=1e-13, rtol=1e-13)
    return 2.0 * tau_c * math.exp(logx)


def mean_dipolar_coupling(concentration: float, prefactor: float = DIPOLAR_PREFACTOR,
                          g: float = G_P1) -> float:
    """Mean like-spin dipolar coupling (kHz) at density ``concentration`` cm^-3.

    nu_dd = C (mu0/4pi) g^2 muB^2 n / h, i.e. the coupling at the mean
    spacing n^-1/3 when C = 1.
    """
    if not concentration > 0:
        raise ValueError("concentration must be positive")
    n_si = concentration * 1e6
    return prefactor * C.MU0_OVER_4PI * g**2 * C.MU_B_SI**2 * n_si / C.H_PLANCK * 1e-3


def delta_from_density(density: float) -> float:
    """Fluctuating-field strength (Mrad/s) tied to a spin density."""
    return 2 * np.pi * mean_dipolar_coupling(density) * 1e3 * 1e-6


def density_from_delta(delta: float) -> float:
    return float(delta / delta_from_density(1.0))


# parameters placing a 0.45 ms minimum at 15 K on a 0.7 ms bath limit
REFERENCE_MODEL = FluctuatorModel(2.5, 4.81187428450077e-05, 0.002571093972543975, 0.7)
# generic starting point for fits
DEFAULT_START = FluctuatorModel(2.0, 1e-5, 0.005, 0.6)


def flip_flop_suppression(coupling: float, linewidth: float, base_T2: float = 0.2):
    """Fraction of pairs able to flip-flop and the corrected T2 (ms).

    Returns ``(fraction, corrected_T2, base_T2)``.
    """
    if not coupling > 0:
        raise ValueError("coupling must be positive")
    if coupling >= linewidth:
        raise InvalidRegime("coupling must be smaller than the inhomogeneous linewidth")
    fraction = coupling / linewidth
    return fraction, base_T2 * linewidth / coupling, base_T2


# ---------------------------------------------------------------------------
# T2(T) fit
# ---------------------------------------------------------------------------


@dataclass
class T2TemperatureFit:
    model: FluctuatorModel
    result: FitResult
    ea_identifiable: bool = True
    t_min: float | None = None  # K, location of the model T2 minimum
    t2_min: float | None = None  # ms


def model_minimum(model: FluctuatorModel, t_range=(1.0, 300.0)):
    """(T, T2) at the minimum of the model curve on a log grid."""
    ts = np.geomspace(*t_range, 600)
    t2 = model.t2(ts)
    k = int(np.argmin(t2))
    if 0 < k < ts.size - 1:
        res = optimize.minimize_scalar(lambda lt: float(model.t2(math.exp(lt))),
                                       bracket=(math.log(ts[k - 1]), math.log(ts[k]), math.log(ts[k + 1])))
        return float(math.exp(res.x)), float(res.fun)
    return float(ts[k]), float(t2[k])


def _null_result(initial, temps, y, message, diagnostics):
    bath = float(np.exp(np.mean(y)))
    r = y - np.log(bath)
    sd = float(np.std(r, ddof=1)) if y.size > 1 else 0.0
    fr = FitResult({"E_a_meV": initial.E_a, "tau_0_s": initial.tau_0,
                    "delta_Mrad_s": initial.delta, "T2_bath_ms": bath},
                   {"E_a_meV": float("inf"), "tau_0_s": float("inf"), "delta_Mrad_s": float("inf"),
                    "T2_bath_ms": bath * sd / math.sqrt(y.size)},
                   float(np.linalg.norm(r)), r, True, 1, message, diagnostics)
    return T2TemperatureFit(replace(initial, T2_bath=bath), fr, ea_identifiable=False)


def fit_t2_temperature(data, initial: FluctuatorModel, significance: float = 1e-3) -> T2TemperatureFit:
    """Fit (E_a, tau_0, delta, T2_bath) to (T [K], T2 [ms]) pairs.

    Residuals are taken on log T2, so the noise model is relative. The
    four-parameter fit is compared with a constant-T2 model by an F test;
    when the fluctuator terms are not significant at ``significance`` only
    T2_bath is reported and E_a is flagged unidentifiable.

    Raises
    ------
    MinimumNotBracketed
        A significant temperature dependence whose lowest point sits at an
        end of the data.
    """
    from scipy import stats

    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 5:
        raise UnderDetermined("need at least 5 (T, T2) points")
    arr = arr[np.argsort(arr[:, 0])]
    temps, t2 = arr[:, 0], arr[:, 1]
    if np.any(t2 <= 0) or np.any(temps <= 0):
        raise ValueError("temperatures and T2 values must be positive")
    y = np.log(t2)
    rss0 = float(np.sum((y - y.mean()) ** 2))

    def build(p):
        ea, tau0, delta, bath = np.exp(p)
        return FluctuatorModel(ea, tau0, delta, bath)

    def resid(p):
        return np.log(build(p).t2(temps)) - y

    p0 = np.log([initial.E_a, initial.tau_0, initial.delta, initial.T2_bath])
    try:
        res = optimize.least_squares(resid, p0, method="trf", diff_step=1e-6,
                                     xtol=1e-12, ftol=1e-12, gtol=1e-12, max_nfev=2000)
    except (ValueError, FloatingPointError, ZeroDivisionError) as exc:
        return _null_result(initial, temps, y, f"fluctuator fit failed ({exc}); constant model kept",
                            {"rss_constant": rss0})
    dof = max(1, y.size - 4)
    rss1 = float(np.sum(res.fun**2))
    f_stat = ((rss0 - rss1) / 3.0) / (rss1 / dof) if rss1 > 0 else float("inf")
    p_value = float(stats.f.sf(f_stat, 3, dof)) if np.isfinite(f_stat) else 0.0
    if p_value > significance:
        return _null_result(initial, temps, y, "no significant temperature dependence; "
                            "fluctuator parameters unidentifiable",
                            {"rss_constant": rss0, "rss_fluctuator": rss1, "p_value": p_value})
    k = int(np.argmin(t2))
    if k == 0 or k == t2.size - 1:
        raise MinimumNotBracketed(f"lowest T2 at the edge of the data (T = {temps[k]} K)")
    if res.status <= 0:
        raise NonConvergence(f"T2(T) fit failed: {res.message}")
    model = build(res.x)
    cov = np.linalg.pinv(res.jac.T @ res.jac) * rss1 / dof
    rel = np.sqrt(np.clip(np.diag(cov), 0, None))  # sigmas of the log-parameters
    vals = np.exp(res.x)
    names = ("E_a_meV", "tau_0_s", "delta_Mrad_s", "T2_bath_ms")
    t_min, t2_min = model_minimum(model, (float(temps[0]) / 2, float(temps[-1]) * 2))
    fr = FitResult(dict(zip(names, map(float, vals))), dict(zip(names, map(float, vals * rel))),
                   float(np.linalg.norm(res.fun)), res.fun, bool(res.success), int(res.nfev),
                   str(res.message),
                   {"density_cm3": model.density, "t_min_K": t_min, "t2_min_ms": t2_min,
                    "residual_space": "log T2", "p_value": p_value})
    return T2TemperatureFit(model, fr, True, t_min, t2_min)
