"""Echo-signal processing: decay fits, cosine FT, phase correction, peaks.

Time axes are in microseconds. ESEEM traces are sampled on the interpulse
delay tau, so FT frequencies come out directly in MHz.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize
from scipy.ndimage import uniform_filter1d

from .errors import DataFormatError, DegenerateData, EmptyAfterDeadTime, NonConvergence
from .eseem import EseemTrace
from .io import read_table

MAX_ITERATIONS = 500
N_BOUNDS = (0.5, 4.0)


@dataclass
class EchoDecay:
    two_tau: np.ndarray  # us
    amplitude: np.ndarray
    temperature: float | None = None  # K
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.two_tau = np.asarray(self.two_tau, dtype=float)
        self.amplitude = np.asarray(self.amplitude, dtype=float)
        if self.two_tau.shape != self.amplitude.shape:
            raise ValueError("two_tau and amplitude lengths differ")
        if self.two_tau.size > 1 and np.any(np.diff(self.two_tau) <= 0):
            raise ValueError("two_tau must be strictly increasing")


@dataclass
class StretchedExpFit:
    A: float
    T2: float  # ms
    n: float
    residual_norm: float
    uncertainties: dict
    converged: bool = True
    iterations: int = 0

    def __call__(self, two_tau_us):
        return stretched_exponential(two_tau_us, self.A, self.T2, self.n)

    def as_dict(self) -> dict:
        return {"A": self.A, "T2_ms": self.T2, "n": self.n,
                "uncertainties": {"A": self.uncertainties["A"], "T2_ms": self.uncertainties["T2"],
                                  "n": self.uncertainties["n"]},
                "residual_norm": self.residual_norm, "converged": self.converged,
                "iterations": self.iterations}


@dataclass
class FtSpectrum:
    freq: np.ndarray  # MHz, 0 .. Nyquist
    amplitude: np.ndarray
    dead_time: float  # us
    zero_fill_factor: int
    complex_amplitude: np.ndarray | None = None
    time_origin: float = 0.0  # time of the first retained sample
    window: str = "none"

    @property
    def bin_width(self) -> float:
        return float(self.freq[1] - self.freq[0])


@dataclass(frozen=True)
class Peak:
    freq: float
    amplitude: float
    width: float


@dataclass
class PeakList:
    peaks: list

    def __len__(self):
        return len(self.peaks)

    def __iter__(self):
        return iter(self.peaks)

    def __getitem__(self, i):
        return self.peaks[i]

    @property
    def freqs(self) -> np.ndarray:
        return np.array([p.freq for p in self.peaks])

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([p.amplitude for p in self.peaks])

    def positive(self) -> "PeakList":
        return PeakList([p for p in self.peaks if p.amplitude > 0])

    def negative(self) -> "PeakList":
        return PeakList([p for p in self.peaks if p.amplitude < 0])


@dataclass(frozen=True)
class AdditiveTriple:
    indices: tuple  # (i, j, k) into the peak list, nu_i + nu_j = nu_k
    freqs: tuple
    mismatch: float


# ---------------------------------------------------------------------------
# Stretched exponential
# ---------------------------------------------------------------------------


def stretched_exponential(two_tau_us, A, T2_ms, n):
    """A exp(-(2tau / T2)^n) with 2tau in us and T2 in ms."""
    x = np.asarray(two_tau_us, dtype=float) / (1e3 * T2_ms)
    return A * np.exp(-np.power(x, n))


def _initial_guess(t, y):
    """Log-log regression of -ln(y/A0) against 2tau."""
    a0 = float(np.max(y[: max(3, y.size // 20)]))
    r = y / a0
    ok = (t > 0) & (r > 0.02) & (r < 0.98)
    if np.count_nonzero(ok) < 2:
        return a0, float(np.median(t[t > 0])) if np.any(t > 0) else 1.0, 1.0
    xs = np.log(t[ok])
    ys = np.log(-np.log(r[ok]))
    slope, icpt = np.polyfit(xs, ys, 1)
    n = float(np.clip(slope, *N_BOUNDS))
    t2 = float(np.exp(-icpt / slope)) if slope > 0 else float(np.median(t[ok]))
    return a0, t2, n


def fit_stretched_exponential(decay: EchoDecay, initial=None, min_points: int = 8) -> StretchedExpFit:
    """Least-squares fit of A exp(-(2tau/T2)^n).

    Parameters
    ----------
    decay : EchoDecay
        Data with 2tau in us.
    initial : tuple, optional
        (A, T2_ms, n). Defaults to a log-log regression estimate.

    Returns
    -------
    StretchedExpFit
        T2 in ms. Uncertainties are 1 sigma from the Jacobian at the optimum,
        scaled by the residual variance.
    """
    t = decay.two_tau
    y = decay.amplitude
    if t.size < min_points:
        raise DegenerateData(f"need at least {min_points} points, got {t.size}")
    if not np.any(y > 0):
        raise DegenerateData("amplitude is non-positive throughout")
    # fitting on max-normalized data makes the result scale-equivariant
    scale = float(np.max(np.abs(y)))
    ys = y / scale
    if initial is None:
        a0, t2_us, n0 = _initial_guess(t, ys)
    else:
        a0, t2_us, n0 = initial[0] / scale, initial[1] * 1e3, initial[2]
    n0 = float(np.clip(n0, N_BOUNDS[0] + 1e-6, N_BOUNDS[1] - 1e-6))
    tmax = float(np.max(t))

    def model(p):
        a, t2, n = p
        return a * np.exp(-np.power(t / t2, n))

    def resid(p):
        return model(p) - ys

    def jac(p):
        a, t2, n = p
        x = t / t2
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = np.power(x, n)
            e = np.exp(-xn)
            logx = np.where(x > 0, np.log(np.where(x > 0, x, 1.0)), 0.0)
        return np.column_stack([e, a * e * xn * n / t2, -a * e * xn * logx])

    p0 = np.array([a0, np.clip(t2_us, 1e-6 * tmax, 1e3 * tmax), n0])
    res = optimize.least_squares(
        resid, p0, jac=jac, method="trf",
        bounds=([-np.inf, 1e-9 * tmax, N_BOUNDS[0]], [np.inf, np.inf, N_BOUNDS[1]]),
        x_scale="jac", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=MAX_ITERATIONS,
    )
    if res.status == 0:
        raise NonConvergence(f"stretched-exponential fit did not converge in {MAX_ITERATIONS} iterations")
    x = res.x.copy()
    if N_BOUNDS[0] < x[2] < N_BOUNDS[1]:
        # Gauss-Newton polish: the cost is too flat near the optimum for ftol to
        # pin n below 1e-9, the normal-equation step is not
        for _ in range(20):
            step = np.linalg.lstsq(jac(x), -resid(x), rcond=None)[0]
            trial = x + step
            if not (N_BOUNDS[0] <= trial[2] <= N_BOUNDS[1] and trial[1] > 0):
                break
            x = trial
            if np.all(np.abs(step) <= 1e-15 * np.maximum(np.abs(x), 1.0)):
                break
        res.x = x
        res.fun = resid(x)
        res.jac = jac(x)
    a, t2, n = res.x
    dof = max(1, t.size - 3)
    s2 = float(np.sum(res.fun**2)) / dof
    try:
        cov = np.linalg.inv(res.jac.T @ res.jac) * s2
        err = np.sqrt(np.clip(np.diag(cov), 0, None))
    except np.linalg.LinAlgError:
        err = np.full(3, np.inf)
    return StretchedExpFit(
        A=float(a * scale), T2=float(t2 * 1e-3), n=float(n),
        residual_norm=float(np.linalg.norm(res.fun) * scale),
        uncertainties={"A": float(err[0] * scale), "T2": float(err[1] * 1e-3), "n": float(err[2])},
        converged=bool(res.success), iterations=int(res.nfev),
    )


def normalize_by_decay(trace: EseemTrace, fit: StretchedExpFit) -> EseemTrace:
    """Divide an ESEEM trace (sampled on tau) by the fitted decay at 2tau."""
    env = fit(2.0 * trace.tau)
    meta = dict(trace.metadata, normalized_by={"A": fit.A, "T2_ms": fit.T2, "n": fit.n})
    return EseemTrace(trace.tau.copy(), trace.v / env, meta)


# ---------------------------------------------------------------------------
# Fourier processing
# ---------------------------------------------------------------------------


def detection_bandwidth_filter(trace: EseemTrace, integration_window: float) -> EseemTrace:
    """Boxcar average over ``integration_window`` ns (spectrometer integrator).

    A tone at frequency f is attenuated by about sinc(pi f w).
    """
    if not integration_window > 0:
        raise ValueError("integration_window must be positive")
    width = int(round(integration_window * 1e-3 / trace.step)) if trace.tau.size > 1 else 1
    meta = dict(trace.metadata, integration_window_ns=integration_window)
    if width <= 1:
        return EseemTrace(trace.tau.copy(), trace.v.copy(), meta)
    v = uniform_filter1d(trace.v, size=width, mode="nearest")
    return EseemTrace(trace.tau.copy(), v, meta)


def _window(tau, kind):
    if kind == "none":
        return np.ones_like(tau)
    if kind == "hamming":
        # half window anchored at tau=0 so the truncated start stays weighted
        return 0.54 + 0.46 * np.cos(np.pi * tau / tau[-1])
    raise ValueError(f"window must be 'none' or 'hamming', got {kind!r}")


def cosine_ft(trace: EseemTrace, dead_time: float = 0.0, zero_fill: int = 8,
              window: str = "none") -> FtSpectrum:
    """Cosine Fourier transform of a uniformly sampled ESEEM trace.

    Samples before ``dead_time`` are dropped, the mean is removed, the
    window applied and the record zero-filled to ``zero_fill`` times its
    length. The complex transform, referenced to the first retained sample,
    is kept for :func:`phase_correct_first_order`; ``amplitude`` is its real
    part.
    """
    if dead_time < 0:
        raise ValueError("dead_time must be non-negative")
    if zero_fill < 1:
        raise ValueError("zero_fill must be >= 1")
    if not trace.is_uniform():
        raise ValueError("trace must be uniformly sampled")
    step = trace.step
    keep = trace.tau >= dead_time - 1e-9 * max(step, 1.0)
    if np.count_nonzero(keep) < 2:
        raise EmptyAfterDeadTime(f"fewer than 2 samples remain after dead time {dead_time} us")
    tau = trace.tau[keep]
    x = trace.v[keep] - np.mean(trace.v[keep])
    if window != "none":
        x = x * _window(tau, window)
        x = x - np.mean(x)
    n = x.size * int(zero_fill)
    s = np.fft.ifft(x, n=n) * n  # sum x_m exp(+i 2 pi nu (t_m - t0))
    half = n // 2 + 1
    s = s[:half]
    freq = np.arange(half) / (n * step)
    return FtSpectrum(freq, s.real.copy(), float(dead_time), int(zero_fill), s,
                      float(tau[0]), window)


def phase_correct_first_order(spec: FtSpectrum, dead_time: float | None = None) -> FtSpectrum:
    """Rotate each bin by exp(+i 2 pi nu t_d) and keep the real part.

    ``dead_time`` defaults to the time of the first retained sample.
    """
    if spec.complex_amplitude is None:
        raise ValueError("spectrum has no complex intermediate")
    td = spec.time_origin if dead_time is None else float(dead_time)
    c = spec.complex_amplitude * np.exp(2j * np.pi * spec.freq * td)
    return replace(spec, amplitude=c.real.copy(), complex_amplitude=c)


def _half_width(a, k, level):
    """Full width (in bins) where |a| falls to ``level`` around index k."""
    sgn = np.sign(a[k])
    y = sgn * a
    lo = k
    while lo > 0 and y[lo] > level:
        lo -= 1
    hi = k
    while hi < a.size - 1 and y[hi] > level:
        hi += 1

    def cross(i0, i1):
        d = y[i1] - y[i0]
        return i0 + (level - y[i0]) / d if d != 0 else float(i0)

    left = cross(lo, lo + 1) if y[lo] <= level else float(lo)
    right = cross(hi - 1, hi) if y[hi] <= level else float(hi)
    return right - left


def pick_peaks(spec: FtSpectrum, floor: float = 0.05, fmin: float = 0.0,
               fmax: float | None = None) -> PeakList:
    """Signed local extrema above ``floor`` times max |amplitude|.

    Positions are refined by 3-point parabolic interpolation; widths are
    full widths at half height.
    """
    if not 0 < floor < 1:
        raise ValueError("floor must lie in (0, 1)")
    a = spec.amplitude
    if a.size < 3:
        return PeakList([])
    amax = float(np.max(np.abs(a[1:])))
    if amax == 0:
        return PeakList([])
    thr = floor * amax
    mid = a[1:-1]
    is_max = (mid > a[:-2]) & (mid >= a[2:]) & (mid > thr)
    is_min = (mid < a[:-2]) & (mid <= a[2:]) & (mid < -thr)
    idx = np.flatnonzero(is_max | is_min) + 1
    df = spec.bin_width
    peaks = []
    for k in idx:
        if k == 1 and abs(a[0]) >= abs(a[1]):
            continue
        y0, y1, y2 = a[k - 1], a[k], a[k + 1]
        den = y0 - 2 * y1 + y2
        off = 0.5 * (y0 - y2) / den if den != 0 else 0.0
        off = float(np.clip(off, -0.5, 0.5))
        f = spec.freq[k] + off * df
        amp = y1 - 0.25 * (y0 - y2) * off
        if f < fmin or (fmax is not None and f > fmax):
            continue
        peaks.append(Peak(float(f), float(amp), float(_half_width(a, k, abs(y1) / 2) * df)))
    peaks.sort(key=lambda p: p.freq)
    return PeakList(peaks)


def check_additive_relation(peaks: PeakList, tolerance: float) -> list:
    """All (i, j, k) with nu_i + nu_j = nu_k within ``tolerance`` MHz."""
    f = peaks.freqs if isinstance(peaks, PeakList) else np.asarray(peaks, dtype=float)
    out = []
    if f.size < 3:
        return out
    for i, j in itertools.combinations(range(f.size), 2):
        s = f[i] + f[j]
        for k in range(f.size):
            if k in (i, j):
                continue
            d = abs(s - f[k])
            if d <= tolerance:
                out.append(AdditiveTriple((i, j, k), (float(f[i]), float(f[j]), float(f[k])), float(d)))
    return out


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------


def read_decay_csv(path, channel: str = "real", temperature: float | None = None) -> EchoDecay:
    """Read ``two_tau_us, amplitude[, amplitude_imag]``.

    ``channel`` is ``real`` or ``magnitude``; magnitude needs the imaginary
    column.
    """
    tab = read_table(path, ["two_tau_us", "amplitude"], optional=("amplitude_imag",))
    amp = tab["amplitude"]
    if channel == "magnitude":
        if "amplitude_imag" not in tab:
            raise DataFormatError("magnitude channel requested but no amplitude_imag column",
                                  line=tab["_header_line"], path=str(path))
        amp = np.hypot(amp, tab["amplitude_imag"])
    elif channel != "real":
        raise ValueError(f"channel must be 'real' or 'magnitude', got {channel!r}")
    t = tab["two_tau_us"]
    bad = np.flatnonzero(np.diff(t) <= 0)
    if bad.size:
        raise DataFormatError("two_tau_us must be strictly increasing",
                              line=int(tab["_lines"][bad[0] + 1]), path=str(path))
    return EchoDecay(t, amp, temperature, {"source": str(path), "channel": channel})


def read_eseem_csv(path) -> EseemTrace:
    """Read ``tau_us, v``."""
    tab = read_table(path, ["tau_us", "v"])
    t = tab["tau_us"]
    bad = np.flatnonzero(np.diff(t) <= 0)
    if bad.size:
        raise DataFormatError("tau_us must be strictly increasing",
                              line=int(tab["_lines"][bad[0] + 1]), path=str(path))
    return EseemTrace(t, tab["v"], {"source": str(path)})
