"""Field-swept ESR stick spectra of the four NV orientations.

Resonances are located by sign-change bracketing of ``E_j - E_i - h nu`` on a
field grid, then Brent's method. Transition labels come from the laboratory-frame
m_S character of the two levels: ``plus`` is T0 <-> T+, ``minus`` is
T- <-> T0.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import constants as C
from .spincore import (
    EulerAngles,
    FieldVector,
    SpinSystem,
    _embedded_operators,
    build_hamiltonian,
    eigensolve,
    lab_ms_basis,
    rotate_field,
    spin_matrices,
    system_for_site,
    tensor_matrix,
)

GRID_POINTS = 2000
FIELD_TOL_MT = 1e-7
FREQ_TOL_MHZ = 1e-4
MAX_ROOT_ITER = 60
INTENSITY_THRESHOLD = 1e-6


class GridTooCoarse(UserWarning):
    pass


class Branch(str, enum.Enum):
    PLUS = "plus"  # T0 <-> T+
    MINUS = "minus"  # T- <-> T0


@dataclass(frozen=True)
class TransitionLabel:
    site: int
    branch: Branch

    def __post_init__(self):
        if self.site not in (1, 2, 3, 4):
            raise ValueError(f"site must be 1-4, got {self.site}")
        object.__setattr__(self, "branch", Branch(self.branch))

    def __str__(self):
        return f"S{self.site}{'+' if self.branch is Branch.PLUS else '-'}"

    @classmethod
    def parse(cls, text: str) -> "TransitionLabel":
        """Parse ``S2+`` / ``S3-`` style labels."""
        t = text.strip()
        if len(t) < 3 or t[0].upper() != "S" or t[-1] not in "+-":
            raise ValueError(f"bad transition label {text!r}")
        return cls(int(t[1:-1]), Branch.PLUS if t[-1] == "+" else Branch.MINUS)


@dataclass
class ResonanceLine:
    label: TransitionLabel | None
    field: float  # mT
    intensity: float
    signed_amplitude: float = 0.0
    levels: tuple = ()
    ms: tuple = ()  # (m_S lower, m_S upper)
    mismatch_mhz: float = 0.0


@dataclass(frozen=True)
class PopulationSet:
    p_plus: float
    p_zero: float
    p_minus: float

    def __post_init__(self):
        if not all(np.isfinite([self.p_plus, self.p_zero, self.p_minus])):
            raise ValueError("populations must be finite")

    def of(self, ms: int) -> float:
        return {1: self.p_plus, 0: self.p_zero, -1: self.p_minus}[ms]


@dataclass
class StickSpectrum:
    lines: list
    mw_frequency: float  # GHz
    orientation: EulerAngles
    nominal_axis: tuple = (0.0, 0.0, 1.0)
    window: tuple = (0.0, 0.0)
    metadata: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def polarization_axes(direction) -> tuple:
    """Two orthonormal microwave axes perpendicular to the static field."""
    b = np.asarray(direction, dtype=float)
    b = b / np.linalg.norm(b)
    u = np.cross(b, [0.0, 0.0, 1.0])
    if np.linalg.norm(u) < 1e-12:
        u = np.cross(b, [1.0, 0.0, 0.0])
    u = u / np.linalg.norm(u)
    return u, np.cross(b, u)


class _LinearHamiltonian:
    """H(B) = H_static + B * H_unit for a fixed field direction."""

    def __init__(self, sys: SpinSystem, direction):
        self.sys = sys
        self.direction = np.asarray(direction, dtype=float) / np.linalg.norm(direction)
        h0 = build_hamiltonian(sys, FieldVector(0.0, self.direction))
        h1 = build_hamiltonian(sys, FieldVector(1.0, self.direction))
        self.static = h0.entries
        self.unit = h1.entries - h0.entries
        dims = (3,) + sys.nuclear_dims
        self.s_ops = _embedded_operators(dims, 0)
        self.n = sys.nuclear_dim

    def matrix(self, b):
        return self.static + b * self.unit

    def eigvals(self, fields) -> np.ndarray:
        fields = np.atleast_1d(fields)
        stack = self.static[None] + fields[:, None, None] * self.unit[None]
        return np.linalg.eigvalsh(stack)

    def levels(self, b):
        sol = eigensolve(self.matrix(b))
        return sol.eigenvalues, sol.eigenvectors

    def ms_labels(self, vectors) -> tuple:
        """Dominant laboratory m_S per eigenvector and its weight."""
        basis = lab_ms_basis(self.direction)  # columns m=+1,0,-1
        proj = np.kron(basis, np.eye(self.n)).conj().T @ vectors
        w = np.sum(np.abs(proj.reshape(3, self.n, -1)) ** 2, axis=1)
        row = np.argmax(w, axis=0)
        return 1 - row, w[row, np.arange(w.shape[1])]

    def moments(self, vectors) -> np.ndarray:
        """|<j|S_perp|i>|^2 averaged over the two perpendicular axes."""
        u, v = polarization_axes(self.direction)
        out = 0.0
        for axis in (u, v):
            op = np.einsum("a,aij->ij", axis, self.s_ops)
            out = out + np.abs(vectors.conj().T @ op @ vectors) ** 2
        return out / 2.0


def _branch_for(ms_lo: int, ms_hi: int):
    pair = tuple(sorted((ms_lo, ms_hi)))
    if pair == (0, 1):
        return Branch.PLUS
    if pair == (-1, 0):
        return Branch.MINUS
    return None


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def transition_energies(sys: SpinSystem, field: FieldVector) -> list:
    """All (i, j, E_j - E_i, |<j|S_perp|i>|^2) with i < j at one field."""
    lin = _LinearHamiltonian(sys, field.direction)
    energies, vecs = lin.levels(field.magnitude)
    mom = lin.moments(vecs)
    out = []
    for i in range(energies.size):
        for j in range(i + 1, energies.size):
            out.append((i, j, float(energies[j] - energies[i]), float(mom[j, i])))
    return out


def _refine_root(lin, i, j, f_mhz, lo, hi):
    def gap(b):
        e = lin.eigvals(b)[0]
        return e[j] - e[i] - f_mhz

    b = optimize.brentq(gap, lo, hi, xtol=FIELD_TOL_MT, maxiter=MAX_ROOT_ITER)
    return b, gap(b)


def resonance_fields(sys: SpinSystem, mw_freq: float, direction, window,
                     site: int = 1, grid_points: int = GRID_POINTS,
                     threshold: float = INTENSITY_THRESHOLD) -> list:
    """Resonance fields (mT) of one NV orientation at ``mw_freq`` GHz.

    ``sys`` describes the site-1 defect and is moved onto ``site``. Returns
    an empty list when nothing resonates inside ``window``.
    """
    lo, hi = float(window[0]), float(window[1])
    if not hi > lo:
        raise ValueError("window must be non-empty")
    if not mw_freq > 0:
        raise ValueError("mw_freq must be positive")
    f = mw_freq * 1e3
    lin = _LinearHamiltonian(system_for_site(sys, site), direction)
    grid = np.linspace(lo, hi, grid_points)
    ev = lin.eigvals(grid)
    dim = ev.shape[1]
    lines = []
    for i in range(dim):
        for j in range(i + 1, dim):
            g = ev[:, j] - ev[:, i] - f
            s = np.sign(g)
            cells = np.flatnonzero(s[:-1] * s[1:] <= 0)
            cells = cells[~((s[cells] == 0) & (cells > 0))]  # exact zeros counted once
            if cells.size > 1 and np.any(np.diff(cells) <= 1):
                warnings.warn(f"levels ({i},{j}): adjacent sign changes; refine the grid",
                              GridTooCoarse, stacklevel=2)
            for c in cells:
                if s[c] == 0:
                    b_star, mismatch = grid[c], g[c]
                else:
                    b_star, mismatch = _refine_root(lin, i, j, f, grid[c], grid[c + 1])
                lines.append((b_star, i, j, mismatch))
    out = []
    for b_star, i, j, _ in sorted(lines):
        energies, vecs = lin.levels(b_star)
        mom = lin.moments(vecs)
        strongest = float(np.max(mom))
        inten = float(mom[j, i])
        if strongest <= 0 or inten < threshold * strongest:
            continue
        ms, _ = lin.ms_labels(vecs)
        branch = _branch_for(int(ms[i]), int(ms[j]))
        label = TransitionLabel(site, branch) if branch is not None else None
        mismatch = float(energies[j] - energies[i] - f)
        out.append(ResonanceLine(label, float(b_star), inten, 0.0, (i, j),
                                 (int(ms[i]), int(ms[j])), mismatch))
    return out


def stick_spectrum(sys: SpinSystem, mw_freq: float, nominal_axis, euler: EulerAngles,
                   populations: dict, window, grid_points: int = GRID_POINTS) -> StickSpectrum:
    """Signed stick spectrum over all four sites.

    ``populations`` maps site -> PopulationSet. Only the single-quantum
    plus/minus lines are kept.
    """
    missing = [s for s in (1, 2, 3, 4) if s not in populations]
    if missing:
        raise ValueError(f"populations missing for sites {missing}")
    nominal = np.asarray(nominal_axis, dtype=float)
    nominal = nominal / np.linalg.norm(nominal)
    direction = rotate_field(nominal, euler)
    lines = []
    for site in (1, 2, 3, 4):
        pops = populations[site]
        for ln in resonance_fields(sys, mw_freq, direction, window, site, grid_points):
            if ln.label is None:
                continue
            ln.signed_amplitude = ln.intensity * (pops.of(ln.ms[0]) - pops.of(ln.ms[1]))
            lines.append(ln)
    lines.sort(key=lambda ln: ln.field)
    return StickSpectrum(lines, mw_freq, euler, tuple(nominal),
                         (float(window[0]), float(window[1])),
                         {"direction": direction.tolist()})


def broaden(spec: StickSpectrum, linewidth: float, grid=None, step: float | None = None):
    """Sum of unit-area Gaussians (standard deviation ``linewidth`` mT).

    Returns ``(field_mT, amplitude)``; the curve integrates to the sum of
    the signed amplitudes when the grid covers every line by several widths.
    """
    if not linewidth > 0:
        raise ValueError("linewidth must be positive")
    if grid is None:
        fields = [ln.field for ln in spec.lines]
        lo = min([spec.window[0]] + fields) - 8 * linewidth
        hi = max([spec.window[1]] + fields) + 8 * linewidth
        step = step or linewidth / 10.0
        grid = np.arange(lo, hi + step / 2, step)
    grid = np.asarray(grid, dtype=float)
    curve = np.zeros_like(grid)
    norm = 1.0 / (linewidth * np.sqrt(2 * np.pi))
    for ln in spec.lines:
        curve += ln.signed_amplitude * norm * np.exp(-0.5 * ((grid - ln.field) / linewidth) ** 2)
    return grid, curve


def zeeman_resonance_field(mw_freq: float, g: float = C.G_NV) -> float:
    """B = h nu / (g muB) in mT for a free spin."""
    return mw_freq * 1e3 / (g * C.MU_B_MHZ_PER_MT)



class ElectronLineModel:
    """Fast single-line resonance fields for the bare S=1 defect.

    Caches the per-site ZFS matrices; each query diagonalizes 3x3 matrices
    only. Used by the orientation fitter.
    """

    def __init__(self, sys: SpinSystem, mw_freq: float):
        sx, sy, sz = (np.asarray(a) for a in spin_matrices(3))
        self.s_ops = np.stack([sx, sy, sz])
        self.zeeman = sys.g_e * C.MU_B_MHZ_PER_MT
        self.f = mw_freq * 1e3
        self.mw_freq = mw_freq
        self.sys = sys.electron_only()
        self.zfs = {s: np.einsum("ab,aij,bjk->ik", tensor_matrix(system_for_site(self.sys, s).zfs),
                                 self.s_ops, self.s_ops) for s in (1, 2, 3, 4)}

    def field(self, direction, label: TransitionLabel, guess: float, max_iter: int = 50,
              window=(50.0, 800.0)) -> float:
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
        unit = self.zeeman * np.einsum("a,aij->ij", d, self.s_ops)
        basis = lab_ms_basis(d)
        h0 = self.zfs[label.site]
        lo_ms, hi_ms = (-1, 0) if label.branch is Branch.MINUS else (0, 1)
        b = float(guess)
        for _ in range(max_iter):
            e, vecs = np.linalg.eigh(h0 + b * unit)
            w = np.abs(basis.conj().T @ vecs) ** 2
            ms = 1 - np.argmax(w, axis=0)
            ia = np.flatnonzero(ms == lo_ms)
            ib = np.flatnonzero(ms == hi_ms)
            if ia.size != 1 or ib.size != 1:
                break
            ia, ib = ia[0], ib[0]
            sgn = 1.0 if e[ib] >= e[ia] else -1.0
            g = sgn * (e[ib] - e[ia]) - self.f
            if abs(g) < FREQ_TOL_MHZ * 1e-2:
                return b
            va, vb = vecs[:, ia], vecs[:, ib]
            slope = sgn * float(np.real(vb.conj() @ unit @ vb - va.conj() @ unit @ va))
            if slope == 0:
                break
            b_new = b - float(np.clip(g / slope, -50.0, 50.0))
            b = b_new if b_new > 0 else b / 2
        lines = [ln for ln in resonance_fields(self.sys, self.mw_freq, d, window, label.site)
                 if ln.label == label]
        if not lines:
            return float("nan")
        return min(lines, key=lambda ln: abs(ln.field - guess)).field


def line_field(sys: SpinSystem, mw_freq: float, direction, label: TransitionLabel,
               guess: float, window=(50.0, 800.0)) -> float:
    """Resonance field of one labelled line, Newton-refined from ``guess``.

    Uses the electron-only Hamiltonian and the Hellmann-Feynman slope; falls
    back to the bracketing search (nearest matching root) if Newton fails.
    """
    return ElectronLineModel(sys, mw_freq).field(direction, label, guess, window=window)
