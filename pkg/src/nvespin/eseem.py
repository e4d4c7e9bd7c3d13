"""Two-pulse ESEEM of a selected NV transition.

The full Hamiltonian is block-diagonalised by electron eigenstate: every exact
eigenstate is assigned to the T+, T0 or T- manifold it mostly lives in, and
its component inside that manifold defines a nuclear-space vector. The
effective nuclear Hamiltonian of a manifold is rebuilt from those vectors and
the exact eigenvalues, so nuclear frequencies agree with the full-matrix
diagonalisation to round-off.

Echo modulation for ideal, selective pulses on the manifold pair (a, b)::

    V(tau) = Re Tr[exp(-i Hb tau) exp(-i Ha tau) exp(i Hb tau) exp(i Ha tau)] / n

Times are microseconds, frequencies MHz.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import AmbiguousManifold
from .spincore import (
    DEFAULT_DIMENSION_CAP,
    AxialTensor,
    FieldVector,
    SpinSystem,
    build_hamiltonian,
    electron_hamiltonian,
    ms_weights,
    nv_site_axes,
    system_for_site,
)

MANIFOLD_WEIGHT_THRESHOLD = 0.9
DEFAULT_TAU_STEP_US = 0.004
DEFAULT_TAU_POINTS = 4096


class ManifoldPair(str, enum.Enum):
    MINUS_ZERO = "minus_zero"  # T- <-> T0
    ZERO_PLUS = "zero_plus"  # T0 <-> T+

    @property
    def ms(self) -> tuple:
        return (-1, 0) if self is ManifoldPair.MINUS_ZERO else (0, 1)


@dataclass(frozen=True)
class TransitionSelection:
    manifold_pair: ManifoldPair = ManifoldPair.MINUS_ZERO
    site: int = 1

    def __post_init__(self):
        object.__setattr__(self, "manifold_pair", ManifoldPair(self.manifold_pair))
        if self.site not in (1, 2, 3, 4):
            raise ValueError(f"site must be 1-4, got {self.site}")

    @property
    def site_axis(self) -> np.ndarray:
        return nv_site_axes()[self.site - 1]


@dataclass
class EseemTrace:
    tau: np.ndarray  # us
    v: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.tau = np.asarray(self.tau, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.tau.shape != self.v.shape:
            raise ValueError("tau and v must have the same length")

    @property
    def step(self) -> float:
        return float(self.tau[1] - self.tau[0]) if self.tau.size > 1 else 0.0

    def is_uniform(self, tol: float = 1e-9) -> bool:
        if self.tau.size < 2:
            return True
        d = np.diff(self.tau)
        return bool(np.all(d > 0) and np.max(np.abs(d - d[0])) <= tol * max(1.0, abs(d[0])))


@dataclass(frozen=True)
class NuclearFrequencies:
    """Sorted nuclear transition frequencies (MHz) per electron manifold."""

    by_manifold: dict

    def __getitem__(self, ms: int) -> np.ndarray:
        return self.by_manifold[ms]

    @property
    def manifolds(self) -> tuple:
        return tuple(sorted(self.by_manifold))

    def flat(self) -> list:
        """(ms, index, freq) rows, manifolds in ascending m_S."""
        return [(ms, i, float(f)) for ms in self.manifolds for i, f in enumerate(self.by_manifold[ms])]


@dataclass(frozen=True)
class ModulationDepthReport:
    depth: float
    definition: str = "(max - min) / max of the normalized trace over the simulated window"


def default_tau_grid(step: float = DEFAULT_TAU_STEP_US, points: int = DEFAULT_TAU_POINTS,
                     start: float = 0.0) -> np.ndarray:
    return start + step * np.arange(points)


# ---------------------------------------------------------------------------
# Manifold partitioning
# ---------------------------------------------------------------------------


def electron_states(sys: SpinSystem, field: FieldVector,
                    threshold: float = MANIFOLD_WEIGHT_THRESHOLD):
    """Electron eigenstates of Zeeman + ZFS labelled by laboratory m_S.

    Returns ``{ms: (energy, vector)}``. Raises AmbiguousManifold when a state
    has less than ``threshold`` weight on a single |m_S>.
    """
    if field.magnitude == 0:
        raise AmbiguousManifold("laboratory m_S is undefined at zero field")
    w, v = np.linalg.eigh(electron_hamiltonian(sys, field))
    weights = ms_weights(v, field.direction)  # rows m=+1,0,-1
    out = {}
    for k in range(3):
        row = int(np.argmax(weights[:, k]))
        if weights[row, k] < threshold:
            raise AmbiguousManifold(
                f"electron state {k} has max m_S weight {weights[row, k]:.3f} < {threshold}")
        ms = 1 - row
        if ms in out:
            raise AmbiguousManifold(f"two electron states share m_S={ms}")
        out[ms] = (float(w[k]), v[:, k])
    return out


def manifold_blocks(sys: SpinSystem, field: FieldVector,
                    threshold: float = MANIFOLD_WEIGHT_THRESHOLD,
                    dimension_cap: int = DEFAULT_DIMENSION_CAP):
    """Exact eigenpairs of the full Hamiltonian grouped by electron manifold.

    Returns ``{ms: (energies, U)}`` with ``U`` the n x n unitary whose columns
    are the nuclear parts of the exact eigenstates in the common nuclear
    product basis.
    """
    elec = electron_states(sys, field, threshold)
    n = sys.nuclear_dim
    order = (1, 0, -1)
    psi = np.stack([elec[ms][1] for ms in order], axis=1)
    w_mat = np.kron(psi, np.eye(n))
    h = build_hamiltonian(sys, field, dimension_cap).entries
    hp = w_mat.conj().T @ h @ w_mat
    hp = 0.5 * (hp + hp.conj().T)
    energies, vecs = np.linalg.eigh(hp)
    blocks = vecs.reshape(3, n, 3 * n)
    weights = np.sum(np.abs(blocks) ** 2, axis=1)  # (3, 3n)
    owner = np.argmax(weights, axis=0)
    out = {}
    for b, ms in enumerate(order):
        cols = np.flatnonzero(owner == b)
        if cols.size != n:
            raise AmbiguousManifold(f"manifold m_S={ms} received {cols.size} states, expected {n}")
        if np.min(weights[b, cols]) < threshold:
            raise AmbiguousManifold(f"manifold m_S={ms} is strongly mixed with its neighbours")
        x = blocks[b][:, cols]
        p, _, qh = np.linalg.svd(x)
        out[ms] = (energies[cols], p @ qh)
    return out


def _pair_blocks(sys, field, selection):
    site_sys = system_for_site(sys, selection.site)
    blocks = manifold_blocks(site_sys, field)
    a, b = selection.manifold_pair.ms
    return blocks[a], blocks[b]


def sub_hamiltonians(sys: SpinSystem, field: FieldVector, selection: TransitionSelection):
    """Effective nuclear Hamiltonians (H_a, H_b) of the selected manifolds (MHz).

    The common energy offset of each manifold is removed.
    """
    out = []
    for energies, u in _pair_blocks(sys, field, selection):
        e = energies - energies.mean()
        out.append((u * e[None, :]) @ u.conj().T)
    return tuple(out)


def overlap_matrix(sys: SpinSystem, field: FieldVector, selection: TransitionSelection) -> np.ndarray:
    """<a_i|b_k> between nuclear eigenstates of the two selected manifolds."""
    (_, ua), (_, ub) = _pair_blocks(sys, field, selection)
    return ua.conj().T @ ub


def nuclear_frequencies(sys: SpinSystem, field: FieldVector,
                        selection: TransitionSelection) -> NuclearFrequencies:
    (ea, _), (eb, _) = _pair_blocks(sys, field, selection)
    a, b = selection.manifold_pair.ms
    return NuclearFrequencies({a: _pairwise(ea), b: _pairwise(eb)})


def _pairwise(e: np.ndarray) -> np.ndarray:
    e = np.sort(e)
    i, j = np.triu_indices(e.size, k=1)
    return np.sort(e[j] - e[i])


# ---------------------------------------------------------------------------
# Time domain
# ---------------------------------------------------------------------------


def _echo_from_blocks(ea, ua, eb, ub, tau, chunk=1024) -> np.ndarray:
    n = ea.size
    m = ua.conj().T @ ub
    alpha = 2 * np.pi * (ea - ea.mean())
    beta = 2 * np.pi * (eb - eb.mean())
    out = np.empty(tau.size, dtype=complex)
    for s in range(0, tau.size, chunk):
        t = tau[s:s + chunk]
        # Hb propagator in the a-eigenbasis: M diag(exp(-i beta t)) M^dagger
        pb = np.einsum("ik,tk,jk->tij", m, np.exp(-1j * np.outer(t, beta)), m.conj(), optimize=True)
        pa = np.exp(1j * np.subtract.outer(alpha, alpha)[None, :, :] * t[:, None, None])
        out[s:s + chunk] = np.sum(np.abs(pb) ** 2 * pa, axis=(1, 2)) / n
    return out


def eseem_time_domain(sys: SpinSystem, field: FieldVector, selection: TransitionSelection,
                      tau_grid=None, return_complex: bool = False) -> EseemTrace:
    """Ideal-pulse two-pulse ESEEM trace on the selected transition."""
    tau = default_tau_grid() if tau_grid is None else np.asarray(tau_grid, dtype=float)
    (ea, ua), (eb, ub) = _pair_blocks(sys, field, selection)
    v = _echo_from_blocks(ea, ua, eb, ub, tau)
    meta = {
        "field_mT": field.magnitude,
        "direction": list(field.direction),
        "manifold_pair": selection.manifold_pair.value,
        "site": selection.site,
    }
    trace = EseemTrace(tau, v.real, meta)
    if return_complex:
        return trace, v
    return trace


def modulation_depth(trace: EseemTrace) -> ModulationDepthReport:
    vmax = float(np.max(trace.v))
    return ModulationDepthReport((vmax - float(np.min(trace.v))) / vmax)


def multi_nucleus_trace(sys: SpinSystem, field: FieldVector, selection: TransitionSelection,
                        tau_grid=None, mode: str = "joint") -> EseemTrace:
    """ESEEM of several nuclei, exact (``joint``) or by the product rule."""
    if mode == "joint":
        return eseem_time_domain(sys, field, selection, tau_grid)
    if mode != "product":
        raise ValueError(f"mode must be 'joint' or 'product', got {mode!r}")
    tau = default_tau_grid() if tau_grid is None else np.asarray(tau_grid, dtype=float)
    if not sys.nuclei:
        return eseem_time_domain(sys, field, selection, tau)
    v = np.ones_like(tau)
    for nuc in sys.nuclei:
        v = v * eseem_time_domain(sys.with_nuclei([nuc]), field, selection, tau).v
    trace = eseem_time_domain(sys.with_nuclei(sys.nuclei[:1]), field, selection, tau[:1])
    trace.metadata["mode"] = "product"
    return EseemTrace(tau, v, trace.metadata)


def cancellation_scan(sys: SpinSystem, direction, selection: TransitionSelection, fields,
                      tau_grid=None, skip_ambiguous: bool = True):
    """Modulation depth against field magnitude along a fixed direction.

    Returns (rows, best) with rows ``(B_mT, depth)``; depth is NaN where the
    manifolds cannot be identified and ``skip_ambiguous`` is set.
    """
    rows = []
    for b in np.asarray(fields, dtype=float):
        try:
            tr = eseem_time_domain(sys, FieldVector(float(b), direction), selection, tau_grid)
            depth = modulation_depth(tr).depth
        except AmbiguousManifold:
            if not skip_ambiguous:
                raise
            depth = float("nan")
        rows.append((float(b), depth))
    depths = np.array([d for _, d in rows])
    best = None
    if np.any(np.isfinite(depths)):
        k = int(np.nanargmax(depths))
        best = rows[k]
    return rows, best


def _perturbed_system(sys: SpinSystem, f_a_par, f_a_perp, f_p) -> SpinSystem:
    nuclei = []
    for nuc, a1, a2, p in zip(sys.nuclei, f_a_par, f_a_perp, f_p):
        hf = AxialTensor(nuc.hyperfine.parallel * a1, nuc.hyperfine.perpendicular * a2, nuc.hyperfine.axis)
        q = nuc.quadrupole.scaled(p) if nuc.quadrupole is not None else None
        nuclei.append(replace(nuc, hyperfine=hf, quadrupole=q))
    return sys.with_nuclei(nuclei)


def damped_ensemble_trace(sys: SpinSystem, field: FieldVector, selection: TransitionSelection,
                          tau_grid=None, frac_a: float = 0.0, frac_q: float = 0.0,
                          n_samples: int = 200, seed: int = 0) -> EseemTrace:
    """Average of ESEEM traces over Gaussian-distributed couplings.

    A_par and A_perp are drawn independently with relative width ``frac_a``;
    P_par with relative width ``frac_q``. With both fractions zero this is
    exactly :func:`eseem_time_domain`.
    """
    if frac_a < 0 or frac_q < 0:
        raise ValueError("fractions must be non-negative")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    tau = default_tau_grid() if tau_grid is None else np.asarray(tau_grid, dtype=float)
    if frac_a == 0 and frac_q == 0:
        return eseem_time_domain(sys, field, selection, tau)
    rng = np.random.default_rng(seed)
    k = len(sys.nuclei)
    acc = np.zeros_like(tau)
    for _ in range(n_samples):
        f1 = 1 + frac_a * rng.standard_normal(k)
        f2 = 1 + frac_a * rng.standard_normal(k)
        f3 = 1 + frac_q * rng.standard_normal(k)
        acc += eseem_time_domain(_perturbed_system(sys, f1, f2, f3), field, selection, tau).v
    meta = {"field_mT": field.magnitude, "direction": list(field.direction),
            "manifold_pair": selection.manifold_pair.value, "site": selection.site,
            "frac_a": frac_a, "frac_q": frac_q, "n_samples": n_samples, "seed": seed}
    return EseemTrace(tau, acc / n_samples, meta)
