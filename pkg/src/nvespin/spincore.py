"""Laboratory-frame spin Hamiltonian of an S=1 defect with coupled nuclei.

All Hamiltonian entries are frequencies in MHz, fields are in mT and
directions are unit vectors in the cubic crystal frame. The product basis is
ordered electron first, then nuclei in list order; every single-spin factor
is in the |m=+S>, ..., |m=-S> order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import constants as C
from .errors import DimensionCap, NoConvergence, NotHermitian

DEFAULT_DIMENSION_CAP = 64
_UNIT_TOL = 1e-12


def _unit(v, name="vector") -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(3)
    n = np.linalg.norm(v)
    if n == 0.0 or not np.isfinite(n):
        raise ValueError(f"{name} must be a finite non-zero 3-vector")
    return v / n


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpinQuantum:
    multiplicity: int

    def __post_init__(self):
        if int(self.multiplicity) != self.multiplicity or self.multiplicity < 2:
            raise ValueError(f"multiplicity must be an integer >= 2, got {self.multiplicity}")

    @property
    def spin(self) -> float:
        return (self.multiplicity - 1) / 2.0

    @classmethod
    def from_spin(cls, s: float) -> "SpinQuantum":
        return cls(int(round(2 * s + 1)))


@dataclass(frozen=True)
class AxialTensor:
    """Axially symmetric 3x3 interaction tensor (MHz).

    ``parallel`` is the principal value along ``axis``; the two principal
    values perpendicular to it equal ``perpendicular``.
    """

    parallel: float
    perpendicular: float
    axis: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "axis", tuple(float(x) for x in _unit(self.axis, "axis")))

    def matrix(self) -> np.ndarray:
        return tensor_matrix(self)

    @property
    def trace(self) -> float:
        return self.parallel + 2.0 * self.perpendicular

    def rotated(self, rot: np.ndarray) -> "AxialTensor":
        return replace(self, axis=tuple(np.asarray(rot) @ np.asarray(self.axis)))

    def scaled(self, factor_par: float, factor_perp: float | None = None) -> "AxialTensor":
        if factor_perp is None:
            factor_perp = factor_par
        return replace(self, parallel=self.parallel * factor_par,
                       perpendicular=self.perpendicular * factor_perp)


def zfs_tensor(d_mhz: float, axis=(1, 1, 1)) -> AxialTensor:
    """Traceless axial ZFS tensor giving S.D.S = D (Sz'^2 - S(S+1)/3)."""
    return AxialTensor(2.0 * d_mhz / 3.0, -d_mhz / 3.0, axis)


def quadrupole_tensor(p_par: float, axis=(1, 1, 1)) -> AxialTensor:
    """Traceless axial quadrupole tensor for an I=1 nucleus.

    ``p_par`` is the coefficient of (Iz'^2 - I(I+1)/3), i.e. 3 e^2 q Q / 4h,
    so the tensor principal values are (2P/3, -P/3, -P/3).
    """
    return AxialTensor(2.0 * p_par / 3.0, -p_par / 3.0, axis)


@dataclass(frozen=True)
class NucleusSpec:
    spin: SpinQuantum
    g_n: float
    hyperfine: AxialTensor
    quadrupole: AxialTensor | None = None
    label: str = ""

    def __post_init__(self):
        if self.quadrupole is not None and self.spin.spin < 1:
            raise ValueError(f"nucleus {self.label!r}: quadrupole tensor requires I >= 1")

    @property
    def a_iso(self) -> float:
        return (self.hyperfine.parallel + 2.0 * self.hyperfine.perpendicular) / 3.0

    @property
    def anisotropy(self) -> float:
        """Anisotropic hyperfine part T = (A_par - A_perp)/3."""
        return (self.hyperfine.parallel - self.hyperfine.perpendicular) / 3.0

    @property
    def p_par(self) -> float:
        """Quadrupole coupling P_par (0 when absent)."""
        return 0.0 if self.quadrupole is None else 1.5 * self.quadrupole.parallel

    def rotated(self, rot) -> "NucleusSpec":
        q = None if self.quadrupole is None else self.quadrupole.rotated(rot)
        return replace(self, hyperfine=self.hyperfine.rotated(rot), quadrupole=q)

    @classmethod
    def nitrogen14(cls, a_par=C.N14_A_PAR, a_perp=C.N14_A_PERP, p_par=C.N14_P_PAR,
                   axis=(1, 1, 1), label="14N") -> "NucleusSpec":
        return cls(SpinQuantum(3), C.G_N["14N"], AxialTensor(a_par, a_perp, axis),
                   quadrupole_tensor(p_par, axis), label)

    @classmethod
    def carbon13(cls, a_par, a_perp, axis, label="13C") -> "NucleusSpec":
        return cls(SpinQuantum(2), C.G_N["13C"], AxialTensor(a_par, a_perp, axis), None, label)


@dataclass(frozen=True)
class SpinSystem:
    g_e: float = C.G_NV
    zfs: AxialTensor = field(default_factory=lambda: zfs_tensor(C.D_NV_MHZ))
    nuclei: tuple = ()

    def __post_init__(self):
        if not self.g_e > 0:
            raise ValueError("g_e must be positive")
        object.__setattr__(self, "nuclei", tuple(self.nuclei))

    @property
    def d(self) -> float:
        return 1.5 * self.zfs.parallel

    @property
    def nuclear_dims(self) -> tuple:
        return tuple(n.spin.multiplicity for n in self.nuclei)

    @property
    def nuclear_dim(self) -> int:
        return int(np.prod(self.nuclear_dims, dtype=int)) if self.nuclei else 1

    @property
    def dimension(self) -> int:
        return 3 * self.nuclear_dim

    def electron_only(self) -> "SpinSystem":
        return replace(self, nuclei=())

    def with_nuclei(self, nuclei: Sequence[NucleusSpec]) -> "SpinSystem":
        return replace(self, nuclei=tuple(nuclei))

    def rotated(self, rot) -> "SpinSystem":
        """Rigidly rotate the defect (ZFS axis and every nuclear tensor)."""
        return replace(self, zfs=self.zfs.rotated(rot),
                       nuclei=tuple(n.rotated(rot) for n in self.nuclei))

    @classmethod
    def nv(cls, nuclei=(), d_mhz=C.D_NV_MHZ, g_e=C.G_NV, axis=(1, 1, 1)) -> "SpinSystem":
        return cls(g_e, zfs_tensor(d_mhz, axis), tuple(nuclei))


@dataclass(frozen=True)
class FieldVector:
    magnitude: float  # mT
    direction: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if not self.magnitude >= 0:
            raise ValueError("field magnitude must be >= 0")
        object.__setattr__(self, "direction", tuple(float(x) for x in _unit(self.direction, "direction")))

    @property
    def vector(self) -> np.ndarray:
        return self.magnitude * np.asarray(self.direction)


@dataclass(frozen=True)
class EulerAngles:
    """ZYZ Euler angles in degrees."""

    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0

    def matrix(self) -> np.ndarray:
        return euler_matrix(self)

    def as_tuple(self) -> tuple:
        return (self.alpha, self.beta, self.gamma)


@dataclass(frozen=True)
class HamiltonianMatrix:
    entries: np.ndarray
    terms: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    def hermiticity_residual(self) -> float:
        h = self.entries
        return float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.entries, 2)) if self.entries.size else 0.0


@dataclass(frozen=True)
class EigenSolution:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _spin_matrices_cached(multiplicity: int):
    s = (multiplicity - 1) / 2.0
    m = s - np.arange(multiplicity)  # +S ... -S
    # <m+1|S+|m> = sqrt(s(s+1) - m(m+1))
    splus = np.zeros((multiplicity, multiplicity), dtype=complex)
    for k in range(1, multiplicity):
        splus[k - 1, k] = np.sqrt(s * (s + 1) - m[k] * (m[k] + 1))
    sminus = splus.conj().T
    sx = 0.5 * (splus + sminus)
    sy = -0.5j * (splus - sminus)
    sz = np.diag(m).astype(complex)
    for a in (sx, sy, sz):
        a.setflags(write=False)
    return sx, sy, sz


def spin_matrices(spin: SpinQuantum | int):
    """Return (Sx, Sy, Sz) for a spin of the given multiplicity."""
    mult = spin.multiplicity if isinstance(spin, SpinQuantum) else int(spin)
    SpinQuantum(mult)
    return tuple(a.copy() for a in _spin_matrices_cached(mult))


def tensor_matrix(t: AxialTensor) -> np.ndarray:
    """R diag(perp, perp, par) R^T written as perp*1 + (par - perp) n n^T."""
    n = np.asarray(t.axis)
    return t.perpendicular * np.eye(3) + (t.parallel - t.perpendicular) * np.outer(n, n)


def _embedded_operators(dims: Sequence[int], which: int):
    """Spin vector operator of factor ``which`` embedded in the product space."""
    ops = _spin_matrices_cached(dims[which])
    before = int(np.prod(dims[:which], dtype=int))
    after = int(np.prod(dims[which + 1:], dtype=int))
    eye_b, eye_a = np.eye(before), np.eye(after)
    return np.stack([np.kron(np.kron(eye_b, op), eye_a) for op in ops])


def _bilinear(tensor: np.ndarray, left: np.ndarray, right: np.ndarray) -> np.ndarray:
    # sum_ab T_ab L_a R_b
    return np.einsum("ab,aij,bjk->ik", tensor, left, right)


def build_hamiltonian(sys: SpinSystem, field: FieldVector,
                      dimension_cap: int = DEFAULT_DIMENSION_CAP) -> HamiltonianMatrix:
    """Full laboratory-frame Hamiltonian in MHz.

    H = muB g B.S + S.D.S + sum_k (S.A_k.I_k + I_k.Q_k.I_k - g_nk muN B.I_k)
    """
    dims = (3,) + sys.nuclear_dims
    dim = int(np.prod(dims))
    if dim > dimension_cap:
        raise DimensionCap(f"Hilbert dimension {dim} exceeds cap {dimension_cap}")
    b = field.vector
    s_ops = _embedded_operators(dims, 0)
    terms = {
        "electron_zeeman": sys.g_e * C.MU_B_MHZ_PER_MT * np.einsum("a,aij->ij", b, s_ops),
        "zfs": _bilinear(tensor_matrix(sys.zfs), s_ops, s_ops),
    }
    for k, nuc in enumerate(sys.nuclei):
        i_ops = _embedded_operators(dims, k + 1)
        terms[f"hyperfine_{k}"] = _bilinear(tensor_matrix(nuc.hyperfine), s_ops, i_ops)
        if nuc.quadrupole is not None:
            terms[f"quadrupole_{k}"] = _bilinear(tensor_matrix(nuc.quadrupole), i_ops, i_ops)
        terms[f"nuclear_zeeman_{k}"] = -nuc.g_n * C.MU_N_MHZ_PER_MT * np.einsum("a,aij->ij", b, i_ops)
    h = sum(terms.values())
    return HamiltonianMatrix(h, terms)


def electron_hamiltonian(sys: SpinSystem, field: FieldVector) -> np.ndarray:
    """3x3 electron Zeeman + ZFS Hamiltonian (MHz)."""
    sx, sy, sz = _spin_matrices_cached(3)
    s_ops = np.stack([sx, sy, sz])
    return (sys.g_e * C.MU_B_MHZ_PER_MT * np.einsum("a,aij->ij", field.vector, s_ops)
            + _bilinear(tensor_matrix(sys.zfs), s_ops, s_ops))


# ---------------------------------------------------------------------------
# Diagonalization
# ---------------------------------------------------------------------------


def fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude component of every column real and positive."""
    v = np.array(vectors, dtype=complex, copy=True)
    if v.size == 0:
        return v
    mags = np.abs(v)
    # ties broken toward the lowest index, with a small tolerance so that
    # round-off cannot flip the choice between equal-magnitude components
    top = mags.max(axis=0)
    idx = np.argmax(mags >= top[None, :] * (1 - 1e-9), axis=0)
    pivots = v[idx, np.arange(v.shape[1])]
    return v * (np.abs(pivots) / pivots)[None, :]


def eigensolve(h, hermitian_tol: float = 1e-9) -> EigenSolution:
    """Ascending eigenvalues and phase-fixed orthonormal eigenvectors.

    Raises
    ------
    NotHermitian
        If max|H - H^dagger| exceeds ``hermitian_tol * ||H||``.
    NoConvergence
        If LAPACK fails to converge.
    """
    mat = h.entries if isinstance(h, HamiltonianMatrix) else np.asarray(h)
    mat = np.asarray(mat, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("eigensolve needs a square matrix")
    scale = max(float(np.linalg.norm(mat, 2)) if mat.size else 0.0, 1e-300)
    resid = float(np.max(np.abs(mat - mat.conj().T))) if mat.size else 0.0
    if resid > hermitian_tol * scale:
        raise NotHermitian(f"Hermiticity residual {resid:.3e} exceeds {hermitian_tol:g}*||H||")
    herm = 0.5 * (mat + mat.conj().T)
    try:
        w, v = np.linalg.eigh(herm)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NoConvergence(str(exc)) from exc
    return EigenSolution(w, fix_phases(v))


# ---------------------------------------------------------------------------
# Geometry
# ---------------------------------------------------------------------------

_SITE_AXES = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float) / np.sqrt(3)
# C2 rotations about x, y, z carry the site-1 defect onto sites 2, 3, 4
_SITE_ROTATIONS = np.array([np.eye(3), np.diag([1.0, -1, -1]), np.diag([-1.0, 1, -1]),
                            np.diag([-1.0, -1, 1])])


def nv_site_axes() -> list:
    """Unit vectors of the four NV orientations, sites 1-4."""
    return [a.copy() for a in _SITE_AXES]


def site_rotation(site: int) -> np.ndarray:
    """Proper rotation mapping the site-1 defect frame onto ``site``."""
    if site not in (1, 2, 3, 4):
        raise ValueError(f"site must be 1-4, got {site}")
    return _SITE_ROTATIONS[site - 1].copy()


def system_for_site(sys: SpinSystem, site: int) -> SpinSystem:
    """Copy of a site-1 system moved onto another crystal site."""
    return sys if site == 1 else sys.rotated(site_rotation(site))


def _rz(deg):
    c, s = np.cos(np.radians(deg)), np.sin(np.radians(deg))
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _ry(deg):
    c, s = np.cos(np.radians(deg)), np.sin(np.radians(deg))
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def euler_matrix(euler: EulerAngles) -> np.ndarray:
    """Rz(alpha) Ry(beta) Rz(gamma); gamma acts first on a vector."""
    return _rz(euler.alpha) @ _ry(euler.beta) @ _rz(euler.gamma)


def rotate_field(nominal, euler: EulerAngles) -> np.ndarray:
    """Apply the ZYZ misalignment to a nominal field direction."""
    n = np.asarray(nominal, dtype=float)
    if abs(np.linalg.norm(n) - 1.0) > 1e-9:
        raise ValueError("nominal direction must be a unit vector")
    out = euler_matrix(euler) @ n
    return out / np.linalg.norm(out)


def angle_between(u, v) -> float:
    """Angle in degrees between two vectors."""
    u, v = _unit(u), _unit(v)
    return float(np.degrees(np.arctan2(np.linalg.norm(np.cross(u, v)), np.dot(u, v))))


def lab_ms_basis(direction) -> np.ndarray:
    """Columns are the S=1 states |m=+1>, |0>, |-1> quantized along ``direction``."""
    b = _unit(direction)
    sx, sy, sz = _spin_matrices_cached(3)
    sb = b[0] * sx + b[1] * sy + b[2] * sz
    w, v = np.linalg.eigh(sb)
    return fix_phases(v[:, ::-1])


def ms_weights(electron_vectors: np.ndarray, direction) -> np.ndarray:
    """|<m|psi>|^2 for electron states (columns), rows ordered m=+1, 0, -1."""
    basis = lab_ms_basis(direction)
    return np.abs(basis.conj().T @ electron_vectors) ** 2
