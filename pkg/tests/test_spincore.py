import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nvespin import constants as C
from nvespin.errors import DimensionCap, NotHermitian
from nvespin.spincore import (
    AxialTensor,
    EulerAngles,
    FieldVector,
    NucleusSpec,
    SpinQuantum,
    SpinSystem,
    angle_between,
    build_hamiltonian,
    eigensolve,
    euler_matrix,
    nv_site_axes,
    quadrupole_tensor,
    rotate_field,
    spin_matrices,
    tensor_matrix,
    zfs_tensor,
)
from oracles import jacobi_eigvalsh

angles = st.floats(-360, 360, allow_nan=False)
unit_vectors = st.tuples(*[st.floats(-1, 1, allow_nan=False)] * 3).filter(
    lambda v: np.linalg.norm(v) > 0.1)


# --- spin matrices --------------------------------------------------------


@pytest.mark.parametrize("mult", [2, 3, 4, 5])
def test_spin_algebra(mult):
    sx, sy, sz = spin_matrices(mult)
    s = (mult - 1) / 2
    assert np.allclose(sx @ sy - sy @ sx, 1j * sz, atol=1e-12)
    assert np.allclose(sy @ sz - sz @ sy, 1j * sx, atol=1e-12)
    assert np.allclose(sx @ sx + sy @ sy + sz @ sz, s * (s + 1) * np.eye(mult), atol=1e-12)


def test_spin_half_and_one_matrices():
    sx, sy, sz = spin_matrices(2)
    assert np.allclose(sz, np.diag([0.5, -0.5]))
    assert np.allclose(sx, [[0, 0.5], [0.5, 0]])
    sx, _, sz = spin_matrices(3)
    assert np.allclose(sz, np.diag([1, 0, -1]))
    assert np.isclose(sx[0, 1], 1 / np.sqrt(2))
    sx, sy, sz = spin_matrices(SpinQuantum(3))
    assert np.allclose(sx @ sx + sy @ sy + sz @ sz, 2 * np.eye(3))


def test_spin_quantum_rejects_bad_multiplicity():
    with pytest.raises(ValueError):
        SpinQuantum(1)
    with pytest.raises(ValueError):
        SpinQuantum(2.5)
    assert SpinQuantum.from_spin(1.5).multiplicity == 4


# --- tensors --------------------------------------------------------------


def test_tensor_examples():
    t = AxialTensor(-2.19, -2.65, (1, 1, 1))
    assert np.isclose(np.trace(tensor_matrix(t)), -7.49)
    assert np.allclose(tensor_matrix(AxialTensor(1.3, 1.3, (0.2, -1, 3))), 1.3 * np.eye(3))
    assert np.allclose(tensor_matrix(AxialTensor(1, 0, (0, 0, 1))), np.diag([0, 0, 1]))


@given(st.floats(-50, 50), st.floats(-50, 50), unit_vectors)
def test_tensor_eigenstructure(par, perp, axis):
    t = AxialTensor(par, perp, axis)
    m = tensor_matrix(t)
    assert np.max(np.abs(m - m.T)) < 1e-12
    assert abs(np.linalg.norm(t.axis) - 1) < 1e-12
    assert np.allclose(np.sort(np.linalg.eigvalsh(m)), np.sort([par, perp, perp]), atol=1e-10)
    assert np.allclose(m @ np.asarray(t.axis), par * np.asarray(t.axis), atol=1e-10)


def test_zfs_and_quadrupole_are_traceless():
    assert abs(zfs_tensor(2873.0).trace) < 1e-9
    q = quadrupole_tensor(-4.95)
    assert abs(q.trace) < 1e-12
    assert np.isclose(q.parallel, 2 * -4.95 / 3)
    # coefficient of Iz'^2 in I.Q.I is P_par
    nuc = NucleusSpec.nitrogen14(p_par=-4.95, axis=(0, 0, 1))
    assert np.isclose(nuc.p_par, -4.95)
    _, _, iz = spin_matrices(3)
    qm = tensor_matrix(nuc.quadrupole)
    iq = sum(qm[a, b] * spin_matrices(3)[a] @ spin_matrices(3)[b] for a in range(3) for b in range(3))
    assert np.allclose(iq, -4.95 * (iz @ iz - 2 / 3 * np.eye(3)))


def test_nucleus_derived_quantities():
    n = NucleusSpec.nitrogen14(-2.19, -2.65)
    assert np.isclose(n.a_iso, (-2.19 - 5.30) / 3)
    assert np.isclose(n.anisotropy, (-2.19 + 2.65) / 3)
    with pytest.raises(ValueError):
        NucleusSpec(SpinQuantum(2), 1.4, AxialTensor(1, 1), quadrupole_tensor(1.0))


# --- Hamiltonian ----------------------------------------------------------


def test_zero_field_zfs_levels():
    sol = eigensolve(build_hamiltonian(SpinSystem.nv(), FieldVector(0.0)))
    assert np.allclose(sol.eigenvalues, [-2 * 2873 / 3, 2873 / 3, 2873 / 3], atol=1e-9)


def test_pure_zeeman_splitting():
    sys = SpinSystem.nv(d_mhz=0.0)
    b = 9600.0 / (2.0030 * C.MU_B_MHZ_PER_MT)
    ev = eigensolve(build_hamiltonian(sys, FieldVector(b, (0, 0, 1)))).eigenvalues
    assert np.allclose(np.diff(ev), 9600.0, rtol=1e-12)
    assert abs(b - 342.4366) < 1e-3


def test_dimension_and_cap(nv14):
    h = build_hamiltonian(nv14, FieldVector(350.0, (0, 0, 1)))
    assert h.dimension == 9 == nv14.dimension
    assert h.hermiticity_residual() < 1e-9 * h.norm
    big = SpinSystem.nv([NucleusSpec.nitrogen14()] * 3)
    with pytest.raises(DimensionCap):
        build_hamiltonian(big, FieldVector(350.0))


@given(st.floats(0, 600), unit_vectors, st.floats(-10, 10), st.floats(-10, 10), st.floats(-6, 6))
def test_hamiltonian_invariants(b, direction, apar, aperp, p):
    sys = SpinSystem.nv([NucleusSpec.nitrogen14(apar, aperp, p),
                         NucleusSpec.carbon13(apar / 2, aperp, (1, -1, 1))])
    h = build_hamiltonian(sys, FieldVector(b, direction))
    scale = max(h.norm, 1.0)
    assert h.hermiticity_residual() < 1e-9 * scale
    for name in ("zfs", "quadrupole_0"):
        assert abs(np.trace(h.terms[name])) < 1e-9 * scale
    sol = eigensolve(h)
    assert np.all(np.diff(sol.eigenvalues) >= 0)
    assert abs(sol.eigenvalues.sum() - np.trace(h.entries).real) < 1e-7 * scale
    v = sol.eigenvectors
    assert np.max(np.abs(h.entries @ v - v * sol.eigenvalues)) < 1e-7 * scale
    assert np.max(np.abs(v.conj().T @ v - np.eye(v.shape[0]))) < 1e-9


@given(st.floats(1, 600))
def test_zeeman_linearity(b):
    sys = SpinSystem.nv(d_mhz=0.0)
    ev = eigensolve(build_hamiltonian(sys, FieldVector(b, (0.3, 0.1, 0.9)))).eigenvalues
    slope = (ev[-1] - ev[0]) / 2 / b
    assert abs(slope / (2.0030 * C.MU_B_MHZ_PER_MT) - 1) < 1e-10


@given(st.floats(0, 2 * np.pi), st.floats(0, np.pi), st.floats(10, 600))
def test_eigenvalues_depend_only_on_angle_to_zfs_axis(phi, theta, b):
    axis = np.ones(3) / np.sqrt(3)
    u = np.cross(axis, [1, 0, 0])
    u /= np.linalg.norm(u)
    w = np.cross(axis, u)
    d1 = np.cos(theta) * axis + np.sin(theta) * u
    d2 = np.cos(theta) * axis + np.sin(theta) * (np.cos(phi) * u + np.sin(phi) * w)
    sys = SpinSystem.nv()
    e1 = eigensolve(build_hamiltonian(sys, FieldVector(b, d1))).eigenvalues
    e2 = eigensolve(build_hamiltonian(sys, FieldVector(b, d2))).eigenvalues
    assert np.allclose(e1, e2, atol=1e-9)


def test_nucleus_order_does_not_change_spectrum():
    n = NucleusSpec.nitrogen14()
    c = NucleusSpec.carbon13(3.36, 2.46, (-1, 1, 1))
    fv = FieldVector(330.0, (0.2, 0.5, 0.8))
    e1 = eigensolve(build_hamiltonian(SpinSystem.nv([n, c]), fv)).eigenvalues
    e2 = eigensolve(build_hamiltonian(SpinSystem.nv([c, n]), fv)).eigenvalues
    assert np.allclose(e1, e2, atol=1e-9)


# --- eigensolver ----------------------------------------------------------


def test_eigensolve_diagonal_and_phases():
    sol = eigensolve(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(sol.eigenvalues, [1, 2, 3])
    assert np.allclose(np.abs(sol.eigenvectors), [[0, 0, 1], [1, 0, 0], [0, 1, 0]])
    rng = np.random.default_rng(1)
    a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    h = a + a.conj().T
    v = eigensolve(h).eigenvectors
    piv = v[np.argmax(np.abs(v), axis=0), np.arange(6)]
    assert np.allclose(piv.imag, 0, atol=1e-12) and np.all(piv.real > 0)
    assert np.allclose(eigensolve(h).eigenvectors, v)


def test_eigensolve_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        eigensolve(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_nv_hamiltonian_matches_jacobi_oracle(nv14):
    h = build_hamiltonian(nv14, FieldVector(350.0, (0, 0, 1)))
    assert np.allclose(eigensolve(h).eigenvalues, jacobi_eigvalsh(h.entries), atol=1e-6)


# --- geometry -------------------------------------------------------------


def test_site_axes_geometry():
    axes = nv_site_axes()
    for i in range(4):
        assert abs(np.linalg.norm(axes[i]) - 1) < 1e-15
        for j in range(i + 1, 4):
            assert np.isclose(axes[i] @ axes[j], -1 / 3)
    n110 = np.array([1, 1, 0]) / np.sqrt(2)
    assert np.isclose(angle_between(n110, axes[0]), 35.26, atol=0.01)
    assert np.isclose(angle_between(n110, axes[2]), 90.0)


@given(angles, angles, angles)
def test_euler_matrix_is_proper_rotation(a, b, g):
    r = euler_matrix(EulerAngles(a, b, g))
    assert np.allclose(r @ r.T, np.eye(3), atol=1e-12)
    assert abs(np.linalg.det(r) - 1) < 1e-12


def test_rotate_field_examples():
    n110 = np.array([1, 1, 0]) / np.sqrt(2)
    assert np.allclose(rotate_field(n110, EulerAngles()), n110)
    assert np.allclose(rotate_field((0, 0, 1), EulerAngles(0, 90, 0)), (1, 0, 0), atol=1e-15)
    # the ZYZ product is a rotation by arccos of this value; see the notes on the quoted angle
    assert np.isclose(angle_between(rotate_field(n110, EulerAngles(2, 2.2, 0)), n110), 2.550, atol=1e-3)
    with pytest.raises(ValueError):
        rotate_field((1, 1, 0), EulerAngles())
