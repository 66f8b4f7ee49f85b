"""Randomized invariants: Hermiticity, gauge invariance, propagator agreement."""
import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from gaugelab import driven as d
from gaugelab.hilbert import LatticeSpec, enumerate_gauge_sector, gauss_operators, tensor_basis
from gaugelab.models import ModelParams, build_model, string_state
from gaugelab.solvers import evolve

TWO_PI = 2 * np.pi
coupling = st.floats(0.0, 3.0)
mass = st.floats(-2.0, 2.0)


def _lattice(kind, L, trunc):
    if kind == "qed":
        return LatticeSpec.qed(L, cutoff=trunc)
    if kind == "hobm":
        return LatticeSpec.hobm(L, 4, n_max=4 + trunc, n_min=4 - trunc)
    return LatticeSpec.qlm(L, matter="boson", matter_n_max=trunc + 1)


def _commutator_norm(A, B):
    return abs(A @ B - B @ A).max() if (A @ B - B @ A).nnz else 0.0


@settings(max_examples=25, deadline=None)
@given(kind=st.sampled_from(["qed", "hobm", "qlm"]), L=st.sampled_from([2, 4]),
       trunc=st.integers(1, 2), J=coupling, mu=mass, V=coupling)
def test_models_hermitian_and_gauge_invariant(kind, L, trunc, J, mu, V):
    lat = _lattice(kind, L, trunc)
    b = tensor_basis(lat)
    p = ModelParams(J=J, mu=mu, V=V, N=4 if kind == "hobm" else None)
    H = build_model(b, p)
    assert H.hermiticity_error() <= 1e-14 * max(1.0, J, abs(mu), V)
    Hc = H.csr
    for G in gauss_operators(b):
        assert _commutator_norm(Hc, G) <= 1e-12


@settings(max_examples=15, deadline=None)
@given(mismatch=st.floats(0.0, 1.0), compensate=st.booleans(), N=st.integers(3, 12))
def test_hobm_catalog_gauge_invariant(mismatch, compensate, N):
    lat = LatticeSpec.hobm(4, N, n_max=N + 2, n_min=max(0, N - 2))
    b = tensor_basis(lat)
    cat = d.ac_stark_catalog_hobm(d.ElementParams.surface_trap(N=N, mismatch=mismatch), compensate)
    op = d.catalog_operator(b, cat.F, cat.K, cat.E)
    assert op.hermiticity_error() == 0
    for G in gauss_operators(b):
        assert _commutator_norm(op.csr, G) == 0


@settings(max_examples=10, deadline=None)
@given(L=st.sampled_from([2, 4]), eta=st.floats(0.05, 0.25), wz_mhz=st.floats(0.5, 8.0),
       compensate=st.booleans())
def test_qlm_catalog_gauge_invariant(L, eta, wz_mhz, compensate):
    drive = d.QLMDrive(L=L, J=TWO_PI * 500, omega_z=TWO_PI * wz_mhz * 1e6, eta_com=eta, n_max=2,
                       compensate=compensate)
    b = tensor_basis(drive.lattice())
    op = d.qlm_shift_operator(drive, b)
    for G in gauss_operators(b):
        assert _commutator_norm(op.csr, G) == 0


@settings(max_examples=6, deadline=None)
@given(L=st.sampled_from([2, 4]), eta=st.floats(0.05, 0.25))
def test_drive_hamiltonian_hermitian(L, eta):
    drive = d.QLMDrive(L=L, J=TWO_PI * 500, omega_z=TWO_PI * 2e6, eta_com=eta, n_max=2)
    b = drive.basis()
    for real in (True, False):
        assert d.qlm_drive_hamiltonian(drive, b, real=real).hermiticity_error() == 0


@settings(max_examples=20, deadline=None)
@given(kind=st.sampled_from(["qed", "hobm"]), L=st.sampled_from([4, 6, 8]),
       J=st.floats(0.1, 2.0), mu=mass, V=coupling, tmax=st.floats(0.1, 30.0))
def test_krylov_matches_dense(kind, L, J, mu, V, tmax):
    lat = LatticeSpec.qed(L) if kind == "qed" else LatticeSpec.hobm(L, 10)
    b = enumerate_gauge_sector(lat, charge=0)
    assert len(b) <= 512
    H = build_model(b, ModelParams(J=J, mu=mu, V=V, N=10 if kind == "hobm" else None))
    psi0 = string_state(b)
    t = np.linspace(0.0, tmax, 4)
    ts = evolve(H, psi0, t, tol=1e-12, keep_states=True)
    A = H.toarray()
    for k, tk in enumerate(t):
        ref = sla.expm(-1j * tk * A) @ psi0
        assert np.linalg.norm(ts.states[k] - ref) <= 1e-8


@pytest.mark.parametrize("L", [2, 4])
def test_gauss_sector_is_invariant_subspace(L):
    # H restricted from the tensor space onto the Gauss sector is block diagonal
    lat = LatticeSpec.qed(L, cutoff=2)
    full = tensor_basis(lat)
    sec = enumerate_gauge_sector(lat)
    H = build_model(full, ModelParams(1.0, 0.3, 0.5)).csr
    idx = np.array([full.index(s) for s in sec.states])
    mask = np.zeros(len(full), bool)
    mask[idx] = True
    assert abs(H[mask][:, ~mask]).max() == 0
