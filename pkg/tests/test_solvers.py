import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sp

from gaugelab.errors import SchemaError
from gaugelab.hilbert import LatticeSpec, enumerate_gauge_sector
from gaugelab.models import ModelParams, build_hobm, build_qed, electric_observable, string_state
from gaugelab.operators import SparseOperator, TermSum
from gaugelab.solvers import (TimeSeries, evolve, evolve_timedep, ground_state, growth_over_last_half,
                              krylov_expm, running_mean, spectral_evolve, time_average,
                              trajectory_error)


def _qed(L=6):
    b = enumerate_gauge_sector(LatticeSpec.qed(L), charge=0)
    return b, build_qed(b, ModelParams(1.0, 0.2, 0.2))


def test_ground_state_matches_dense():
    b, H = _qed(8)
    e, psi = ground_state(H)
    w = np.linalg.eigvalsh(H.toarray())
    assert e == pytest.approx(w[0], abs=1e-9)
    assert np.linalg.norm(H.matvec(psi) - e * psi) < 1e-8


def test_krylov_step_error_estimate():
    b, H = _qed(6)
    v = string_state(b).astype(complex)
    out, err = krylov_expm(H.matvec, v, 0.1, 20)
    ref = sla.expm(-0.1j * H.toarray()) @ v
    assert np.linalg.norm(out - ref) < max(err, 1e-13) * 10


def test_evolve_matches_dense_expm():
    b, H = _qed(8)
    psi0 = string_state(b)
    t = np.linspace(0, 5, 11)
    ts = evolve(H, psi0, t, tol=1e-12, keep_states=True)
    w, v = np.linalg.eigh(H.toarray())
    for k, tk in enumerate(t):
        ref = v @ (np.exp(-1j * w * tk) * (v.conj().T @ psi0))
        assert np.linalg.norm(ts.states[k] - ref) <= 1e-8


def test_spectral_matches_krylov():
    b, H = _qed(8)
    psi0 = string_state(b)
    t = np.linspace(0, 10, 21)
    E = electric_observable(b)
    a = evolve(H, psi0, t, observables={"E": E})["E"]
    c = spectral_evolve(H, psi0, t, {"E": E.diagonal().real})["E"]
    assert np.allclose(a, c, atol=1e-9)


def test_evolve_rejects_bad_state():
    b, H = _qed(4)
    with pytest.raises(SchemaError):
        evolve(H, np.ones(len(b)), [0, 1])
    with pytest.raises(SchemaError):
        evolve(H, np.ones(3) / np.sqrt(3), [0, 1])


def test_norm_is_conserved():
    b, H = _qed(8)
    ts = evolve(H, string_state(b), np.linspace(0, 20, 5))
    assert ts.metadata["norm_drift"] < 1e-9


def test_timeseries_validation():
    with pytest.raises(SchemaError):
        TimeSeries(np.array([0.0, 0.0]), {})
    with pytest.raises(SchemaError):
        TimeSeries(np.array([]), {})


def test_running_mean_and_error():
    t = np.linspace(0, 1, 101)
    y = np.ones_like(t) * 3
    assert np.allclose(running_mean(t, y), 3)
    a = TimeSeries(t, {"E": np.sin(t)})
    b = TimeSeries(t, {"E": np.sin(t) + 0.5})
    assert np.allclose(trajectory_error(a, b, "E")[1:], 0.5)
    assert time_average(a, "E")[0] == 0.0
    with pytest.raises(SchemaError):
        trajectory_error(a, TimeSeries(t * 2, {"E": t}), "E")


def test_growth_detector():
    t = np.linspace(0, 100, 400)
    assert abs(growth_over_last_half(t, 0.1 + 0.01 * np.sin(t))) < 0.01
    assert growth_over_last_half(t, 0.001 * t) == pytest.approx(0.05, rel=1e-2)


class _Static:
    """Time-independent generator wrapper."""

    def __init__(self, H):
        self.H = H

    def matvec(self, t, x):
        return self.H.matvec(x)

    def norm_estimate(self, t=0.0):
        return self.H.norm_estimate()


def test_timedep_reduces_to_static():
    b, H = _qed(6)
    psi0 = string_state(b)
    t = np.linspace(0, 2, 5)
    E = electric_observable(b)
    a = evolve_timedep(_Static(H), psi0, t, dt=0.05, tol=1e-10, observables={"E": E})["E"]
    c = evolve(H, psi0, t, tol=1e-12, observables={"E": E})["E"]
    assert np.allclose(a, c, atol=1e-8)


def test_timedep_zero_drive_is_constant():
    n = 8
    gen = _Static(SparseOperator(sp.csr_matrix((n, n), dtype=complex)))
    psi0 = np.zeros(n, complex)
    psi0[3] = 1
    ts = evolve_timedep(gen, psi0, np.linspace(0, 1, 3), dt=0.1)
    assert np.allclose(ts.metadata["final_state"], psi0)


def test_termsum_matches_assembled():
    rng = np.random.default_rng(1)
    mats = [sp.random(20, 20, density=0.2, random_state=k, format="csr") for k in range(3)]
    ts = TermSum(mats, 20)
    c = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    x = rng.standard_normal(20) + 0j
    ref = sum(ci * m for ci, m in zip(c, mats)) @ x
    assert np.allclose(ts.matvec(c, x), ref)
    assert np.allclose(ts.assemble(c).toarray(), sum(ci * m for ci, m in zip(c, mats)).toarray())


def test_hobm_evolution_runs():
    b = enumerate_gauge_sector(LatticeSpec.hobm(6, 10), charge=0)
    H = build_hobm(b, ModelParams(1.0, 0.2, 0.2, N=10))
    ts = evolve(H, string_state(b), np.linspace(0, 4, 5), observables={"E": electric_observable(b)})
    assert np.all(np.abs(ts["E"]) <= 1.0 + 1e-12)
