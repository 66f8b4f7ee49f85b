"""Ground states, real-time propagation and trajectory metrics."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import ConvergenceError, SchemaError
from .operators import SparseOperator

log = logging.getLogger(__name__)

DEFAULT_SAMPLES = 400


@dataclass
class TimeSeries:
    """Sampled observables on a strictly increasing time grid."""

    times: np.ndarray
    values: dict = field(default_factory=dict)
    states: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.ndim != 1 or len(self.times) == 0:
            raise SchemaError("time grid must be a nonempty 1D array")
        if np.any(np.diff(self.times) <= 0):
            raise SchemaError("time grid must be strictly increasing")
        for k, v in self.values.items():
            v = np.asarray(v)
            if len(v) != len(self.times):
                raise SchemaError(f"series {k!r} has {len(v)} samples for {len(self.times)} times")
            self.values[k] = v

    def __getitem__(self, key):
        return self.values[key]


def time_grid(t_max: float, n: int = DEFAULT_SAMPLES):
    return np.linspace(0.0, t_max, n)


def _as_matvec(H):
    if isinstance(H, SparseOperator):
        return H.matvec, H.dim, H.norm_estimate()
    if callable(H):
        raise SchemaError("pass a SparseOperator or a (matvec, dim, norm) tuple")
    matvec, dim, norm = H
    return matvec, dim, norm


# --------------------------------------------------------------------------
# Lanczos ground state
# --------------------------------------------------------------------------

def _lanczos(matvec, v0, m):
    """Lanczos with full reorthogonalization; returns (Q, alpha, beta)."""
    n = v0.shape[0]
    m = min(m, n)
    Q = np.zeros((m + 1, n), dtype=np.complex128)
    alpha = np.zeros(m)
    beta = np.zeros(m)
    Q[0] = v0 / np.linalg.norm(v0)
    k = 0
    for k in range(m):
        w = matvec(Q[k])
        alpha[k] = np.vdot(Q[k], w).real
        # two passes of classical Gram-Schmidt against all previous vectors
        for _ in range(2):
            w -= Q[:k + 1].T @ (Q[:k + 1].conj() @ w)
        beta[k] = np.linalg.norm(w)
        if beta[k] < 1e-14 * max(1.0, abs(alpha[k])):
            return Q[:k + 1], alpha[:k + 1], beta[:k + 1]
        Q[k + 1] = w / beta[k]
    return Q[:m + 1], alpha, beta


def ground_state(H, tol: float = 1e-10, seed: int = 12345, krylov_dim: int = 120,
                 max_restarts: int = 50):
    """Lowest eigenpair by restarted Lanczos.

    Parameters
    ----------
    H : SparseOperator
    tol : float
        Relative residual target, ``||H psi - E psi|| <= tol * ||H||``.
    seed : int
        Seed of the random start vector.

    Returns
    -------
    energy : float
    psi : ndarray
    """
    matvec, n, hnorm = _as_matvec(H)
    if n == 0:
        raise SchemaError("empty operator")
    hnorm = max(hnorm, 1e-300)
    if n <= 2:
        if not isinstance(H, SparseOperator):
            raise SchemaError("tiny problems need an explicit operator")
        w, v = np.linalg.eigh(H.toarray())
        return float(w[0]), v[:, 0].astype(complex)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    for _ in range(max_restarts):
        Q, a, b = _lanczos(matvec, v, krylov_dim)
        k = len(a)
        T = np.diag(a) + np.diag(b[:k - 1], 1) + np.diag(b[:k - 1], -1)
        w, y = np.linalg.eigh(T)
        psi = Q[:k].T @ y[:, 0]
        psi /= np.linalg.norm(psi)
        res = np.linalg.norm(matvec(psi) - w[0] * psi)
        if res <= tol * hnorm:
            return float(w[0]), psi
        v = psi
    raise ConvergenceError(f"Lanczos residual {res:.3e} above {tol * hnorm:.3e}")


# --------------------------------------------------------------------------
# Krylov propagation
# --------------------------------------------------------------------------

def krylov_expm(matvec, v, dt: float, m: int = 30):
    """Approximate ``exp(-i dt H) v`` in an m-dimensional Lanczos space.

    Returns the propagated vector and the a-posteriori error estimate
    ``beta_m |e_m^T exp(-i dt T) e_1| ||v||``.
    """
    nv = np.linalg.norm(v)
    if nv == 0:
        return v.copy(), 0.0
    Q, a, b = _lanczos(matvec, v, m)
    k = len(a)
    T = np.diag(a) + np.diag(b[:k - 1], 1) + np.diag(b[:k - 1], -1)
    w, y = np.linalg.eigh(T)
    c = y @ (np.exp(-1j * dt * w) * y[0].conj())
    out = nv * (Q[:k].T @ c)
    err = nv * b[k - 1] * abs(c[-1]) if k == m else 0.0
    return out, float(err)


def evolve(H, psi0, times, tol: float = 1e-10, observables: dict | None = None,
           krylov_dim: int = 30, keep_states: bool = False) -> TimeSeries:
    """Propagate ``psi0`` under a static Hermitian ``H``.

    The step size adapts to the Krylov error estimate (halved on failure,
    grown by 1.5 after a success).  Observables are given as a mapping from
    name to ``SparseOperator`` or to a callable ``f(psi) -> float``.
    """
    matvec, n, hnorm = _as_matvec(H)
    times = np.asarray(times, dtype=float)
    psi = np.array(psi0, dtype=np.complex128)
    if psi.shape != (n,):
        raise SchemaError(f"state length {psi.shape} does not match dimension {n}")
    if abs(np.linalg.norm(psi) - 1) > 1e-10:
        raise SchemaError("initial state must be normalized")
    observables = observables or {}
    vals = {k: np.zeros(len(times)) for k in observables}
    states = np.zeros((len(times), n), dtype=complex) if keep_states else None
    dt = 1.0 / max(hnorm, 1e-12)
    t = times[0]
    for i, target in enumerate(times):
        while t < target - 1e-14 * max(1.0, abs(target)):
            h = min(dt, target - t)
            halved = False
            while True:
                new, err = krylov_expm(matvec, psi, h, krylov_dim)
                if err <= tol * h:
                    break
                h *= 0.5
                halved = True
                if h < 1e-14 * max(1.0, abs(target)):
                    raise ConvergenceError("time step underflow in Krylov propagation")
            psi = new
            t += h
            if halved:
                dt = h
            elif h >= dt:
                dt *= 1.5
        for k, op in observables.items():
            vals[k][i] = _measure(op, psi)
        if keep_states:
            states[i] = psi
    drift = abs(np.linalg.norm(psi) - 1)
    return TimeSeries(times, vals, states, {"tol": tol, "krylov_dim": krylov_dim, "norm_drift": drift})


def _measure(op, psi):
    if isinstance(op, SparseOperator):
        return op.expectation(psi)
    return float(op(psi))


def spectral_evolve(H, psi0, times, diagonal_observables: dict, chunk: int = 100) -> TimeSeries:
    """Exact propagation through a dense eigendecomposition.

    Meant for static generators whose norm times the evolution window is too
    large for Krylov stepping.  Only observables diagonal in the basis are
    supported; they are passed as arrays of diagonal values.
    """
    if hasattr(H, "toarray"):
        H = H.toarray()
    H = np.asarray(H)
    if np.iscomplexobj(H) and np.abs(H.imag).max() == 0:
        H = H.real
    if np.iscomplexobj(H):
        w, v = sla.eigh(H, driver="evr")
    else:
        w, v = sla.eigh(H, driver="evr", overwrite_a=False)
    c = v.conj().T @ np.asarray(psi0, dtype=complex)
    times = np.asarray(times, dtype=float)
    vals = {k: np.zeros(len(times)) for k in diagonal_observables}
    for s in range(0, len(times), chunk):
        ts = times[s:s + chunk]
        ph = np.exp(-1j * np.outer(w, ts)) * c[:, None]
        if np.iscomplexobj(v):
            amp = v @ ph
        else:
            amp = v @ ph.real + 1j * (v @ ph.imag)
        prob = np.abs(amp) ** 2
        for k, d in diagonal_observables.items():
            d = np.asarray(d)
            vals[k][s:s + chunk] = (d @ prob) if d.ndim == 1 else np.max(d @ prob, axis=0)
    return TimeSeries(times, vals, None, {"method": "spectral"})


# --------------------------------------------------------------------------
# time-dependent propagation
# --------------------------------------------------------------------------

def evolve_timedep(generator, psi0, times, dt: float, tol: float = 1e-8,
                   observables: dict | None = None, krylov_dim: int = 30) -> TimeSeries:
    """Exponential-midpoint propagation under ``H(t)``.

    ``generator`` exposes ``matvec(t, x)`` and ``norm_estimate(t)``.  Each
    step ``exp(-i dt H(t + dt/2))`` is accepted when it agrees with two half
    steps to ``tol``; otherwise the step is halved.
    """
    times = np.asarray(times, dtype=float)
    psi = np.array(psi0, dtype=np.complex128)
    observables = observables or {}
    vals = {k: np.zeros(len(times)) for k in observables}

    def step(t0, h, x):
        mv = lambda y: generator.matvec(t0 + 0.5 * h, y)  # noqa: E731
        out, err = krylov_expm(mv, x, h, krylov_dim)
        if err > 1e-3 * tol:
            raise ConvergenceError("Krylov space too small for the time step")
        return out

    h = dt
    t = times[0]
    n_steps = 0
    for i, target in enumerate(times):
        while t < target - 1e-14 * max(1.0, abs(target)):
            hh = min(h, target - t)
            while True:
                try:
                    full = step(t, hh, psi)
                    half = step(t + 0.5 * hh, 0.5 * hh, step(t, 0.5 * hh, psi))
                    ok = np.linalg.norm(full - half) <= tol
                except ConvergenceError:
                    ok = False
                if ok:
                    break
                hh *= 0.5
                if hh < 1e-9 * dt:
                    raise ConvergenceError("step size underflow in time-dependent propagation")
            psi = half
            t += hh
            if hh < min(h, target - t + hh):
                h = hh
            elif h < dt:
                h = min(dt, 1.25 * h)
            n_steps += 1
        for k, op in observables.items():
            vals[k][i] = _measure(op, psi) if not isinstance(op, np.ndarray) else float(op @ np.abs(psi) ** 2)
    return TimeSeries(times, vals, None, {"steps": n_steps, "dt": dt, "tol": tol,
                                          "final_state": psi})


# --------------------------------------------------------------------------
# trajectory metrics
# --------------------------------------------------------------------------

def _grid_values(series, key):
    if isinstance(series, TimeSeries):
        return series.times, np.asarray(series.values[key] if key else next(iter(series.values.values())))
    t, y = series
    return np.asarray(t, dtype=float), np.asarray(y, dtype=float)


def running_mean(t, y):
    """``(1/t) int_0^t y dt'`` with the trapezoid rule; equals ``y(0)`` at t=0."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.empty_like(y)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))])
    span = t - t[0]
    nz = span > 0
    out[nz] = cum[nz] / span[nz]
    out[~nz] = y[~nz]
    return out


def time_average(series, key: str | None = None):
    """Running time average of one observable of a series."""
    t, y = _grid_values(series, key)
    if len(y) == 0:
        raise SchemaError("empty series")
    return running_mean(t, y)


def trajectory_error(series_a, series_b, key: str | None = None):
    """``eps(t) = (1/t) int_0^t |a - b| dt'`` on a shared grid."""
    ta, a = _grid_values(series_a, key)
    tb, b = _grid_values(series_b, key)
    if ta.shape != tb.shape or not np.allclose(ta, tb, rtol=0, atol=1e-12 * max(1.0, abs(ta[-1]))):
        raise SchemaError("trajectories are sampled on different grids")
    return running_mean(ta, np.abs(a - b))


def growth_over_last_half(t, eps) -> float:
    """Least-squares slope of ``eps`` over the last half window times its length.

    A bounded (saturating) error metric gives a value small compared with
    the mean of ``eps`` there.
    """
    t = np.asarray(t)
    sel = t >= 0.5 * t[-1]
    if sel.sum() < 3:
        return 0.0
    slope = np.polyfit(t[sel], np.asarray(eps)[sel], 1)[0]
    return float(slope * (t[-1] - t[sel][0]))


def max_frequency_hint(H) -> float:
    _, _, norm = _as_matvec(H)
    return norm / (2 * math.pi)
