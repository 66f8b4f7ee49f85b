"""Finite-size scaling near Coleman's transition at theta = pi.

Couplings use lattice units with spacing ``a = 1``: ``J = 1/2``,
``V = (ga)^2 / 2`` and ``mu = (m/g) * g``.  The order parameter is the
space-averaged total field ``<E + alpha>`` in the ground state with
``alpha = 1/2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EdgeError, SchemaError
from .hilbert import LatticeSpec, eliminate_gauge_field
from .models import ModelParams
from .operators import SparseOperator
from .solvers import ground_state

CRITICAL_MASS_GA03 = 0.297


@dataclass(frozen=True)
class Exponents:
    """Scaling exponents.

    ``nu``/``delta`` describe the QED order parameter; the primed values
    enter the HOBM-to-QED ratios and ``eta_prime`` sets the ``L^(1/eta')/N``
    scaling variable.
    """

    nu: float = 1.0
    delta: float = -0.125
    eta_prime: float = 0.8
    nu_prime: float = 1.0
    delta_prime: float = -0.125

    def __post_init__(self):
        vals = (self.nu, self.delta, self.eta_prime, self.nu_prime, self.delta_prime)
        if not all(np.isfinite(vals)):
            raise SchemaError("exponents must be finite")
        if self.nu <= 0 or self.nu_prime <= 0 or self.eta_prime <= 0:
            raise SchemaError("nu, nu' and eta' must be positive")


@dataclass
class ScanResult:
    h: np.ndarray
    E: np.ndarray
    L: int
    N: int | None
    ga: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=float)
        self.E = np.asarray(self.E, dtype=float)
        if np.any(np.diff(self.h) <= 0):
            raise SchemaError("scan grid must be strictly increasing")

    def rows(self):
        n = -1 if self.N is None else self.N
        return [(h, e, self.L, n, self.ga) for h, e in zip(self.h, self.E)]


def coleman_params(ga: float, m_over_g: float, N: int | None = None) -> ModelParams:
    g = ga  # a = 1
    return ModelParams(J=0.5, mu=m_over_g * g, V=0.5 * ga ** 2, N=N, alpha=0.5)


def coleman_lattice(L: int, N: int | None = None) -> LatticeSpec:
    if N is None:
        return LatticeSpec.qed(L, alpha=0.5)
    return LatticeSpec.hobm(L, N, alpha=0.5)


class EliminatedFamily:
    """Ground states of the eliminated model along a mass scan.

    Only the diagonal depends on the mass, so the hopping part and the
    mass-free diagonal are assembled once per (L, N).
    """

    def __init__(self, L: int, N: int | None, ga: float):
        self.L, self.N, self.ga = L, N, ga
        lat = coleman_lattice(L, N)
        spec0 = eliminate_gauge_field(lat, coleman_params(ga, 0.0, N))
        bits, H0 = spec0.build(charge=0)
        self.bits = bits
        self.H0 = H0.tocsr()
        odd = (np.arange(1, L + 1) % 2 == 1).astype(int)
        self.n_particles = np.abs(bits - odd).sum(axis=1).astype(float)
        q = bits - odd
        self.order = (np.cumsum(q, axis=1)[:, :L - 1] + lat.alpha).mean(axis=1)

    def hamiltonian(self, m_over_g: float) -> SparseOperator:
        import scipy.sparse as sp

        mu = m_over_g * self.ga
        return SparseOperator(self.H0 + sp.diags(mu * self.n_particles))

    def order_parameter(self, m_over_g: float, tol: float = 1e-10) -> float:
        _, psi = ground_state(self.hamiltonian(m_over_g), tol=tol)
        return float(np.abs(psi) ** 2 @ self.order)


def order_parameter_scan(h_grid, L: int, N: int | None = None, ga: float = 0.3,
                         mc: float = CRITICAL_MASS_GA03, tol: float = 1e-10) -> ScanResult:
    """Ground-state ``<E + alpha>`` on ``m/g = mc + h`` for QED (N=None) or HOBM."""
    fam = EliminatedFamily(L, N, ga)
    h_grid = np.asarray(h_grid, dtype=float)
    E = np.array([fam.order_parameter(mc + h, tol) for h in h_grid])
    return ScanResult(h_grid, E, L, N, ga, {"mc": mc, "dim": len(fam.bits), "tol": tol})


def five_point_derivative(x, y):
    """Central 5-point derivative on the interior points of a uniform grid."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dx = np.diff(x)
    if len(x) < 7:
        raise SchemaError("need at least 7 grid points")
    if not np.allclose(dx, dx[0], rtol=1e-8, atol=0):
        raise SchemaError("5-point differences need a uniform grid")
    h = dx[0]
    d = (y[:-4] - 8 * y[1:-3] + 8 * y[3:-1] - y[4:]) / (12 * h)
    return x[2:-2], d


def pseudo_critical_point(scan, y=None) -> float:
    """Location of the maximum slope of a scan.

    Accepts a :class:`ScanResult` or a grid ``scan`` together with values ``y``.
    The argmax of the 5-point derivative is refined by a parabola through it
    and its two neighbours.
    """
    x = scan.h if isinstance(scan, ScanResult) else np.asarray(scan, dtype=float)
    y = scan.E if isinstance(scan, ScanResult) else np.asarray(y, dtype=float)
    xd, d = five_point_derivative(x, y)
    k = int(np.argmax(d))
    if k == 0 or k == len(d) - 1:
        raise EdgeError(f"maximum slope at grid edge (h = {xd[k]:.4g})")
    y0, y1, y2 = d[k - 1], d[k], d[k + 1]
    den = y0 - 2 * y1 + y2
    step = xd[1] - xd[0]
    shift = 0.0 if den == 0 else 0.5 * (y0 - y2) / den
    return float(xd[k] + shift * step)


# --------------------------------------------------------------------------
# scaling collapse
# --------------------------------------------------------------------------

def collapse_quality(datasets, n_samples: int = 100, xscale: str = "auto") -> float:
    """Mean vertical variance of overlaid curves.

    Parameters
    ----------
    datasets : sequence of (x, y)
        Rescaled curves; each is sorted by x internally.
    xscale : {"auto", "log", "linear"}
        Interpolation variable.  ``"auto"`` uses log x when every x is
        positive, which makes the score invariant under ``x -> c * x**p``.
    """
    curves = []
    for x, y in datasets:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        o = np.argsort(x)
        curves.append((x[o], y[o]))
    if len(curves) < 2:
        return 0.0
    use_log = xscale == "log" or (xscale == "auto" and all(np.all(c[0] > 0) for c in curves))
    if use_log:
        curves = [(np.log(x), y) for x, y in curves]
    lo = max(c[0][0] for c in curves)
    hi = min(c[0][-1] for c in curves)
    if not hi > lo:
        raise SchemaError("rescaled curves have no overlapping x-range")
    xs = np.linspace(lo, hi, n_samples)
    ys = np.array([np.interp(xs, x, y) for x, y in curves])
    return float(ys.var(axis=0).mean())


def ratio_collapse_data(L_values, N_values, ratio, exponents: Exponents, kind: str):
    """Rescale HOBM/QED ratios for a collapse plot.

    Parameters
    ----------
    ratio : mapping (L, N) -> float
        ``<E>`` ratio at h = 0 (``kind="order"``) or pseudo-critical ratio
        (``kind="critical"``).

    Returns
    -------
    list of (x, y) per L with ``x = L^(1/eta') / N``.
    """
    ex = exponents
    if kind == "order":
        power = ex.delta_prime - ex.delta
    elif kind == "critical":
        power = 1.0 / ex.nu_prime - 1.0 / ex.nu
    else:
        raise SchemaError(f"unknown collapse kind {kind!r}")
    out = []
    for L in L_values:
        x = np.array([L ** (1.0 / ex.eta_prime) / N for N in N_values])
        y = np.array([ratio[(L, N)] * L ** (-power) for N in N_values])
        out.append((x, y))
    return out
