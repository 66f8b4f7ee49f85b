"""Micro-trap arrays: equilibrium, Coulomb couplings and localized radial modes.

All quantities are SI; frequencies are angular (rad/s) and couplings ``V`` are
in rad^2/s^2 (the potential per unit mass).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import constants as _c

from .errors import ConvergenceError, DesignError, SchemaError

TWO_PI = 2.0 * np.pi
AMU = _c.atomic_mass
BE9_MASS = 9.0122 * AMU
COULOMB = _c.e ** 2 / (4.0 * np.pi * _c.epsilon_0)   # J m

# hierarchy factors used to interpret ">>" and "~" in the design rules
MUCH_LARGER = 5.0
SAME_ORDER = 10.0


def coulomb_rate(mass: float) -> float:
    """``e^2 / (4 pi eps0 M)`` in m^3/s^2."""
    return COULOMB / mass


@dataclass
class TrapArray:
    """Independent harmonic traps on a line.

    ``centers`` are the trap minima along z.  A linear Paul trap is the
    special case with all centers at zero.
    """

    mass: float
    wx: np.ndarray
    wy: np.ndarray
    wz: np.ndarray
    centers: np.ndarray
    spacing: float = 0.0
    design: dict = field(default_factory=dict)

    def __post_init__(self):
        self.wx, self.wy, self.wz, self.centers = (
            np.atleast_1d(np.asarray(a, dtype=float)) for a in (self.wx, self.wy, self.wz, self.centers))
        n = len(self.centers)
        if not all(len(a) == n for a in (self.wx, self.wy, self.wz)):
            raise SchemaError("frequency arrays and centers must have equal length")
        if self.mass <= 0:
            raise SchemaError("ion mass must be positive")
        if np.any(self.wx <= 0) or np.any(self.wy <= 0) or np.any(self.wz <= 0):
            raise SchemaError("trap frequencies must be positive")
        if np.min(np.minimum(self.wx, self.wy)) <= np.max(self.wz):
            raise SchemaError("radial confinement must exceed axial confinement")

    @property
    def n(self) -> int:
        return len(self.centers)

    def frequencies(self, axis: str):
        try:
            return {"x": self.wx, "y": self.wy, "z": self.wz}[axis]
        except KeyError:
            raise SchemaError(f"unknown axis {axis!r}") from None

    @classmethod
    def uniform(cls, n, spacing, wx, wy, wz, mass=BE9_MASS):
        one = np.ones(n)
        return cls(mass, wx * one, wy * one, wz * one, spacing * np.arange(n), spacing)

    @classmethod
    def paul(cls, n, wz, wr, mass=BE9_MASS):
        """Common harmonic well (linear Paul trap)."""
        one = np.ones(n)
        return cls(mass, wr * one, wr * one, wz * one, np.zeros(n), 0.0)


def _block_x(l, n_block):
    m = (l - 1) // n_block
    return m, l - m * n_block


def _block_y(l, n_block):
    # trap 1 is outside every y block; use j = 0 there
    if l == 1:
        return 0, 0
    m = (l - 2) // n_block
    return m, l - 1 - m * n_block


def design_frequencies(blocks: int, n_block: int, wx: float, wy: float, dT: float,
                       dB: float, dt: float, *, wz: float = TWO_PI * 0.5e6,
                       spacing: float = 30e-6, mass: float = BE9_MASS,
                       jitter: float = 0.0, seed=None, check: bool = True) -> TrapArray:
    """Block-segmented radial frequencies.

    Parameters
    ----------
    blocks, n_block : int
        Number of blocks and traps per block (even).
    wx, wy : float
        Base radial frequencies (rad/s).
    dT, dB, dt : float
        Pair step, block offset and intra-pair offset (rad/s).
    jitter : float
        Half-width of a uniform random offset added to every radial frequency.
    seed : int or numpy Generator, optional
    check : bool
        Validate the hierarchy ``dT >> dB >> dt ~ max V / w``.
    """
    if n_block < 2 or n_block % 2:
        raise DesignError(f"traps per block must be even and >= 2, got {n_block}")
    if blocks < 1:
        raise DesignError("need at least one block")
    L = blocks * n_block
    ox = np.empty(L)
    oy = np.empty(L)
    for l in range(1, L + 1):
        m, j = _block_x(l, n_block)
        ox[l - 1] = wx + m * dB + ((j - 1) // 2) * dT + (1 + (-1) ** j) / 2 * dt
        m, j = _block_y(l, n_block)
        oy[l - 1] = wy + m * dB + ((j + 1) // 2) * dT + (1 + (-1) ** j) / 2 * dt
    if jitter:
        rng = np.random.default_rng(seed)
        ox = ox + rng.uniform(-jitter, jitter, L)
        oy = oy + rng.uniform(-jitter, jitter, L)
    traps = TrapArray(mass, ox, oy, np.full(L, wz), spacing * np.arange(L), spacing,
                      design=dict(blocks=blocks, n_block=n_block, wx=wx, wy=wy,
                                  dT=dT, dB=dB, dt=dt, jitter=jitter))
    if check:
        check_hierarchy(traps)
    return traps


def check_hierarchy(traps: TrapArray):
    d = traps.design
    dT, dB, dt = d["dT"], d["dB"], d["dt"]
    w = min(d["wx"], d["wy"])
    v = traps.n > 1 and nearest_neighbor_coupling(traps) or 0.0
    hop = v / w
    problems = []
    if not dT >= MUCH_LARGER * dB and d["blocks"] > 1:
        problems.append(f"Delta_T >> Delta_B violated ({dT:.4g} vs {dB:.4g})")
    if not dB >= MUCH_LARGER * dt and d["blocks"] > 1:
        problems.append(f"Delta_B >> delta_T violated ({dB:.4g} vs {dt:.4g})")
    if not dT >= MUCH_LARGER * dt:
        problems.append(f"Delta_T >> delta_T violated ({dT:.4g} vs {dt:.4g})")
    if hop > 0 and not (hop / SAME_ORDER <= dt <= hop * SAME_ORDER):
        problems.append(f"delta_T ~ max V/w violated ({dt:.4g} vs {hop:.4g})")
    if problems:
        raise DesignError("; ".join(problems))


# --------------------------------------------------------------------------
# equilibrium and couplings
# --------------------------------------------------------------------------

def _force_and_hessian(z, traps, k):
    dz = z[:, None] - z[None, :]
    np.fill_diagonal(dz, np.inf)
    inv2 = np.sign(dz) / dz ** 2
    inv3 = 1.0 / np.abs(dz) ** 3
    w2 = traps.wz ** 2
    grad = w2 * (z - traps.centers) - k * inv2.sum(axis=1)
    hess = -2.0 * k * inv3
    np.fill_diagonal(hess, w2 + 2.0 * k * inv3.sum(axis=1))
    return grad, hess


def _energy(z, traps, k):
    dz = np.abs(z[:, None] - z[None, :])
    iu = np.triu_indices(len(z), 1)
    return 0.5 * np.sum(traps.wz ** 2 * (z - traps.centers) ** 2) + k * np.sum(1.0 / dz[iu])


def _initial_positions(traps, k):
    n = traps.n
    if n == 1:
        return traps.centers.copy()
    if np.ptp(traps.centers) > 0:
        return traps.centers.astype(float).copy()
    # common well: spread on the natural length scale, refined by Newton
    ell = (k / np.mean(traps.wz) ** 2) ** (1.0 / 3.0)
    return traps.centers + ell * 2.0 * (np.arange(n) - (n - 1) / 2) * n ** (-0.44)


def equilibrium_positions(traps: TrapArray, tol: float = 1e-12, max_iter: int = 200):
    """Axial equilibrium by damped Newton iteration.

    Converged when the largest force per unit mass falls below ``tol`` times
    ``max(wz)^2 * ell`` with ``ell`` the Coulomb length scale.
    """
    k = coulomb_rate(traps.mass)
    z = _initial_positions(traps, k)
    if traps.n == 1:
        return z
    ell = (k / np.max(traps.wz) ** 2) ** (1.0 / 3.0)
    scale = np.max(traps.wz) ** 2 * ell
    for _ in range(max_iter):
        g, H = _force_and_hessian(z, traps, k)
        if np.max(np.abs(g)) <= tol * scale:
            if np.linalg.eigvalsh(H)[0] <= 0:
                raise ConvergenceError("equilibrium is unstable (Hessian not positive definite)")
            return z
        step = np.linalg.solve(H, g)
        e0 = _energy(z, traps, k)
        lam = 1.0
        while lam > 1e-12:
            trial = z - lam * step
            if np.all(np.diff(trial) > 0) and _energy(trial, traps, k) <= e0 + 1e-15 * abs(e0):
                break
            lam *= 0.5
        else:
            raise ConvergenceError("line search failed in equilibrium solver")
        z = trial
    raise ConvergenceError(f"equilibrium not converged in {max_iter} Newton steps")


def coupling_matrix(traps: TrapArray, positions, axis: str):
    """Harmonic coupling ``V`` (rad^2/s^2) along one axis."""
    gamma = {"x": 1.0, "y": 1.0, "z": -2.0}
    if axis not in gamma:
        raise SchemaError(f"unknown axis {axis!r}")
    z = np.asarray(positions, dtype=float)
    dz = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(dz, np.inf)
    if np.any(dz == 0):
        raise SchemaError("coincident ion positions")
    c = gamma[axis] * coulomb_rate(traps.mass) / dz ** 3
    V = c.copy()
    np.fill_diagonal(V, traps.frequencies(axis) ** 2 - c.sum(axis=1))
    return V


def nearest_neighbor_coupling(traps: TrapArray, positions=None) -> float:
    if positions is None:
        positions = equilibrium_positions(traps)
    V = coupling_matrix(traps, positions, "x")
    return float(np.max(np.abs(np.diag(V, 1))))


# --------------------------------------------------------------------------
# normal modes
# --------------------------------------------------------------------------

@dataclass
class NormalModes:
    axis: str
    eps: np.ndarray            # mode frequencies (rad/s), indexed by label
    M: np.ndarray              # M[l, q]: ion l in mode q
    pairs: list = field(default_factory=list)

    def orthogonality_error(self) -> float:
        return float(np.max(np.abs(self.M.T @ self.M - np.eye(len(self.eps)))))


def normal_modes(V, axis: str = "x", pairs=None) -> NormalModes:
    """Diagonalize ``V`` and label modes adiabatically.

    Eigenvalues never cross as the spacing is reduced from infinity, so the
    mode with the k-th smallest frequency connects to the ion with the k-th
    smallest bare frequency ``sqrt(V_ll)`` in the decoupled limit.  Columns
    are signed so that ``M[q, q] > 0``.
    """
    V = np.asarray(V, dtype=float)
    if not np.allclose(V, V.T, rtol=0, atol=1e-12 * np.max(np.abs(V))):
        raise SchemaError("coupling matrix must be symmetric")
    lam, vec = np.linalg.eigh(V)
    if lam[0] <= 0:
        raise SchemaError("coupling matrix is not positive definite (unstable crystal)")
    order = np.argsort(np.diag(V), kind="stable")
    M = np.empty_like(vec)
    eps = np.empty_like(lam)
    M[:, order] = vec
    eps[order] = np.sqrt(lam)
    sign = np.sign(np.diag(M))
    sign[sign == 0] = 1.0
    M *= sign
    return NormalModes(axis, eps, M, list(pairs) if pairs is not None else [])


def pair_list(n: int, axis: str):
    """Near-resonant ion pairs (0-based): (1,2),(3,4).. in x and (2,3),.. in y."""
    start = 0 if axis == "x" else 1
    return [(l, l + 1) for l in range(start, n - 1, 2)]


def pair_angle(V, l: int) -> float:
    """Mixing angle of the pair (l, l+1), 0-based ``l``; pi/4 if degenerate."""
    V = np.asarray(V, dtype=float)
    num = 2.0 * V[l, l + 1]
    den = V[l + 1, l + 1] - V[l, l]
    if den == 0:
        return np.pi / 4 if num >= 0 else -np.pi / 4
    return 0.5 * np.arctan(num / den)


def zeroth_order_M(V, pairs):
    """Block-diagonal rotation built from the pair angles."""
    n = len(V)
    M0 = np.eye(n)
    for l, _ in pairs:
        th = pair_angle(V, l)
        c, s = np.cos(th), np.sin(th)
        M0[l, l], M0[l, l + 1] = c, s
        M0[l + 1, l], M0[l + 1, l + 1] = -s, c
    return M0


def _pair_mask(n, pairs):
    inside = np.eye(n, dtype=bool)
    for a, b in pairs:
        inside[np.ix_([a, b], [a, b])] = True
    return inside


def perturbative_modes(traps: TrapArray, axis: str, positions=None):
    """First-order corrected ``M`` and the analytic leakage bound.

    The unperturbed problem keeps each near-resonant pair exactly (its
    2x2 block including the intra-pair coupling); every other coupling is
    treated to first order.

    Returns
    -------
    M1 : ndarray
    bound : float
        ``max(Vnn / (Delta_T w), Vnn / ((N_I - 1)^3 Delta_B w))``.
    """
    if positions is None:
        positions = equilibrium_positions(traps)
    V = coupling_matrix(traps, positions, axis)
    n = len(V)
    pairs = pair_list(n, axis)
    inside = _pair_mask(n, pairs)
    V0 = np.where(inside, V, 0.0)
    W = V - V0
    M0 = zeroth_order_M(V, pairs)
    lam0 = np.einsum("lq,lm,mq->q", M0, V0, M0)
    Wq = M0.T @ W @ M0
    den = lam0[None, :] - lam0[:, None]       # [q', q] = lam_q - lam_q'
    np.fill_diagonal(den, np.inf)
    # modes in the same pair are exact eigenvectors of V0 and W does not couple them
    den[inside] = np.inf
    M1 = M0 + M0 @ (Wq / den)
    return M1, leakage_bound(traps, V)


def leakage_bound(traps: TrapArray, V=None) -> float:
    d = traps.design
    if not d:
        raise DesignError("leakage bound needs a designed trap array")
    if V is None:
        V = coupling_matrix(traps, equilibrium_positions(traps), "x")
    vmax = float(np.max(np.abs(np.diag(V, 1))))
    w = min(d["wx"], d["wy"])
    within = vmax / (d["dT"] * w)
    across = vmax / ((d["n_block"] - 1) ** 3 * d["dB"] * w) if d["blocks"] > 1 else 0.0
    return max(within, across)


def leakout(modes: NormalModes, V, pairs=None) -> float:
    """Largest ``|M - M0|`` entry outside the pair blocks."""
    pairs = modes.pairs if pairs is None else pairs
    M0 = zeroth_order_M(V, pairs)
    out = ~_pair_mask(len(M0), pairs)
    diff = np.abs(modes.M - M0)
    return float(np.max(diff[out])) if out.any() else 0.0


def block_of(l: int, axis: str, n_block: int) -> int:
    """Block index of 0-based ion ``l``."""
    if axis == "x":
        return _block_x(l + 1, n_block)[0]
    return _block_y(l + 1, n_block)[0]


def cross_talk(modes: NormalModes, n_block: int) -> float:
    """Largest ``|M_lq|`` between ions and modes in different blocks."""
    n = len(modes.eps)
    b = np.array([block_of(l, modes.axis, n_block) for l in range(n)])
    other = b[:, None] != b[None, :]
    return float(np.max(np.abs(modes.M[other]))) if other.any() else 0.0


@dataclass
class ArrayModes:
    traps: TrapArray
    positions: np.ndarray
    V: dict
    modes: dict

    def leakout(self) -> float:
        return max(leakout(self.modes[a], self.V[a]) for a in ("x", "y"))

    def cross_talk(self) -> float:
        nb = self.traps.design["n_block"]
        return max(cross_talk(self.modes[a], nb) for a in ("x", "y"))

    def pair_angle(self, l: int) -> float:
        """Angle of the pair starting at 0-based ion ``l`` on its own axis."""
        axis = "x" if l % 2 == 0 else "y"
        return pair_angle(self.V[axis], l)


def radial_modes(traps: TrapArray) -> ArrayModes:
    z = equilibrium_positions(traps)
    V = {a: coupling_matrix(traps, z, a) for a in ("x", "y")}
    modes = {a: normal_modes(V[a], a, pair_list(traps.n, a)) for a in ("x", "y")}
    return ArrayModes(traps, z, V, modes)


def segmented_array(blocks: int = 2, jitter: float = 0.0, seed=None, **kw) -> TrapArray:
    """Default Be-9 surface-trap design (radial 5 MHz, axial 0.5 MHz, 30 um)."""
    p = dict(n_block=6, wx=TWO_PI * 5e6, wy=TWO_PI * 5e6, dT=TWO_PI * 500e3,
             dB=TWO_PI * 50e3, dt=TWO_PI * 5e3)
    p.update(kw)
    return design_frequencies(blocks, jitter=jitter, seed=seed, **p)


def jitter_study(n_seeds: int = 100, jitter: float = TWO_PI * 30e3, blocks: int = 2):
    """Leakage and analytic bound over seeded jitter draws."""
    leak, bound = [], []
    for s in range(n_seeds):
        arr = radial_modes(segmented_array(blocks, jitter, seed=s))
        leak.append(arr.leakout())
        bound.append(leakage_bound(arr.traps, arr.V["x"]))
    return np.array(leak), np.array(bound)


# --------------------------------------------------------------------------
# axial modes of a linear chain in a common well
# --------------------------------------------------------------------------

def axial_modes(n: int, wz: float, wr: float | None = None, mass: float = BE9_MASS) -> NormalModes:
    """Collective axial modes of ``n`` ions in one harmonic well."""
    wr = 10.0 * wz if wr is None else wr
    traps = TrapArray.paul(n, wz, wr, mass)
    z = equilibrium_positions(traps)
    V = coupling_matrix(traps, z, "z")
    lam, vec = np.linalg.eigh(V)
    vec *= np.where(vec[0] < 0, -1.0, 1.0)
    return NormalModes("z", np.sqrt(lam), vec, [])


def lamb_dicke_factors(modes: NormalModes, eta_com: float):
    """Mode Lamb-Dicke parameters ``eta_com * sqrt(eps_1 / eps_q)``."""
    return eta_com * np.sqrt(modes.eps[0] / modes.eps)
