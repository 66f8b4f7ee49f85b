"""Driven ion dynamics: sidebands, effective couplings and light shifts.

Two schemes are covered.

* HOBM elements: two ions sharing a localized radial mode pair, driven on
  second (ion ``l``) and first (ion ``l+1``) blue sidebands.  Effective
  couplings, the phonon nonlinearity and the light-shift catalog with its
  compensation beams live here, together with the simulator Hamiltonian
  that adds the residual shifts to the ideal model.
* Energy-lattice QLM: ions in one well, axial modes as matter, each ion
  driven near the second red sideband of modes ``l`` and ``l+1``.  The full
  drive is written in a static frame where ``H = sum eps n - sum Delta/2
  sigma^z + sum Omega/2 (P sigma^+ + h.c.)`` with ``P`` the Lamb-Dicke
  expansion of the photon kick, so it can be propagated without time
  stepping; an interaction-picture generator is provided for cross-checks.

Rates are angular frequencies.  Unless noted, any consistent unit works.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import iontrap
from .errors import SchemaError
from .hilbert import Basis, LatticeSpec, enumerate_gauge_sector, tensor_basis
from .models import ModelParams, build_hobm, build_qlm
from .operators import SparseOperator, TermSum

LAMB_DICKE_LIMIT = 0.3
SHIFT_FLOOR = 2 * np.pi * 1.0       # rad/s; far sidebands below this are dropped


class ValidityWarning(UserWarning):
    """An approximation behind an effective coupling is not well satisfied."""


# --------------------------------------------------------------------------
# beams and sideband expansion
# --------------------------------------------------------------------------

@dataclass
class Beam:
    ion: int
    rabi: float
    detuning: float                 # laser minus spin transition
    eta: np.ndarray                 # Lamb-Dicke weight per mode (eta_q * M_{ion,q})
    axis: str = "x"
    role: str = "sideband"

    def __post_init__(self):
        self.eta = np.atleast_1d(np.asarray(self.eta, dtype=float))
        if self.role not in ("sideband", "compensation", "standing-wave"):
            raise SchemaError(f"unknown beam role {self.role!r}")


@dataclass
class DriveSpec:
    beams: list
    mode_freqs: np.ndarray

    def lamb_dicke_flags(self, n_typ: float = 1.0):
        """Beams with ``max|eta| sqrt(n_typ) >= 0.3``."""
        bad = [b for b in self.beams if np.max(np.abs(b.eta)) * math.sqrt(max(n_typ, 1.0)) >= LAMB_DICKE_LIMIT]
        for b in bad:
            warnings.warn(f"Lamb-Dicke condition weak for beam on ion {b.ion}", ValidityWarning, stacklevel=2)
        return bad


@dataclass(frozen=True)
class SidebandTerm:
    """``coeff * sigma^+_ion * prod_q (c_q^dag)^a_q c_q^b_q``, plus h.c.

    ``freq`` is the rotating-frame frequency: the term carries
    ``exp(-i freq t)`` in the frame of the free spins and phonons.
    """

    ion: int
    create: tuple
    annihilate: tuple
    coeff: complex
    freq: float

    @property
    def order(self) -> int:
        return sum(self.create) + sum(self.annihilate)


def _times_quadrature(poly, q, weight):
    """Multiply a normal-ordered polynomial by ``weight * (c_q + c_q^dag)``."""
    out = {}
    for (a, b), c in poly.items():
        # ... * c_q
        k = (a, b[:q] + (b[q] + 1,) + b[q + 1:])
        out[k] = out.get(k, 0) + c * weight
        # ... * c_q^dag = (c^dag)^a [c^dag c^b + b c^(b-1)]
        k = (a[:q] + (a[q] + 1,) + a[q + 1:], b)
        out[k] = out.get(k, 0) + c * weight
        if b[q] > 0:
            k = (a, b[:q] + (b[q] - 1,) + b[q + 1:])
            out[k] = out.get(k, 0) + c * weight * b[q]
    return out


def kick_expansion(eta, order: int):
    """Normal-ordered Taylor expansion of ``exp(i sum_q eta_q (c_q + c_q^dag))``.

    Returns a dict ``(create, annihilate) -> coefficient`` containing the
    expansion through ``order`` powers of the kick.
    """
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    n = len(eta)
    zero = (0,) * n
    power = {(zero, zero): 1.0 + 0j}
    total = dict(power)
    for k in range(1, order + 1):
        nxt = {}
        for q in range(n):
            if eta[q] == 0:
                continue
            for key, c in _times_quadrature(power, q, 1j * eta[q] / k).items():
                nxt[key] = nxt.get(key, 0) + c
        power = nxt
        for key, c in power.items():
            total[key] = total.get(key, 0) + c
    return {k: v for k, v in total.items() if v != 0}


def sideband_expansion(beam: Beam, mode_freqs, order: int, cutoff: float | None = None):
    """Sideband terms of one beam through ``order`` powers of the Lamb-Dicke weights.

    Parameters
    ----------
    cutoff : float, optional
        Keep only terms with ``|freq| <= cutoff``.
    """
    if order not in (0, 1, 2, 3):
        raise SchemaError(f"expansion order must be 0..3, got {order}")
    eps = np.asarray(mode_freqs, dtype=float)
    if len(eps) != len(beam.eta):
        raise SchemaError("one Lamb-Dicke weight per mode required")
    terms = []
    for (a, b), c in kick_expansion(beam.eta, order).items():
        freq = beam.detuning - float(np.dot(np.subtract(a, b), eps))
        if cutoff is not None and abs(freq) > cutoff:
            continue
        terms.append(SidebandTerm(beam.ion, a, b, 0.5 * beam.rabi * c, freq))
    return terms


# --------------------------------------------------------------------------
# HOBM element: effective couplings
# --------------------------------------------------------------------------

def sideband_strengths(rabi1, rabi2, eta):
    """``f = Omega_1 eta^2`` and ``g = i Omega_2 eta``."""
    return rabi1 * eta ** 2, 1j * rabi2 * eta


def element_terms(f, g, theta, delta, d_eps, mu=0.0, exact: bool = False):
    """The five near-resonant sideband terms of an element (ions 0, 1; modes 0, 1).

    With ``exact=True`` the two-phonon terms on a single mode carry the 1/2
    of the Taylor expansion; the default follows the customary list used for
    the effective-coupling formula.
    """
    c, s = math.cos(theta), math.sin(theta)
    h = 0.5 if exact else 1.0
    return [
        SidebandTerm(0, (1, 1), (0, 0), -0.5 * f * c * s, delta + mu),
        SidebandTerm(0, (2, 0), (0, 0), -0.5 * h * f * c * c, delta + d_eps + mu),
        SidebandTerm(0, (0, 2), (0, 0), -0.5 * h * f * s * s, delta - d_eps + mu),
        SidebandTerm(1, (1, 0), (0, 0), -0.5 * g * s, delta + d_eps - mu),
        SidebandTerm(1, (0, 1), (0, 0), 0.5 * g * c, delta - mu),
    ]


def validity_ratios(f, g, theta, delta, d_eps, N):
    """Left/right ratios of the four perturbative conditions (want << 1)."""
    c, s = abs(math.cos(theta)), abs(math.sin(theta))
    f, g = abs(f), abs(g)
    near = min(abs(delta + d_eps), abs(delta - d_eps))
    return {
        "f sqrt(N) sin / 2|delta|": f * math.sqrt(N) * s / (2 * abs(delta)),
        "g cos / 2|delta|": g * c / (2 * abs(delta)),
        "f N / 2|delta +- d_eps|": f * N / (2 * near),
        "g sqrt(N) sin / 2|delta +- d_eps|": g * math.sqrt(N) * s / (2 * near),
    }


def effective_coupling(f, g, theta, delta, d_eps, N, exact: bool = False,
                       warn: bool = True, threshold: float = 0.3):
    """Flip-flop coupling ``J`` of an element from second-order perturbation.

    ``J = sqrt(N) f g* cos^2 sin [1/(4 delta) - w/(2 (delta + d_eps))]`` with
    ``w = 1`` (default list) or ``w = 1/2`` (``exact=True``).
    """
    if delta == 0 or delta + d_eps == 0:
        raise SchemaError("resonant detuning: delta and delta + d_eps must be nonzero")
    if warn:
        bad = {k: v for k, v in validity_ratios(f, g, theta, delta, d_eps, N).items() if v > threshold}
        if bad:
            warnings.warn("perturbative conditions not satisfied: " +
                          ", ".join(f"{k} = {v:.2f}" for k, v in bad.items()),
                          ValidityWarning, stacklevel=2)
    w = 0.5 if exact else 1.0
    c, s = math.cos(theta), math.sin(theta)
    return math.sqrt(N) * f * np.conj(g) * c * c * s * (1.0 / (4 * delta) - w / (2 * (delta + d_eps)))


def _element_space(N, n_up=3):
    """Two spins and two modes; gauge mode in [N-n_up, N+n_up], bus in [0, n_up]."""
    n1 = np.arange(max(0, N - n_up), N + n_up + 1)
    n2 = np.arange(0, n_up + 1)
    states = np.array(list(itertools.product((0, 1), (0, 1), n1, n2)))
    return states


def element_hamiltonian(terms, eps, detunings, N, n_up=3):
    """Static-frame dense Hamiltonian of a two-ion element.

    ``detunings`` are the two laser detunings chosen so the term frequencies
    agree with the ``freq`` stored on each term.
    """
    states = _element_space(N, n_up)
    index = {tuple(s): k for k, s in enumerate(states)}
    dim = len(states)
    H = np.zeros((dim, dim), dtype=complex)
    sz = 2 * states[:, :2] - 1
    H[np.diag_indices(dim)] = states[:, 2:] @ np.asarray(eps) - 0.5 * sz @ np.asarray(detunings)
    for t in terms:
        for k, s in enumerate(states):
            if s[t.ion] != 0:
                continue
            n = s[2:].astype(int).copy()
            amp = t.coeff
            for q in range(2):
                b, a = t.annihilate[q], t.create[q]
                if n[q] < b:
                    amp = 0
                    break
                amp *= math.sqrt(math.factorial(n[q]) / math.factorial(n[q] - b))
                n[q] -= b
                amp *= math.sqrt(math.factorial(n[q] + a) / math.factorial(n[q]))
                n[q] += a
            if amp == 0:
                continue
            tgt = s.copy()
            tgt[t.ion] = 1
            tgt[2:] = n
            j = index.get(tuple(tgt))
            if j is None:
                continue
            H[j, k] += amp
            H[k, j] += np.conj(amp)
    return H, states, index


def element_coupling_dense(f, g, theta, delta, d_eps, N, eps1=None, exact=False, n_up=3):
    """Brute-force effective coupling of an element.

    Diagonalizes the two-ion, two-mode static-frame Hamiltonian and builds
    the effective 2x2 Hamiltonian of ``|g e, N, 0>`` and ``|e g, N+1, 0>``
    from the two eigenvectors with the largest weight there (des Cloizeaux).
    Returns the coupling in the normalization of :func:`effective_coupling`.
    """
    eps1 = 1000.0 * abs(delta) if eps1 is None else eps1
    eps = np.array([eps1, eps1 + d_eps])
    det = np.array([eps[0] + eps[1] + delta, eps[1] + delta])
    H, states, index = element_hamiltonian(element_terms(f, g, theta, delta, d_eps, 0.0, exact),
                                           eps, det, N, n_up)
    a = index[(0, 1, N, 0)]
    b = index[(1, 0, N + 1, 0)]
    w, v = np.linalg.eigh(H)
    weight = np.abs(v[a]) ** 2 + np.abs(v[b]) ** 2
    pick = np.argsort(weight)[-2:]
    P = v[[a, b]][:, pick]                       # 2x2 overlaps
    u, _, vh = np.linalg.svd(P)
    S = u @ vh                                   # orthonormalized projection
    Heff = S @ np.diag(w[pick]) @ S.conj().T
    return abs(Heff[0, 1]) * math.sqrt(N / (N + 1.0))


def standing_wave_nonlinearity(rabi_sw, detuning_sw, eta_sw, theta):
    """Phonon nonlinearity of an off-resonant standing wave at an antinode.

    Returns
    -------
    V : float
        ``gamma |Omega|^2 / (4 Delta)`` with ``gamma = 2 eta^4 cos^4 theta``.
    beta : float
        Coefficient ``-2 eta^2 (1 + eta^2) cos^2 theta`` of the linear
        frequency correction (to be absorbed into the mode frequency).
    """
    if detuning_sw == 0:
        raise SchemaError("standing-wave detuning must be nonzero")
    c2 = math.cos(theta) ** 2
    scale = abs(rabi_sw) ** 2 / (4 * detuning_sw)
    gamma = 2 * eta_sw ** 4 * c2 * c2
    beta = -2 * eta_sw ** 2 * (1 + eta_sw ** 2) * c2
    return gamma * scale, beta


# --------------------------------------------------------------------------
# HOBM light-shift catalog
# --------------------------------------------------------------------------

@dataclass
class ElementParams:
    """One HOBM element (ions l, l+1) with its sideband and compensation beams."""

    rabi1: float
    rabi2: float
    eta: float
    theta: float
    delta: float
    eps1: float
    eps2: float
    N: int
    delta_c1: float | None = None       # compensation beam on ion l
    delta_c2: float | None = None       # compensation beam on ion l+1
    rabi_c1: float | None = None        # solved from the matching rule if None
    rabi_c2: float | None = None
    mismatch: float = 0.0               # fraction of the matched compensation power missing

    @property
    def d_eps(self):
        return self.eps2 - self.eps1

    @property
    def f(self):
        return self.rabi1 * self.eta ** 2

    @property
    def g(self):
        return 1j * self.rabi2 * self.eta

    @classmethod
    def surface_trap(cls, **kw):
        """Be-9 surface-trap element with its compensation beams (rad/s)."""
        two_pi = 2 * np.pi
        p = dict(rabi1=two_pi * 180e3, rabi2=two_pi * 210e3, eta=0.08, theta=0.25,
                 delta=-two_pi * 50e3, eps1=two_pi * 5e6, eps2=two_pi * (5e6 + 10e3), N=10,
                 delta_c1=two_pi * 80e3, delta_c2=two_pi * 120e3)
        p.update(kw)
        return cls(**p)


def compensation_rabi(rabi, delta, delta_c, d_eps, mismatch=0.0):
    """Rabi frequency cancelling the near-resonant ``1/(delta + d_eps)`` shift.

    Solves ``|Omega|^2/(delta + d_eps) = -|Omega_c|^2/(delta_c + d_eps)``;
    a fraction ``mismatch`` of the required power is left out.
    """
    ratio = -(delta_c + d_eps) / (delta + d_eps)
    if ratio <= 0:
        raise SchemaError("compensation detuning must sit on the other side of the sideband "
                          f"(delta + d_eps = {delta + d_eps:.4g}, delta_c + d_eps = {delta_c + d_eps:.4g})")
    return abs(rabi) * math.sqrt(ratio * (1.0 - mismatch))


@dataclass
class ShiftEntry:
    """``(sz poly in n) sigma^z_ion + (phonon poly in n)`` from one process.

    Polynomials are coefficient arrays in powers of the gauge-mode
    occupation ``n`` (constant, linear, quadratic).
    """

    name: str
    ion: int
    sz: np.ndarray
    phonon: np.ndarray = field(default_factory=lambda: np.zeros(3))


@dataclass
class ShiftCatalog:
    entries: list
    N: int

    def total(self, ion: int):
        p = np.zeros(3)
        for e in self.entries:
            if e.ion == ion:
                p = p + e.sz
        return p

    def about_offset(self, ion: int):
        """``(E, F, K)`` with shift ``E + F (n - N) + K (n - N)^2``."""
        c0, c1, c2 = self.total(ion)
        N = self.N
        return (c0 + c1 * N + c2 * N * N, c1 + 2 * c2 * N, c2)

    @property
    def E(self):
        return np.array([self.about_offset(i)[0] for i in (0, 1)])

    @property
    def F(self):
        return np.array([self.about_offset(i)[1] for i in (0, 1)])

    @property
    def K(self):
        return np.array([self.about_offset(i)[2] for i in (0, 1)])

    def __len__(self):
        return len(self.entries)


def _ion1_shifts(f, rabi, theta, delta, e1, e2, tag):
    c, s = math.cos(theta), math.sin(theta)
    c2, s2 = c * c, s * s
    f2 = abs(f) ** 2
    de = e2 - e1
    out = []
    # near-resonant second sidebands
    a = -f2 * c2 * s2 / (8 * delta)
    out.append(ShiftEntry(f"{tag}A", 0, np.array([a, a, 0.0]), np.array([0.0, -a, 0.0])))
    b = -f2 * c2 * c2 / (4 * (delta + de))
    # [(c c^dag)^2 - n (2 sz + 1)] sz = (n^2 + n + 1) sz - 2 n
    out.append(ShiftEntry(f"{tag}B", 0, np.array([b, b, b]), np.array([0.0, -2 * b, 0.0])))
    out.append(ShiftEntry(f"{tag}C", 0, np.array([-f2 * s2 * s2 / (8 * (delta - de)), 0, 0])))
    # far first sidebands and carrier
    rf = np.conj(rabi) * f
    k1 = -(rf * c2 * (delta + e1 + e2) / (4 * (delta + e2) * (delta + e2 + 2 * e1))).real
    out.append(ShiftEntry(f"{tag}F1", 0, np.array([0.5 * k1, k1, 0.0])))
    k2 = -(rf * s2 * (delta + e1 + e2) / (4 * (delta + e1) * (delta + e1 + 2 * e2))).real
    out.append(ShiftEntry(f"{tag}F2", 0, np.array([k2, 0.0, 0.0])))
    out.append(ShiftEntry(f"{tag}F3", 0, np.array([-abs(rabi) ** 2 / (4 * (delta + e1 + e2)), 0, 0])))
    return out


def _ion2_shifts(g, rabi, theta, delta, e1, e2, tag):
    c, s = math.cos(theta), math.sin(theta)
    g2 = abs(g) ** 2
    de = e2 - e1
    d = -g2 * s * s / (4 * (delta + de))
    g1 = -g2 * s * s / (4 * (delta + e1 + e2))
    return [
        ShiftEntry(f"{tag}D", 1, np.array([0.5 * d, d, 0.0])),
        ShiftEntry(f"{tag}E", 1, np.array([-g2 * c * c / (8 * delta), 0, 0])),
        ShiftEntry(f"{tag}G1", 1, np.array([0.5 * g1, g1, 0.0])),
        ShiftEntry(f"{tag}G2", 1, np.array([-g2 * c * c / (8 * (delta + 2 * e2)), 0, 0])),
        ShiftEntry(f"{tag}G3", 1, np.array([-abs(rabi) ** 2 / (4 * (delta + e1)), 0, 0])),
    ]


def ac_stark_catalog_hobm(p: ElementParams, compensate: bool = True) -> ShiftCatalog:
    """Light shifts of one element from the sideband and compensation beams.

    Ion 0 collects the second-sideband shifts of its drive, ion 1 those of
    the first-sideband drive.  With ``compensate`` the two extra beams are
    added with Rabi frequencies from :func:`compensation_rabi` unless given.
    """
    entries = []
    if p.rabi1:
        entries += _ion1_shifts(p.f, p.rabi1, p.theta, p.delta, p.eps1, p.eps2, "")
    if p.rabi2:
        entries += _ion2_shifts(p.g, p.rabi2, p.theta, p.delta, p.eps1, p.eps2, "")
    if compensate:
        if p.delta_c1 is None or p.delta_c2 is None:
            raise SchemaError("compensation needs both compensation detunings")
        r1 = p.rabi_c1 if p.rabi_c1 is not None else compensation_rabi(
            p.rabi1, p.delta, p.delta_c1, p.d_eps, p.mismatch)
        r2 = p.rabi_c2 if p.rabi_c2 is not None else compensation_rabi(
            p.rabi2, p.delta, p.delta_c2, p.d_eps, p.mismatch)
        if r1:
            entries += _ion1_shifts(r1 * p.eta ** 2, r1, p.theta, p.delta_c1, p.eps1, p.eps2, "c:")
        if r2:
            entries += _ion2_shifts(1j * r2 * p.eta, r2, p.theta, p.delta_c2, p.eps1, p.eps2, "c:")
    return ShiftCatalog(entries, p.N)


def catalog_operator(basis: Basis, F, K=None, E=None) -> SparseOperator:
    """``sum_l sum_{m=l,l+1} [E_m + F_m E_l + K_m E_l^2] sigma^z_m`` on an open chain.

    ``F``, ``K`` and ``E`` have shape ``(L-1, 2)`` (per element, per ion) or
    ``(2,)`` to use the same values for every element.  ``E_l = n_l - N`` is
    the field on link ``l``.
    """
    lat = basis.lattice
    if lat.kind not in ("hobm", "qed"):
        raise SchemaError("light-shift terms act on an open HOBM chain")
    n_el = lat.n_links

    def per_element(x):
        x = np.zeros(2) if x is None else np.asarray(x, dtype=float)
        return np.broadcast_to(x, (n_el, 2))

    F, K, E = per_element(F), per_element(K), per_element(E)
    field_ = lat.field_values(basis.links)
    sz = 2 * basis.matter - 1
    diag = np.zeros(len(basis))
    for l in range(n_el):
        for m in range(2):
            diag += (E[l, m] + F[l, m] * field_[:, l] + K[l, m] * field_[:, l] ** 2) * sz[:, l + m]
    return SparseOperator(sp.diags(diag), basis)


def build_hobm_simulator(basis: Basis, params: ModelParams, F, K=None) -> SparseOperator:
    """Ideal HOBM plus residual phonon-dependent light shifts.

    The constant parts ``E`` are taken as removed by the detuning
    adjustment, so only ``F`` (and ``K`` when compensation is imperfect)
    enter, in the same units as ``params``.
    """
    if basis.lattice.kind != "hobm":
        raise SchemaError("simulator needs an HOBM basis")
    return build_hobm(basis, params) + catalog_operator(basis, F, K)


# --------------------------------------------------------------------------
# energy-lattice QLM drive
# --------------------------------------------------------------------------

@dataclass
class QLMDrive:
    """Full drive of an ``L``-ion chain realizing the bosonic S=1/2 QLM.

    ``eta_com`` is the Lamb-Dicke parameter of the lowest axial mode; higher
    modes scale as ``sqrt(eps_1/eps_q)``.  Rabi frequencies are set so that
    every ion produces the same resonant coupling ``J``.
    """

    L: int
    J: float
    omega_z: float
    eta_com: float
    mu: float = 0.0
    n_max: int = 4
    order: int = 2
    compensate: bool = True
    modes: iontrap.NormalModes = None
    rabi: np.ndarray = None

    def __post_init__(self):
        if self.L < 2:
            raise SchemaError("QLM drive needs L >= 2")
        if self.n_max < 2:
            raise SchemaError("phonon truncation n_max must be >= 2")
        if self.order < 2:
            raise SchemaError("second sidebands need expansion order >= 2")
        if self.modes is None:
            self.modes = iontrap.axial_modes(self.L, self.omega_z)
        eta = iontrap.lamb_dicke_factors(self.modes, self.eta_com)
        self.weights = eta[None, :] * self.modes.M          # [ion, mode]
        if self.rabi is None:
            self.rabi = 2 * self.J / np.array([self.weights[l, l] * self.weights[l, self.partner(l)]
                                               for l in range(self.L)])
        self.rabi = np.asarray(self.rabi, dtype=float)

    def partner(self, l: int) -> int:
        return (l + 1) % self.L

    @property
    def eps(self):
        return self.modes.eps

    @property
    def bare_detunings(self):
        e = self.eps
        return np.array([-e[l] - e[self.partner(l)] + 2 * self.mu for l in range(self.L)])

    @property
    def detunings(self):
        d = self.bare_detunings
        if self.compensate:
            d = d - self.rabi ** 2 / (2 * d)
        return d

    def couplings(self):
        """Resonant ``J_l = Omega_l w_ll w_l,l+1 / 2``."""
        return np.array([self.rabi[l] * self.weights[l, l] * self.weights[l, self.partner(l)] / 2
                         for l in range(self.L)])

    def beams(self):
        return [Beam(l, self.rabi[l], self.detunings[l], self.weights[l], "z") for l in range(self.L)]

    def terms(self, cutoff=None):
        out = []
        for b in self.beams():
            out += sideband_expansion(b, self.eps, self.order, cutoff)
        return out

    def lattice(self) -> LatticeSpec:
        return LatticeSpec.qlm(self.L, "periodic", matter="boson", matter_n_max=self.n_max)

    def basis(self) -> Basis:
        return tensor_basis(self.lattice())


def near_resonant_reduction(drive: QLMDrive, cutoff: float | None = None):
    """Couplings of the stationary second-red-sideband terms.

    Returns ``J_l`` read off from the coefficient of
    ``sigma^+_l c_l c_{l+1}`` among terms with ``|freq| <= cutoff``
    (default ``4 max|J|`` plus ``2|mu|``).  Uses the uncompensated detunings.
    """
    cutoff = 4 * abs(drive.J) + 2 * abs(drive.mu) if cutoff is None else cutoff
    J = np.zeros(drive.L)
    for l in range(drive.L):
        b = Beam(l, drive.rabi[l], drive.bare_detunings[l], drive.weights[l], "z")
        for t in sideband_expansion(b, drive.eps, drive.order, cutoff):
            ann = [0] * drive.L
            ann[l] += 1
            ann[drive.partner(l)] += 1
            if sum(t.create) == 0 and list(t.annihilate) == ann:
                J[l] = -t.coeff.real
    return J


def _apply_monomial(basis: Basis, term: SidebandTerm, n_max: int):
    """Rows, cols and amplitudes of ``sigma^+ (c^dag)^a c^b`` on a QLM tensor basis."""
    spin = basis.links[:, term.ion]
    n = basis.matter.astype(np.int64)
    ok = spin == 0
    amp = np.ones(len(basis))
    new = n.copy()
    for q, (a, b) in enumerate(zip(term.create, term.annihilate)):
        if a == 0 and b == 0:
            continue
        nq = new[:, q]
        ok &= nq >= b
        m = np.maximum(nq - b, 0)
        amp *= np.sqrt([math.factorial(x) / math.factorial(max(x - b, 0)) for x in nq]) if b else 1.0
        ok &= m + a <= n_max
        amp *= np.sqrt([math.factorial(x + a) / math.factorial(x) for x in m]) if a else 1.0
        new[:, q] = m + a
    src = np.nonzero(ok)[0]
    links = basis.links[src].copy()
    links[:, term.ion] = 1
    tgt = basis.find(basis.encode(new[src], links))
    if np.any(tgt < 0):
        raise SchemaError("monomial leaves the tensor basis")
    return tgt, src, amp[src]


def _drive_pieces(drive: QLMDrive, basis: Basis):
    terms = drive.terms()
    ops = []
    for t in terms:
        r, c, a = _apply_monomial(basis, t, drive.n_max)
        ops.append((t, sp.csr_matrix((a, (r, c)), shape=(len(basis),) * 2)))
    n = basis.matter.astype(float)
    sz = 2.0 * basis.links - 1.0
    return ops, n, sz


def qlm_drive_hamiltonian(drive: QLMDrive, basis: Basis | None = None, real: bool = True):
    """Static-frame Hamiltonian of the full drive on spins x truncated phonons.

    With ``real=True`` the phonon phases ``|n> -> i^n |n>`` are applied,
    which makes the matrix real symmetric without changing any population.
    """
    basis = drive.basis() if basis is None else basis
    ops, n, sz = _drive_pieces(drive, basis)
    diag = n @ drive.eps - 0.5 * sz @ drive.detunings
    H = sp.diags(diag).astype(complex).tocsr()
    for t, op in ops:
        c = t.coeff
        if real:
            c = c * 1j ** (sum(t.create) - sum(t.annihilate))
        H = H + c * op + np.conj(c) * op.T
    if real:
        if abs(H.imag).max() > 1e-9 * abs(H.real).max():
            raise SchemaError("phonon phase rotation did not produce a real matrix")
        H = H.real.tocsr()
    return SparseOperator(H, basis)


class DriveGenerator:
    """Interaction-picture ``H(t)`` of the full drive (frame of ``H0``)."""

    def __init__(self, drive: QLMDrive, basis: Basis | None = None):
        self.drive = drive
        self.basis = drive.basis() if basis is None else basis
        ops, n, sz = _drive_pieces(drive, self.basis)
        mats, coeffs, freqs = [], [], []
        for t, op in ops:
            mats += [op, op.T.tocsr()]
            coeffs += [t.coeff, np.conj(t.coeff)]
            freqs += [t.freq, -t.freq]
        self.terms = TermSum(mats, len(self.basis))
        self.coeffs = np.array(coeffs)
        self.freqs = np.array(freqs)
        self._norm = float(np.sum(np.abs(self.coeffs)) * math.sqrt(drive.n_max + 1) ** drive.order)

    def coefficients(self, t):
        return self.coeffs * np.exp(-1j * self.freqs * t)

    def matvec(self, t, x):
        return self.terms.matvec(self.coefficients(t), x)

    def norm_estimate(self, t=0.0):
        return self._norm

    def assemble(self, t):
        return self.terms.assemble(self.coefficients(t))

    def frame_phase(self, t):
        """Diagonal of ``exp(i H0 t)`` mapping static-frame to interaction-picture states."""
        n = self.basis.matter.astype(float)
        sz = 2.0 * self.basis.links - 1.0
        h0 = n @ self.drive.eps - 0.5 * sz @ self.drive.detunings
        return np.exp(1j * h0 * t)


def carrier_shift(drive: QLMDrive):
    """Carrier light shift per ion, coefficient of ``sigma^z_l``."""
    d = drive.bare_detunings
    return -drive.rabi ** 2 / (4 * d)


def ac_stark_catalog_qlm(drive: QLMDrive):
    """First-sideband shifts ``E^{+-}_{lq} = Omega_l^2 w_lq^2 / (4 (Delta_l +- eps_q))``.

    Returns ``(E_minus, E_plus)`` arrays of shape ``(L, L)``; the phonon
    dependent shift is ``-sum (E^- + E^+) n_q sigma^z_l``.
    """
    d = drive.bare_detunings[:, None]
    e = drive.eps[None, :]
    if np.any(np.isclose(d - e, 0)) or np.any(np.isclose(d + e, 0)):
        raise SchemaError("first sideband resonant with a drive")
    w2 = (drive.rabi[:, None] * drive.weights) ** 2
    return w2 / (4 * (d - e)), w2 / (4 * (d + e))


def qlm_shift_operator(drive: QLMDrive, basis: Basis) -> SparseOperator:
    """``-sum_lq (E^- + E^+) n_q sigma^z_l`` on a QLM basis."""
    Em, Ep = ac_stark_catalog_qlm(drive)
    n = basis.matter.astype(float)
    sz = 2.0 * basis.links - 1.0
    diag = -np.einsum("kl,lq,kq->k", sz, Em + Ep, n)
    return SparseOperator(sp.diags(diag), basis)


def ideal_qlm(drive: QLMDrive, charge=None):
    """Gauss-sector bosonic QLM with the drive's ``J`` and ``mu``."""
    lat = drive.lattice()
    basis = enumerate_gauge_sector(lat)
    return basis, build_qlm(basis, ModelParams(J=drive.J, mu=drive.mu), form="bosonic")
