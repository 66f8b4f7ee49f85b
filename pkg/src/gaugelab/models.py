"""Hamiltonians, observables and initial states for the three lattice models.

All builders accept any :class:`~gaugelab.hilbert.Basis`, so the same code
assembles operators on a Gauss-law sector and on the full tensor space (the
latter is what the gauge-commutator checks use).

Mass energy is measured from the bare staggered vacuum: each particle or
anti-particle costs ``mu`` and the empty lattice has zero mass energy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import SchemaError
from .hilbert import (Basis, BasisState, Boson, LatticeSpec, Rotor, SpinHalf,
                      apply_hop, staggered_charge)
from .operators import SparseOperator, diagonal_operator


@dataclass(frozen=True)
class ModelParams:
    """Couplings in units of the hopping scale unless stated otherwise.

    Attributes
    ----------
    J : float
        Gauge-matter hopping, J >= 0.
    mu : float
        Staggered mass.
    V : float
        Electric energy, V >= 0.
    N : int, optional
        Boson offset of the highly occupied boson model (N >= 1).
    alpha : float, optional
        Background field; if given it must agree with the lattice.
    variant : str
        Free-form tag recorded in metadata.
    """

    J: float = 1.0
    mu: float = 0.0
    V: float = 0.0
    N: int | None = None
    alpha: float | None = None
    variant: str = ""

    def __post_init__(self):
        for name in ("J", "mu", "V"):
            if not np.isfinite(getattr(self, name)):
                raise SchemaError(f"{name} must be finite")
        if self.J < 0 or self.V < 0:
            raise SchemaError(f"need J >= 0 and V >= 0, got J={self.J}, V={self.V}")
        if self.N is not None and self.N < 1:
            raise SchemaError(f"boson offset N must be >= 1, got {self.N}")

    @property
    def g(self) -> float:
        """Continuum coupling g = 2 sqrt(J V)."""
        return 2.0 * math.sqrt(self.J * self.V)

    @property
    def m(self) -> float:
        return self.mu


def _check_alpha(basis: Basis, p: ModelParams):
    if p.alpha is not None and not np.isclose(p.alpha, basis.lattice.alpha):
        raise SchemaError(f"params alpha={p.alpha} differs from lattice alpha={basis.lattice.alpha}")


def _hopping(basis: Basis, amplitude):
    """Off-diagonal part from the hopping moves.

    ``amplitude(l, before)`` returns the matrix element for raising link ``l``
    from the configurations described by ``before`` (see ``apply_hop``).
    """
    lat = basis.lattice
    rows, cols, vals = [], [], []
    for l in range(lat.n_links):
        mask, m2, k2, before = apply_hop(lat, basis.matter, basis.links, l, True)
        if not mask.any():
            continue
        src = np.nonzero(mask)[0]
        tgt = basis.find(basis.encode(m2[mask], k2[mask]))
        if np.any(tgt < 0):
            raise SchemaError("basis is not closed under the hopping term")
        amp = amplitude(l, tuple(b[mask] for b in before))
        rows += [src, tgt]
        cols += [tgt, src]
        vals += [amp, np.conj(amp)]
    n = len(basis)
    if not rows:
        return sp.csr_matrix((n, n), dtype=complex)
    return sp.csr_matrix((np.concatenate(vals).astype(complex),
                          (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))


def mass_energy(basis: Basis):
    """Number of (anti)particles times one, per basis state."""
    lat = basis.lattice
    if isinstance(lat.link, SpinHalf):
        return basis.matter.sum(axis=1).astype(float)
    return np.abs(staggered_charge(lat, basis.matter)).sum(axis=1).astype(float)


def electric_energy(basis: Basis, alpha=None):
    """``sum_links (E + alpha)^2`` per basis state."""
    lat = basis.lattice
    a = lat.alpha if alpha is None else alpha
    return ((lat.field_values(basis.links) + a) ** 2).sum(axis=1)


def build_qed(basis: Basis, p: ModelParams) -> SparseOperator:
    """Rotor lattice QED, ``U|n> = |n+1>`` with ``U|cutoff> = 0``."""
    if not isinstance(basis.lattice.link, Rotor):
        raise SchemaError("build_qed needs rotor links")
    _check_alpha(basis, p)
    hop = _hopping(basis, lambda l, b: np.full(len(b[0]), -p.J, dtype=complex))
    diag = p.mu * mass_energy(basis) + p.V * electric_energy(basis)
    return SparseOperator(hop + sp.diags(diag), basis)


def build_hobm(basis: Basis, p: ModelParams) -> SparseOperator:
    """Highly occupied boson model with ``U = a^dagger / sqrt(N)``."""
    lat = basis.lattice
    if not isinstance(lat.link, Boson):
        raise SchemaError("build_hobm needs boson links")
    N = lat.link.offset if p.N is None else p.N
    if N != lat.link.offset:
        raise SchemaError(f"params N={p.N} differs from basis offset {lat.link.offset}")
    if N < 1:
        raise SchemaError("HOBM needs N >= 1")
    _check_alpha(basis, p)
    hop = _hopping(basis, lambda l, b: -p.J * np.sqrt((b[0] + 1.0) / N))
    diag = p.mu * mass_energy(basis) + p.V * electric_energy(basis)
    return SparseOperator(hop + sp.diags(diag), basis)


def build_qlm(basis: Basis, p: ModelParams, form: str = "bosonic") -> SparseOperator:
    """S=1/2 quantum link model after the staggered rotation.

    ``form="spin"`` uses ``-J sum (tau^- s^+ tau^- + h.c.)`` and
    ``form="bosonic"`` uses ``-J sum (c s^+ c + h.c.)``; the mass term is
    ``mu`` times the matter occupation in both.
    """
    lat = basis.lattice
    if not isinstance(lat.link, SpinHalf):
        raise SchemaError("build_qlm needs spin-1/2 links")
    if form not in ("spin", "bosonic"):
        raise SchemaError(f"unknown QLM form {form!r}")
    if form == "spin" and lat.matter != "spin":
        raise SchemaError("spin form needs spin matter")
    if form == "bosonic" and lat.matter == "boson":
        amp = lambda l, b: -p.J * np.sqrt(b[1] * b[2]).astype(complex)  # noqa: E731
    else:
        amp = lambda l, b: np.full(len(b[0]), -p.J, dtype=complex)  # noqa: E731
    hop = _hopping(basis, amp)
    return SparseOperator(hop + sp.diags(p.mu * mass_energy(basis)), basis)


def build_model(basis: Basis, p: ModelParams, form: str = "bosonic") -> SparseOperator:
    kind = basis.lattice.kind
    if kind == "qed":
        return build_qed(basis, p)
    if kind == "hobm":
        return build_hobm(basis, p)
    return build_qlm(basis, p, form)


# --------------------------------------------------------------------------
# observables
# --------------------------------------------------------------------------

def electric_values(basis: Basis):
    """Space-averaged field per basis state (diagonal of the observable)."""
    lat = basis.lattice
    if isinstance(lat.link, SpinHalf):
        sign = np.array([(-1) ** l for l in range(1, lat.n_links + 1)])
        return (2 * basis.links - 1) @ sign / lat.L
    return lat.field_values(basis.links).mean(axis=1)


def electric_observable(basis: Basis) -> SparseOperator:
    return diagonal_operator(electric_values(basis), basis)


def charge_operator(basis: Basis) -> SparseOperator:
    """Total staggered charge (QED/HOBM) or matter number (QLM)."""
    lat = basis.lattice
    if isinstance(lat.link, SpinHalf):
        return diagonal_operator(basis.matter.sum(axis=1), basis)
    return diagonal_operator(staggered_charge(lat, basis.matter).sum(axis=1), basis)


def boundary_weight(psi, basis: Basis) -> float:
    """Probability on states with a link at an artificial truncation edge."""
    lat = basis.lattice
    lo, hi = lat.link_bounds
    if isinstance(lat.link, SpinHalf):
        return 0.0
    edge = basis.links == hi
    if isinstance(lat.link, Rotor) or lo > 0:
        edge |= basis.links == lo
    return float(np.sum(np.abs(psi) ** 2 * edge.any(axis=1)))


# --------------------------------------------------------------------------
# initial states
# --------------------------------------------------------------------------

def _vacuum_bits(L):
    # odd sites up, even sites down
    return np.array([1 if i % 2 == 1 else 0 for i in range(1, L + 1)], dtype=np.int64)


def string_configuration(lattice: LatticeSpec) -> BasisState:
    """Anti-charge on site 1, charge on site L, flux -1 on every link."""
    if lattice.boundary != "open" or isinstance(lattice.link, SpinHalf):
        raise SchemaError("string state needs an open rotor or boson chain")
    bits = _vacuum_bits(lattice.L)
    bits[0] = 0
    bits[-1] = 1
    links = lattice.stored_link(np.full(lattice.n_links, -1))
    return BasisState(tuple(int(b) for b in bits), tuple(int(v) for v in links))


def two_meson_configuration(lattice: LatticeSpec) -> BasisState:
    """Meson on sites (1, 2) and on sites (L-1, L); flux -1 inside each."""
    if lattice.L < 4:
        raise SchemaError("two mesons need L >= 4")
    bits = _vacuum_bits(lattice.L)
    bits[[0, -2]] = 0
    bits[[1, -1]] = 1
    E = np.zeros(lattice.n_links, dtype=int)
    E[[0, -1]] = -1
    return BasisState(tuple(int(b) for b in bits), tuple(int(v) for v in lattice.stored_link(E)))


def _state_vector(basis: Basis, state: BasisState):
    try:
        return basis.vector(state)
    except KeyError:
        raise SchemaError("requested product state lies outside the basis "
                          "(check the truncation window)") from None


def string_state(basis: Basis):
    return _state_vector(basis, string_configuration(basis.lattice))


def two_meson_state(basis: Basis):
    return _state_vector(basis, two_meson_configuration(basis.lattice))


def qlm_configuration(lattice: LatticeSpec, pattern: str) -> BasisState:
    """Product state from link letters ``g``/``e`` with empty matter sites.

    ``"gege"`` puts link ``l`` in ``e`` (s^z = +1/2) for even ``l``.
    """
    if len(pattern) != lattice.n_links or set(pattern) - {"g", "e"}:
        raise SchemaError(f"pattern must have {lattice.n_links} letters from 'g', 'e'")
    links = tuple(1 if c == "e" else 0 for c in pattern)
    return BasisState((0,) * lattice.L, links)


def qlm_state(basis: Basis, pattern: str):
    return _state_vector(basis, qlm_configuration(basis.lattice, pattern))


# --------------------------------------------------------------------------
# classical (J = 0) energetics of static charges
# --------------------------------------------------------------------------

def configuration_energy(charges, mu: float, V: float, alpha: float = 0.0) -> float:
    """Energy of static charges on an open chain with zero incoming field."""
    q = np.asarray(charges, dtype=float)
    E = np.cumsum(q)[:-1]
    return float(mu * np.abs(q).sum() + V * ((E + alpha) ** 2).sum())


def string_charges(L: int):
    q = np.zeros(L)
    q[0], q[-1] = -1, 1
    return q


def two_meson_charges(L: int):
    q = np.zeros(L)
    q[[0, -2]] = -1
    q[[1, -1]] = 1
    return q


def string_breaking_length(mu: float, V: float, L_max: int = 10_000) -> int:
    """Smallest chain length at which two mesons cost no more than the string."""
    if V <= 0:
        raise SchemaError("string breaking length needs V > 0")
    for L in range(4, L_max + 1):
        e_s = configuration_energy(string_charges(L), mu, V)
        e_m = configuration_energy(two_meson_charges(L), mu, V)
        if e_m <= e_s + 1e-12 * max(1.0, abs(e_s)):
            return L
    raise SchemaError(f"no string breaking below L = {L_max}")
