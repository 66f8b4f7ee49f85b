"""Lattice Hilbert spaces, Gauss-law sectors and gauge-field elimination.

Conventions
-----------
Sites are labelled ``i = 1..L`` in the physics formulas and ``0..L-1`` in
arrays.  Site 1 is odd.  Matter spins are stored as bits (1 = up).  The
staggered charge of site ``i`` is ``q_i = (tau^z_i + (-1)^i) / 2``, i.e. an
up spin on an even site is a charge and a down spin on an odd site an
anti-charge.

Open chains carry ``L - 1`` links.  The field entering site 1 from the left
is fixed to zero, so the Gauss law on sites ``1..L-1`` determines every link
and the flux leaving site ``L`` is free (it equals the total charge).
Periodic chains (spin-1/2 links only) carry ``L`` links, link ``l`` joining
sites ``l`` and ``l + 1 (mod L)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
import scipy.sparse as sp

from .errors import CapacityError, SchemaError

DEFAULT_CAP = 20_000_000


# --------------------------------------------------------------------------
# link kinds and lattice
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Rotor:
    """Compact U(1) rotor truncated to ``n in [-cutoff, cutoff]``."""

    cutoff: int

    def bounds(self):
        return -self.cutoff, self.cutoff


@dataclass(frozen=True)
class Boson:
    """Boson mode around occupation ``offset``, kept in ``[n_min, n_max]``."""

    offset: int
    n_max: int
    n_min: int = 0

    def bounds(self):
        return self.n_min, self.n_max


@dataclass(frozen=True)
class SpinHalf:
    """Spin-1/2 link; stored values 0 (s^z = -1/2) and 1 (s^z = +1/2)."""

    def bounds(self):
        return 0, 1


LinkKind = Union[Rotor, Boson, SpinHalf]


def default_rotor_cutoff(L: int, alpha: float = 0.0) -> int:
    return 1 + math.ceil(L / 4) + math.ceil(abs(alpha * L))


def default_boson_window(N: int, L: int) -> tuple[int, int]:
    w = 1 + math.ceil(L / 4)
    return max(0, N - w), N + w


@dataclass(frozen=True)
class LatticeSpec:
    """Geometry, link truncation and background field of a 1D lattice.

    Parameters
    ----------
    L : int
        Number of matter sites (even).
    link : Rotor | Boson | SpinHalf
    boundary : {"open", "periodic"}
    alpha : float
        Background field in units of the elementary flux.
    matter : {"spin", "boson"}
        Matter encoding; ``"boson"`` is the bosonic quantum-link form.
    matter_n_max : int
        Occupation cutoff for bosonic matter.
    """

    L: int
    link: LinkKind
    boundary: str = "open"
    alpha: float = 0.0
    matter: str = "spin"
    matter_n_max: int = 1

    def __post_init__(self):
        if not isinstance(self.L, (int, np.integer)) or self.L < 2:
            raise SchemaError(f"L must be an integer >= 2, got {self.L!r}")
        if self.L % 2:
            raise SchemaError(f"staggered lattices need even L, got {self.L}")
        if self.boundary not in ("open", "periodic"):
            raise SchemaError(f"unknown boundary {self.boundary!r}")
        if self.boundary == "periodic" and not isinstance(self.link, SpinHalf):
            raise SchemaError("periodic boundary is only supported for spin-1/2 links")
        if isinstance(self.link, Rotor) and self.link.cutoff < 1:
            raise SchemaError("rotor cutoff must be >= 1")
        if isinstance(self.link, Boson):
            b = self.link
            if not (0 <= b.n_min <= b.offset <= b.n_max):
                raise SchemaError(f"need 0 <= n_min <= N <= n_max, got {b}")
        if self.matter not in ("spin", "boson"):
            raise SchemaError(f"unknown matter encoding {self.matter!r}")
        if self.matter == "boson" and self.matter_n_max < 1:
            raise SchemaError("bosonic matter needs n_max_matter >= 1")
        if self.matter == "boson" and not isinstance(self.link, SpinHalf):
            raise SchemaError("bosonic matter is only defined for the quantum link model")

    # constructors -------------------------------------------------------
    @classmethod
    def qed(cls, L, cutoff=None, alpha=0.0):
        if cutoff is None:
            cutoff = default_rotor_cutoff(L, alpha)
        return cls(L, Rotor(int(cutoff)), "open", alpha)

    @classmethod
    def hobm(cls, L, N, n_max=None, n_min=None, alpha=0.0):
        lo, hi = default_boson_window(N, L)
        return cls(L, Boson(int(N), int(hi if n_max is None else n_max),
                            int(lo if n_min is None else n_min)), "open", alpha)

    @classmethod
    def qlm(cls, L, boundary="periodic", matter="spin", matter_n_max=1):
        return cls(L, SpinHalf(), boundary, 0.0, matter, matter_n_max)

    # derived quantities -------------------------------------------------
    @property
    def kind(self) -> str:
        return {Rotor: "qed", Boson: "hobm", SpinHalf: "qlm"}[type(self.link)]

    @property
    def n_links(self) -> int:
        return self.L if self.boundary == "periodic" else self.L - 1

    @property
    def link_bounds(self) -> tuple[int, int]:
        return self.link.bounds()

    @property
    def matter_levels(self) -> int:
        return self.matter_n_max + 1 if self.matter == "boson" else 2

    @property
    def n_gauss_sites(self) -> int:
        """Sites on which the Gauss law is imposed."""
        return self.L if isinstance(self.link, SpinHalf) else self.L - 1

    def field_values(self, links):
        """Electric field carried by stored link values."""
        links = np.asarray(links)
        if isinstance(self.link, Rotor):
            return links.astype(float)
        if isinstance(self.link, Boson):
            return (links - self.link.offset).astype(float)
        return links - 0.5

    def stored_link(self, E):
        """Inverse of :meth:`field_values` for integer fields (rotor/boson)."""
        if isinstance(self.link, Boson):
            return np.asarray(E) + self.link.offset
        if isinstance(self.link, SpinHalf):
            return (np.asarray(E) + 0.5).astype(int)
        return np.asarray(E)

    def with_alpha(self, alpha):
        return LatticeSpec(self.L, self.link, self.boundary, alpha, self.matter, self.matter_n_max)


def staggered_charge(lattice: LatticeSpec, matter):
    """Staggered charge per site for matter bits (rows = states)."""
    odd = (np.arange(1, lattice.L + 1) % 2 == 1).astype(np.int64)
    return np.asarray(matter, dtype=np.int64) - odd


# --------------------------------------------------------------------------
# bases
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BasisState:
    matter: tuple
    links: tuple


class Basis:
    """Ordered list of product configurations with a key index.

    The packed key uses matter digits (site 1 most significant) followed by
    link digits.  States are sorted by key, which gives a deterministic
    lexicographic order.
    """

    def __init__(self, lattice: LatticeSpec, matter, links, physical: bool):
        self.lattice = lattice
        lo, hi = lattice.link_bounds
        self._radix = np.array([lattice.matter_levels] * lattice.L
                               + [hi - lo + 1] * lattice.n_links, dtype=object)
        total = 1
        for r in self._radix:
            total *= int(r)
        if total >= 2 ** 62:
            raise CapacityError("configuration space too large for 64-bit keys")
        self._weights = np.ones(len(self._radix), dtype=np.int64)
        for k in range(len(self._radix) - 2, -1, -1):
            self._weights[k] = self._weights[k + 1] * int(self._radix[k + 1])
        matter = np.asarray(matter, dtype=np.int64).reshape(-1, lattice.L)
        links = np.asarray(links, dtype=np.int64).reshape(-1, lattice.n_links)
        keys = self.encode(matter, links)
        order = np.argsort(keys, kind="stable")
        self.matter = matter[order]
        self.links = links[order]
        self.keys = keys[order]
        if len(self.keys) > 1 and np.any(np.diff(self.keys) == 0):
            raise ValueError("duplicate configurations in basis")
        self.physical = physical
        for a in (self.matter, self.links, self.keys):
            a.setflags(write=False)

    def encode(self, matter, links):
        lo = self.lattice.link_bounds[0]
        digits = np.concatenate([np.asarray(matter, dtype=np.int64).reshape(-1, self.lattice.L),
                                 np.asarray(links, dtype=np.int64).reshape(-1, self.lattice.n_links) - lo],
                                axis=1)
        return digits @ self._weights

    def find(self, keys):
        """Row index of each key, -1 where absent."""
        keys = np.asarray(keys, dtype=np.int64)
        pos = np.searchsorted(self.keys, keys)
        pos = np.clip(pos, 0, max(len(self.keys) - 1, 0))
        if len(self.keys) == 0:
            return np.full(keys.shape, -1)
        return np.where(self.keys[pos] == keys, pos, -1)

    def index(self, state: BasisState) -> int:
        k = self.encode(np.array(state.matter), np.array(state.links))[0]
        i = int(self.find(np.array([k]))[0])
        if i < 0:
            raise KeyError(f"{state} is not in the basis")
        return i

    def state(self, k: int) -> BasisState:
        return BasisState(tuple(int(v) for v in self.matter[k]), tuple(int(v) for v in self.links[k]))

    def vector(self, state: BasisState):
        v = np.zeros(len(self), dtype=np.complex128)
        v[self.index(state)] = 1.0
        return v

    @property
    def states(self):
        return [self.state(k) for k in range(len(self))]

    @property
    def dim(self) -> int:
        return len(self.keys)

    def __len__(self):
        return len(self.keys)

    def __repr__(self):
        return f"{type(self).__name__}(L={self.lattice.L}, kind={self.lattice.kind}, dim={len(self)})"


class GaugeBasis(Basis):
    """Basis of physical (Gauss-law satisfying) product states."""

    def __init__(self, lattice, matter, links):
        super().__init__(lattice, matter, links, physical=True)


def _matter_table(L: int, levels: int = 2):
    """All matter configurations, site 1 most significant."""
    idx = np.arange(levels ** L, dtype=np.int64)
    return np.stack(np.unravel_index(idx, (levels,) * L), axis=1).astype(np.int64)


def enumerate_gauge_sector(lattice: LatticeSpec, charge: int | None = None,
                           cap: int = DEFAULT_CAP) -> GaugeBasis:
    """Physical states of ``lattice``.

    Parameters
    ----------
    charge : int, optional
        Restrict open chains to a total staggered charge (0 selects the
        neutral sector used by the string and Coleman experiments).
    cap : int
        Refuse to enumerate more candidate configurations than this.
    """
    L = lattice.L
    if isinstance(lattice.link, SpinHalf):
        nl = lattice.n_links
        if 2 ** nl > cap:
            raise CapacityError(f"2^{nl} link configurations exceed cap {cap}")
        links = _matter_table(nl, 2)
        s = links - 0.5
        occ = np.zeros((len(links), L))
        for l in range(nl):
            occ[:, l] -= s[:, l]
            occ[:, (l + 1) % L] -= s[:, l]
        ok = (occ >= 0) & (occ <= lattice.matter_levels - 1)
        keep = ok.all(axis=1)
        return GaugeBasis(lattice, np.rint(occ[keep]).astype(np.int64), links[keep])

    if 2 ** L > cap:
        raise CapacityError(f"2^{L} matter configurations exceed cap {cap}")
    matter = _matter_table(L)
    q = staggered_charge(lattice, matter)
    E = np.cumsum(q, axis=1)[:, :L - 1]
    stored = lattice.stored_link(E)
    lo, hi = lattice.link_bounds
    keep = np.all((stored >= lo) & (stored <= hi), axis=1)
    if charge is not None:
        keep &= q.sum(axis=1) == charge
    return GaugeBasis(lattice, matter[keep], stored[keep])


def tensor_basis(lattice: LatticeSpec, cap: int = DEFAULT_CAP) -> Basis:
    """Every product configuration, Gauss law ignored."""
    lo, hi = lattice.link_bounds
    shape = (lattice.matter_levels,) * lattice.L + (hi - lo + 1,) * lattice.n_links
    total = int(np.prod(shape, dtype=object))
    if total > cap:
        raise CapacityError(f"tensor space of dimension {total} exceeds cap {cap}")
    digits = np.stack(np.unravel_index(np.arange(total, dtype=np.int64), shape), axis=1)
    return Basis(lattice, digits[:, :lattice.L], digits[:, lattice.L:] + lo, physical=False)


# --------------------------------------------------------------------------
# hopping moves (shared by the operator builders and closure search)
# --------------------------------------------------------------------------

def link_sites(lattice: LatticeSpec, l: int) -> tuple[int, int]:
    return l, (l + 1) % lattice.L


def apply_hop(lattice: LatticeSpec, matter, links, l: int, raise_link: bool):
    """Apply the gauge-matter hopping on link ``l`` to many configurations.

    For rotor/boson links the move is ``tau^+_l U tau^-_{l+1}`` (raise) or its
    conjugate.  For spin-1/2 links in the quantum-link form it is
    ``c_l s^+ c_{l+1}`` (raise) or its conjugate.

    Returns
    -------
    mask, matter_new, links_new, before
        ``before`` holds the link value prior to the move and, for bosonic
        matter, the two matter occupations prior to the move.
    """
    a, b = link_sites(lattice, l)
    lo, hi = lattice.link_bounds
    m = np.array(matter, copy=True)
    k = np.array(links, copy=True)
    before = (k[:, l].copy(), m[:, a].copy(), m[:, b].copy())
    if isinstance(lattice.link, SpinHalf):
        top = lattice.matter_levels - 1
        if raise_link:
            mask = (m[:, a] >= 1) & (m[:, b] >= 1) & (k[:, l] == 0)
            if a == b:
                mask &= m[:, a] >= 2
            m[mask, a] -= 1
            m[mask, b] -= 1
            k[mask, l] = 1
        else:
            mask = (m[:, a] < top) & (m[:, b] < top) & (k[:, l] == 1)
            m[mask, a] += 1
            m[mask, b] += 1
            k[mask, l] = 0
    else:
        if raise_link:
            mask = (m[:, a] == 0) & (m[:, b] == 1) & (k[:, l] < hi)
            m[mask, a] = 1
            m[mask, b] = 0
            k[mask, l] += 1
        else:
            mask = (m[:, a] == 1) & (m[:, b] == 0) & (k[:, l] > lo)
            m[mask, a] = 0
            m[mask, b] = 1
            k[mask, l] -= 1
    return mask, m, k, before


def reachable_basis(lattice: LatticeSpec, seeds: list[BasisState], cap: int = DEFAULT_CAP) -> Basis:
    """Closure of ``seeds`` under all hopping moves.

    No Gauss-law knowledge is used, so the resulting basis is a subspace of
    the full tensor space on which gauge violations could show up if a
    Hamiltonian term broke the constraint.
    """
    matter = np.array([s.matter for s in seeds], dtype=np.int64).reshape(-1, lattice.L)
    links = np.array([s.links for s in seeds], dtype=np.int64).reshape(-1, lattice.n_links)
    probe = Basis(lattice, matter[:1], links[:1], physical=False)
    seen = {}
    for mm, kk, key in zip(matter, links, probe.encode(matter, links)):
        seen[int(key)] = (mm, kk)
    frontier_m, frontier_k = matter, links
    while len(frontier_m):
        new_m, new_k = [], []
        for l in range(lattice.n_links):
            for up in (True, False):
                mask, m2, k2, _ = apply_hop(lattice, frontier_m, frontier_k, l, up)
                if not mask.any():
                    continue
                m2, k2 = m2[mask], k2[mask]
                for mm, kk, key in zip(m2, k2, probe.encode(m2, k2)):
                    key = int(key)
                    if key not in seen:
                        seen[key] = (mm, kk)
                        new_m.append(mm)
                        new_k.append(kk)
                        if len(seen) > cap:
                            raise CapacityError("closure exceeds dimension cap")
        frontier_m = np.array(new_m, dtype=np.int64).reshape(-1, lattice.L)
        frontier_k = np.array(new_k, dtype=np.int64).reshape(-1, lattice.n_links)
    vals = list(seen.values())
    return Basis(lattice, np.array([v[0] for v in vals]), np.array([v[1] for v in vals]), physical=False)


# --------------------------------------------------------------------------
# Gauss law
# --------------------------------------------------------------------------

def gauss_values(basis: Basis):
    """Eigenvalue of every G_i on every product state, shape (dim, n_sites)."""
    lat = basis.lattice
    L = lat.L
    if isinstance(lat.link, SpinHalf):
        s = basis.links - 0.5
        g = basis.matter.astype(float).copy()
        for l in range(lat.n_links):
            a, b = link_sites(lat, l)
            g[:, a] += s[:, l]
            g[:, b] += s[:, l]
        return g
    q = staggered_charge(lat, basis.matter).astype(float)
    E = lat.field_values(basis.links)
    E_left = np.concatenate([np.zeros((len(E), 1)), E[:, :-1]], axis=1)
    return q[:, :L - 1] - (E - E_left)


def gauss_operators(basis: Basis):
    """Diagonal sparse matrices of each G_i on ``basis``."""
    g = gauss_values(basis)
    return [sp.diags(g[:, i]).tocsr() for i in range(g.shape[1])]


def gauss_violation(psi, basis_or_lattice) -> np.ndarray:
    """Per-site ``||G_i psi||^2``.

    ``basis_or_lattice`` is the basis the amplitudes refer to; a bare
    :class:`LatticeSpec` selects its full tensor basis.
    """
    basis = basis_or_lattice
    if isinstance(basis, LatticeSpec):
        basis = tensor_basis(basis)
    psi = np.asarray(psi)
    if psi.shape[0] != len(basis):
        raise SchemaError(f"state has length {psi.shape[0]}, basis has dimension {len(basis)}")
    w = np.abs(psi) ** 2
    return w @ gauss_values(basis) ** 2


# --------------------------------------------------------------------------
# gauge-field elimination
# --------------------------------------------------------------------------

@dataclass
class SpinModelSpec:
    """Matter-only model obtained by integrating out the links.

    The diagonal energy of a spin configuration ``tau in {-1, +1}^L`` is
    ``sum_{j<k} couplings[j, k] tau_j tau_k + sum_j fields[j] tau_j + constant``.
    Hopping between sites ``l`` and ``l+1`` has amplitude ``-J`` times
    :meth:`hopping_factor` of the field on link ``l`` before the move.
    """

    L: int
    kind: str
    J: float
    couplings: np.ndarray
    fields: np.ndarray
    constant: float
    N: int | None = None
    link_window: tuple = (None, None)
    metadata: dict = field(default_factory=dict)

    def hopping_factor(self, E):
        E = np.asarray(E, dtype=float)
        if self.kind == "qed":
            return np.ones_like(E)
        return np.sqrt((self.N + E + 1.0) / self.N)

    def energy(self, tau):
        tau = np.asarray(tau, dtype=float)
        return np.einsum("...j,jk,...k->...", tau, np.triu(self.couplings, 1), tau) \
            + tau @ self.fields + self.constant

    def configurations(self, charge: int | None = None):
        """Allowed matter bit configurations and their link fields."""
        bits = _matter_table(self.L)
        odd = (np.arange(1, self.L + 1) % 2 == 1).astype(np.int64)
        q = bits - odd
        E = np.cumsum(q, axis=1)[:, :self.L - 1]
        lo, hi = self.link_window
        keep = np.ones(len(bits), bool)
        if lo is not None:
            keep &= E.min(axis=1, initial=0) >= lo
        if hi is not None:
            keep &= E.max(axis=1, initial=0) <= hi
        if charge is not None:
            keep &= q.sum(axis=1) == charge
        return bits[keep], E[keep]

    def build(self, charge: int | None = None):
        """Return ``(bits, H)`` with H a CSR matrix on the allowed configurations."""
        bits, E = self.configurations(charge)
        n = len(bits)
        ints = bits @ (1 << np.arange(self.L - 1, -1, -1, dtype=np.int64))
        lookup = {int(v): i for i, v in enumerate(ints)}
        diag = self.energy(2 * bits - 1)
        rows, cols, vals = [np.arange(n)], [np.arange(n)], [diag.astype(complex)]
        for l in range(self.L - 1):
            # down at l, up at l+1 -> flip raises the field on link l by one
            can = (bits[:, l] == 0) & (bits[:, l + 1] == 1)
            src = np.nonzero(can)[0]
            tgt_int = ints[src] + (1 << (self.L - 1 - l)) - (1 << (self.L - 2 - l))
            tgt = np.array([lookup.get(int(t), -1) for t in tgt_int], dtype=np.int64)
            ok = tgt >= 0
            amp = -self.J * self.hopping_factor(E[src[ok], l])
            rows += [src[ok], tgt[ok]]
            cols += [tgt[ok], src[ok]]
            vals += [amp.astype(complex), amp.astype(complex)]
        H = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(n, n))
        return bits, H


def eliminate_gauge_field(lattice: LatticeSpec, params) -> SpinModelSpec:
    """Integrate out the links of an open QED or HOBM chain.

    The link fields follow from ``E_{i,i+1} = sum_{j<=i} q_j`` and the
    electric energy ``V sum_i (E_i + alpha)^2`` becomes a long-range
    spin-spin interaction.  The mass term is measured from the bare
    vacuum, ``mu * sum_i (1 + (-1)^i tau^z_i) / 2``.

    Parameters
    ----------
    lattice : LatticeSpec
        Open chain with rotor or boson links.
    params : ModelParams
        Couplings; only ``J``, ``mu``, ``V`` and ``N`` are read, the
        background field comes from ``lattice.alpha``.
    """
    if lattice.boundary != "open":
        raise SchemaError("gauge-field elimination needs an open chain")
    if isinstance(lattice.link, SpinHalf):
        raise SchemaError("gauge-field elimination is not defined for spin-1/2 links")
    L = lattice.L
    V, mu, alpha = params.V, params.mu, lattice.alpha
    s = np.array([(-1) ** i for i in range(1, L + 1)], dtype=float)
    # E_i + alpha = (1/2) sum_{j<=i} tau_j + c_i  on links i = 1..L-1
    c = alpha + np.cumsum(s / 2)[:L - 1]
    couplings = np.zeros((L, L))
    for j in range(L - 1):
        for k in range(j + 1, L - 1):
            # tau_j tau_k appears on links i >= k (0-based), times 2 for the pair
            couplings[j, k] = couplings[k, j] = 0.5 * V * (L - 1 - k)
    fields = np.zeros(L)
    for j in range(L - 1):
        fields[j] = V * c[j:].sum()
    fields += 0.5 * mu * s
    constant = V * (c ** 2).sum() + 0.25 * V * sum(L - 1 - j for j in range(L - 1)) + 0.5 * mu * L
    if isinstance(lattice.link, Rotor):
        return SpinModelSpec(L, "qed", params.J, couplings, fields, constant,
                             link_window=(-lattice.link.cutoff, lattice.link.cutoff))
    b = lattice.link
    return SpinModelSpec(L, "hobm", params.J, couplings, fields, constant, N=b.offset,
                         link_window=(b.n_min - b.offset, b.n_max - b.offset))
