import math

import numpy as np
import pytest

from gaugelab.errors import CapacityError, SchemaError
from gaugelab.hilbert import (BasisState, Boson, LatticeSpec, Rotor, SpinHalf, enumerate_gauge_sector,
                              gauss_values, gauss_violation, reachable_basis, staggered_charge,
                              tensor_basis)
from gaugelab.models import string_configuration


def test_lattice_validation():
    with pytest.raises(SchemaError):
        LatticeSpec(3, Rotor(2))
    with pytest.raises(SchemaError):
        LatticeSpec(4, Rotor(2), boundary="periodic")
    with pytest.raises(SchemaError):
        LatticeSpec(4, Boson(10, 8, 5))
    with pytest.raises(SchemaError):
        LatticeSpec(4, Rotor(0))
    with pytest.raises(SchemaError):
        LatticeSpec(4, Rotor(1), matter="boson")


def test_link_counts():
    assert LatticeSpec.qed(6).n_links == 5
    assert LatticeSpec.qlm(6).n_links == 6
    assert LatticeSpec.hobm(4, 10).link_bounds[0] <= 10 <= LatticeSpec.hobm(4, 10).link_bounds[1]


def test_staggered_charge_convention():
    lat = LatticeSpec.qed(4)
    # bare vacuum: odd sites up
    assert np.all(staggered_charge(lat, [[1, 0, 1, 0]]) == 0)
    assert staggered_charge(lat, [[0, 0, 1, 0]])[0, 0] == -1
    assert staggered_charge(lat, [[1, 1, 1, 0]])[0, 1] == 1


@pytest.mark.parametrize("L", [2, 4, 6])
def test_neutral_sector_size_uncut(L):
    # with a wide enough window every neutral matter configuration is allowed
    b = enumerate_gauge_sector(LatticeSpec.qed(L, cutoff=L), charge=0)
    assert len(b) == math.comb(L, L // 2)


def test_gauss_law_holds_on_sector():
    for lat in (LatticeSpec.qed(6), LatticeSpec.hobm(6, 10), LatticeSpec.qlm(4),
                LatticeSpec.qlm(4, matter="boson", matter_n_max=2)):
        b = enumerate_gauge_sector(lat)
        assert np.all(gauss_values(b) == 0)


def test_qlm_sector_size():
    # S=1/2 QLM with hard-core matter on a periodic ring of 4 sites
    b = enumerate_gauge_sector(LatticeSpec.qlm(4))
    assert len(b) == 7


def test_tensor_basis_contains_sector():
    lat = LatticeSpec.qed(4, cutoff=1)
    full = tensor_basis(lat)
    sec = enumerate_gauge_sector(lat)
    assert len(full) == 2 ** 4 * 3 ** 3
    assert np.all(full.find(sec.keys) >= 0)


def test_tensor_basis_cap():
    with pytest.raises(CapacityError):
        tensor_basis(LatticeSpec.qed(8, cutoff=4), cap=1000)


def test_find_missing_keys():
    b = enumerate_gauge_sector(LatticeSpec.qed(4))
    assert b.find(np.array([-5]))[0] == -1


def test_reachable_from_string_is_gauge_invariant():
    lat = LatticeSpec.qed(4)
    b = reachable_basis(lat, [string_configuration(lat)])
    assert np.all(gauss_values(b) == 0)
    sec = enumerate_gauge_sector(lat, charge=0)
    assert len(b) == len(sec)


def test_gauss_violation_detects_bad_state():
    lat = LatticeSpec.qed(2, cutoff=1)
    full = tensor_basis(lat)
    psi = np.zeros(len(full))
    # matter vacuum with one unit of flux violates site 1
    idx = full.index(BasisState((1, 0), (1,)))
    psi[idx] = 1
    v = gauss_violation(psi, full)
    assert v[0] == pytest.approx(1.0)


def test_spin_half_link_bounds():
    assert SpinHalf().bounds() == (0, 1)
