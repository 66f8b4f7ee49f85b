import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaugelab.errors import EdgeError, SchemaError
from gaugelab.hilbert import enumerate_gauge_sector
from gaugelab.models import build_model, electric_values
from gaugelab.scaling import (EliminatedFamily, Exponents, ScanResult, coleman_lattice,
                              coleman_params, collapse_quality, five_point_derivative,
                              order_parameter_scan, pseudo_critical_point, ratio_collapse_data)
from gaugelab.solvers import ground_state


def test_five_point_exact_on_quartic():
    x = np.linspace(-1, 1, 21)
    y = x ** 4 - 2 * x ** 3 + x
    xd, d = five_point_derivative(x, y)
    assert np.allclose(d, 4 * xd ** 3 - 6 * xd ** 2 + 1, atol=1e-12)


def test_five_point_validation():
    with pytest.raises(SchemaError):
        five_point_derivative(np.arange(5.0), np.arange(5.0))
    with pytest.raises(SchemaError):
        five_point_derivative(np.array([0, 1, 2, 3, 4, 5, 7.0]), np.zeros(7))


def test_pseudo_critical_of_tanh():
    x = np.linspace(-1, 1, 101)
    assert pseudo_critical_point(x, np.tanh(8 * (x - 0.123))) == pytest.approx(0.123, abs=2e-3)


def test_pseudo_critical_edge():
    x = np.linspace(0, 1, 51)
    with pytest.raises(EdgeError):
        pseudo_critical_point(x, np.exp(5 * x))


@settings(max_examples=40, deadline=None)
@given(scale=st.floats(1e-3, 1e3), shift=st.floats(-10, 10), c=st.floats(-0.6, 0.6))
def test_argmax_invariant_under_positive_rescaling(scale, shift, c):
    x = np.linspace(-1, 1, 81)
    y = np.tanh(6 * (x - c))
    a = pseudo_critical_point(x, y)
    b = pseudo_critical_point(x, scale * y + shift)
    assert a == pytest.approx(b, abs=1e-9)


def test_scan_result_validation():
    with pytest.raises(SchemaError):
        ScanResult([0.0, 0.0], [1, 2], 4, None, 0.3)
    s = ScanResult([0.0, 1.0], [1, 2], 4, None, 0.3)
    assert s.rows()[1] == (1.0, 2.0, 4, -1, 0.3)


def test_exponent_validation():
    with pytest.raises(SchemaError):
        Exponents(nu=0)
    with pytest.raises(SchemaError):
        Exponents(delta=float("inf"))


def test_coleman_params():
    p = coleman_params(0.3, 0.297, 10)
    assert p.J == 0.5 and p.V == pytest.approx(0.045) and p.mu == pytest.approx(0.0891)
    assert p.g == pytest.approx(0.3)


@pytest.mark.parametrize("N", [None, 10])
def test_order_parameter_dual_route(N):
    # eliminated spin model vs the explicit gauge sector with links
    L, ga, m = 6, 0.3, 0.1
    fam = EliminatedFamily(L, N, ga)
    lat = coleman_lattice(L, N)
    b = enumerate_gauge_sector(lat, charge=0)
    _, psi = ground_state(build_model(b, coleman_params(ga, m, N)))
    ref = (electric_values(b) + lat.alpha) @ np.abs(psi) ** 2
    assert fam.order_parameter(m) == pytest.approx(ref, abs=1e-8)


def test_scan_shape_and_trend():
    s = order_parameter_scan(np.linspace(-0.4, 0.1, 11), 4)
    assert s.E.shape == (11,)
    assert s.metadata["dim"] == 6
    # large mass pins the background field, small mass screens it
    assert s.E[-1] > s.E[0]


def test_collapse_identical_curves_scores_zero():
    x = np.linspace(0.1, 2, 30)
    assert collapse_quality([(x, np.sin(x)), (x, np.sin(x))]) == pytest.approx(0, abs=1e-30)


def test_collapse_log_invariance():
    x = np.linspace(0.5, 3, 25)
    data = [(x, np.log(x)), (x * 1.1, np.log(x) + 0.05)]
    a = collapse_quality(data)
    b = collapse_quality([(2.5 * d[0] ** 1.7, d[1]) for d in data])
    assert a == pytest.approx(b, rel=1e-10)


def test_collapse_needs_overlap():
    with pytest.raises(SchemaError):
        collapse_quality([(np.array([1.0, 2.0]), np.zeros(2)), (np.array([3.0, 4.0]), np.zeros(2))])


def test_ratio_collapse_data():
    ratio = {(L, N): 1.0 for L in (4, 6) for N in (10, 20)}
    out = ratio_collapse_data([4, 6], [10, 20], ratio, Exponents(), "order")
    assert len(out) == 2
    assert np.allclose(out[0][0], [4 ** 1.25 / 10, 4 ** 1.25 / 20])
    assert np.allclose(out[0][1], 1.0)   # delta' = delta leaves ratios unscaled
    with pytest.raises(SchemaError):
        ratio_collapse_data([4], [10], ratio, Exponents(), "bogus")
