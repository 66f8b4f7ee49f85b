import os
import subprocess
import sys

import numpy as np
import pytest
import scipy.sparse as sp

from gaugelab import _kernels_py as ref
from gaugelab import kernels

try:
    from gaugelab import _kernels as compiled
except ImportError:  # extension not built
    compiled = None

BACKENDS = [pytest.param(ref, id="python"),
            pytest.param(compiled, id="compiled",
                         marks=pytest.mark.skipif(compiled is None, reason="extension not built"))]


def _problem(n=60, density=0.1, seed=0):
    rng = np.random.default_rng(seed)
    A = sp.random(n, n, density=density, random_state=seed, format="csr", dtype=float)
    A = (A + 1j * sp.random(n, n, density=density, random_state=seed + 1, format="csr")).tocsr()
    A.sort_indices()
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return (A, np.ascontiguousarray(A.indptr, np.int64), np.ascontiguousarray(A.indices, np.int64),
            np.ascontiguousarray(A.data, np.complex128), x)


@pytest.mark.parametrize("mod", BACKENDS)
def test_matvec(mod):
    A, ip, ix, data, x = _problem()
    out = np.empty(A.shape[0], complex)
    mod.csr_matvec(ip, ix, data, x, out)
    assert np.allclose(out, A @ x, atol=1e-13)


@pytest.mark.parametrize("mod", BACKENDS)
def test_matvec_terms(mod):
    A, ip, ix, data, x = _problem(seed=3)
    rng = np.random.default_rng(5)
    term = rng.integers(0, 3, size=len(data)).astype(np.int64)
    coeffs = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    out = np.empty(A.shape[0], complex)
    mod.csr_matvec_terms(ip, ix, data, term, coeffs, x, out)
    B = sp.csr_matrix((data * coeffs[term], ix, ip), shape=A.shape)
    assert np.allclose(out, B @ x, atol=1e-13)


@pytest.mark.parametrize("mod", BACKENDS)
def test_expectation(mod):
    A, ip, ix, data, x = _problem(seed=7)
    assert mod.csr_expectation(ip, ix, data, x) == pytest.approx(np.vdot(x, A @ x), rel=1e-12)


def test_empty_rows():
    ip = np.zeros(4, np.int64)
    out = np.ones(3, complex)
    x = np.ones(3, complex)
    for mod in (m for m in (ref, compiled) if m is not None):
        mod.csr_matvec(ip, np.zeros(0, np.int64), np.zeros(0, complex), x, out)
        assert np.all(out == 0)


def test_backend_selection():
    assert kernels.BACKEND == ("compiled" if compiled is not None else "python")


def test_python_fallback_selected_by_environment():
    code = "from gaugelab import kernels, BACKEND; print(kernels.BACKEND, BACKEND)"
    env = dict(os.environ, GAUGELAB_KERNELS="python")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert out.stdout.split() == ["python", "python"]
