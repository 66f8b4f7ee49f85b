"""Reference implementations of the compiled kernels (numpy/scipy only)."""
import numpy as np
import scipy.sparse as sp


def _csr(indptr, indices, data):
    n = indptr.shape[0] - 1
    return sp.csr_matrix((data, indices, indptr), shape=(n, n))


def csr_matvec(indptr, indices, data, x, out):
    out[:] = _csr(indptr, indices, data) @ x


def csr_matvec_terms(indptr, indices, data, term, coeffs, x, out):
    out[:] = _csr(indptr, indices, data * coeffs[term]) @ x


def csr_expectation(indptr, indices, data, x):
    return complex(np.vdot(x, _csr(indptr, indices, data) @ x))
