# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled sparse kernels used by the Lanczos and Krylov loops."""
cimport cython

ctypedef double complex cplx


def csr_matvec(const long long[::1] indptr, const long long[::1] indices,
               const cplx[::1] data, const cplx[::1] x, cplx[::1] out):
    """out = A @ x for a CSR matrix A."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t i, p
    cdef cplx acc
    for i in range(n):
        acc = 0
        for p in range(indptr[i], indptr[i + 1]):
            acc = acc + data[p] * x[indices[p]]
        out[i] = acc


def csr_matvec_terms(const long long[::1] indptr, const long long[::1] indices,
                     const cplx[::1] data, const long long[::1] term,
                     const cplx[::1] coeffs, const cplx[::1] x, cplx[::1] out):
    """out = sum_k coeffs[k] A_k @ x with all A_k stored in one CSR pattern.

    ``term[p]`` names the operator that entry ``p`` belongs to.
    """
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t i, p
    cdef cplx acc
    for i in range(n):
        acc = 0
        for p in range(indptr[i], indptr[i + 1]):
            acc = acc + coeffs[term[p]] * data[p] * x[indices[p]]
        out[i] = acc


def csr_expectation(const long long[::1] indptr, const long long[::1] indices,
                    const cplx[::1] data, const cplx[::1] x):
    """Return <x|A|x> without allocating A @ x."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t i, p
    cdef cplx acc, row
    acc = 0
    for i in range(n):
        row = 0
        for p in range(indptr[i], indptr[i + 1]):
            row = row + data[p] * x[indices[p]]
        acc = acc + (x[i].real - 1j * x[i].imag) * row
    return acc
