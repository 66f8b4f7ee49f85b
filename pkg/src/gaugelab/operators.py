"""Sparse Hermitian operators in compressed row form."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from . import kernels


class SparseOperator:
    """Complex CSR operator bound to a basis.

    Parameters
    ----------
    matrix : scipy sparse matrix or ndarray
        Square matrix. Explicit zeros are removed and column indices sorted.
    basis : object, optional
        The basis the rows refer to (``GaugeBasis``, tensor basis, ...).
    """

    def __init__(self, matrix, basis=None):
        m = sp.csr_matrix(matrix, dtype=np.complex128)
        if m.shape[0] != m.shape[1]:
            raise ValueError(f"operator must be square, got {m.shape}")
        m.eliminate_zeros()
        m.sort_indices()
        self.csr = m
        self.basis = basis
        self.indptr = np.ascontiguousarray(m.indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(m.indices, dtype=np.int64)
        self.data = np.ascontiguousarray(m.data, dtype=np.complex128)

    @property
    def dim(self) -> int:
        return self.csr.shape[0]

    @property
    def shape(self):
        return self.csr.shape

    @property
    def nnz(self) -> int:
        return self.csr.nnz

    def matvec(self, x, out=None):
        x = np.ascontiguousarray(x, dtype=np.complex128)
        if out is None:
            out = np.empty(self.dim, dtype=np.complex128)
        kernels.csr_matvec(self.indptr, self.indices, self.data, x, out)
        return out

    __matmul__ = matvec

    def expectation(self, x) -> float:
        x = np.ascontiguousarray(x, dtype=np.complex128)
        return kernels.csr_expectation(self.indptr, self.indices, self.data, x).real

    def toarray(self):
        return self.csr.toarray()

    def diagonal(self):
        return self.csr.diagonal()

    def hermiticity_error(self) -> float:
        d = self.csr - self.csr.conj().T
        return float(abs(d).max()) if d.nnz else 0.0

    def norm_estimate(self) -> float:
        """Upper bound on the spectral norm (max absolute row sum)."""
        if self.nnz == 0:
            return 0.0
        return float(abs(self.csr).sum(axis=1).max())

    def __add__(self, other):
        o = other.csr if isinstance(other, SparseOperator) else other
        return SparseOperator(self.csr + o, self.basis)

    def __sub__(self, other):
        o = other.csr if isinstance(other, SparseOperator) else other
        return SparseOperator(self.csr - o, self.basis)

    def __mul__(self, c):
        return SparseOperator(self.csr * c, self.basis)

    __rmul__ = __mul__

    def __repr__(self):
        return f"SparseOperator(dim={self.dim}, nnz={self.nnz})"


def diagonal_operator(values, basis=None) -> SparseOperator:
    return SparseOperator(sp.diags(np.asarray(values, dtype=np.complex128)), basis)


class TermSum:
    """Time-dependent sum ``sum_k c_k(t) A_k`` sharing one CSR pattern.

    Used by the driven-system stepper: all terms are merged once, and each
    matvec applies the current coefficients through the fused kernel.
    """

    def __init__(self, terms, dim):
        mats = [sp.coo_matrix(t, dtype=np.complex128) for t in terms]
        rows = np.concatenate([m.row for m in mats]) if mats else np.zeros(0, int)
        cols = np.concatenate([m.col for m in mats]) if mats else np.zeros(0, int)
        vals = np.concatenate([m.data for m in mats]) if mats else np.zeros(0, complex)
        tid = np.concatenate([np.full(m.nnz, k) for k, m in enumerate(mats)]) if mats else np.zeros(0, int)
        order = np.lexsort((cols, rows))
        rows, cols, vals, tid = rows[order], cols[order], vals[order], tid[order]
        self.dim = dim
        self.n_terms = len(mats)
        self.indptr = np.zeros(dim + 1, dtype=np.int64)
        np.add.at(self.indptr, rows + 1, 1)
        self.indptr = np.cumsum(self.indptr).astype(np.int64)
        self.indices = np.ascontiguousarray(cols, dtype=np.int64)
        self.data = np.ascontiguousarray(vals, dtype=np.complex128)
        self.term = np.ascontiguousarray(tid, dtype=np.int64)

    def matvec(self, coeffs, x, out=None):
        coeffs = np.ascontiguousarray(coeffs, dtype=np.complex128)
        x = np.ascontiguousarray(x, dtype=np.complex128)
        if out is None:
            out = np.empty(self.dim, dtype=np.complex128)
        kernels.csr_matvec_terms(self.indptr, self.indices, self.data, self.term, coeffs, x, out)
        return out

    def assemble(self, coeffs) -> sp.csr_matrix:
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        return sp.csr_matrix((self.data * coeffs[self.term], self.indices, self.indptr),
                             shape=(self.dim, self.dim))
