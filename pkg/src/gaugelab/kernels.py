"""Kernel dispatch: compiled extension when available, numpy fallback otherwise.

Set ``GAUGELAB_KERNELS=python`` to force the fallback.
"""
import os

BACKEND = "python"
if os.environ.get("GAUGELAB_KERNELS", "").lower() != "python":
    try:
        from ._kernels import csr_expectation, csr_matvec, csr_matvec_terms  # noqa: F401

        BACKEND = "compiled"
    except ImportError:  # extension not built
        pass

if BACKEND == "python":
    from ._kernels_py import csr_expectation, csr_matvec, csr_matvec_terms  # noqa: F401

__all__ = ["BACKEND", "csr_matvec", "csr_matvec_terms", "csr_expectation"]
