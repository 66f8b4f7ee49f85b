"""Exact simulation of 1D lattice gauge theories and their trapped-ion realizations."""
from . import driven, hilbert, iontrap, models, scaling, solvers
from .errors import (CapacityError, ConvergenceError, DesignError, EdgeError, GaugeLabError,
                     SchemaError)
from .hilbert import (Basis, LatticeSpec, eliminate_gauge_field, enumerate_gauge_sector,
                      gauss_violation, reachable_basis, tensor_basis)
from .kernels import BACKEND
from .models import ModelParams, build_hobm, build_model, build_qed, build_qlm
from .operators import SparseOperator
from .solvers import TimeSeries, evolve, ground_state, trajectory_error

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Basis", "CapacityError", "ConvergenceError", "DesignError", "EdgeError",
    "GaugeLabError", "LatticeSpec", "ModelParams", "SchemaError", "SparseOperator", "TimeSeries",
    "build_hobm", "build_model", "build_qed", "build_qlm", "driven", "eliminate_gauge_field",
    "enumerate_gauge_sector", "evolve", "gauss_violation", "ground_state", "hilbert", "iontrap",
    "models", "reachable_basis", "scaling", "solvers", "tensor_basis", "trajectory_error",
]
