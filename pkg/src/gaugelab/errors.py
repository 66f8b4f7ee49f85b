"""Exception types shared by all modules.

Each class carries the process exit code used by the command-line front end.
"""


class GaugeLabError(Exception):
    exit_code = 1


class SchemaError(GaugeLabError, ValueError):
    """Invalid input: lattice, parameters, config file."""

    exit_code = 2


class CapacityError(GaugeLabError):
    """A basis or operator would exceed the configured dimension cap."""

    exit_code = 3


class ConvergenceError(GaugeLabError, RuntimeError):
    """An iterative method did not reach its tolerance."""

    exit_code = 4


class DesignError(SchemaError):
    """A trap or drive design violates its validity hierarchy."""


class EdgeError(GaugeLabError, ValueError):
    """A located extremum sits on the edge of the sampled grid."""

    exit_code = 4
