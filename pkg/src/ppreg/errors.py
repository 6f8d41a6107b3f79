"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ``DataError`` -> 2 (bad or missing
input data), ``NumericError`` -> 3 (numerical failure such as global
non-convergence).  Contract violations inside the library (bad argument
domains) raise plain ``ValueError``.
"""


class PPRegError(Exception):
    """Base class for package-specific errors."""


class DataError(PPRegError):
    """Invalid, inconsistent, or missing input data."""


class NumericError(PPRegError):
    """A numerical procedure failed (divergence, singularity, ...)."""
