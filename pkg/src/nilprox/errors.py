"""Exception types shared across the package.

The CLI maps these onto distinct exit codes, so raising the right class
matters: bad input data is not the same failure as a solver that did not
converge, and neither is the same as a certified bound that failed when
measured.
"""


class ValidationError(ValueError):
    """Malformed input: bad dimensions, bad file contents, bad parameters."""


class ConvergenceError(RuntimeError):
    """An iterative numerical method hit its iteration cap."""


class AnomalyError(RuntimeError):
    """A bound that is asserted by theory failed when measured.

    This is a finding to surface, not a crash: callers should report the
    measured numbers alongside the violated bound.
    """


class InternalCheckError(AssertionError):
    """A self-consistency check failed (e.g. an estimate fell below a
    certified lower bound).  Indicates a bug, never expected in normal use."""
