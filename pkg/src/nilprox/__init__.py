"""nilprox: finite-matrix experiments on approximating normal matrices by
nilpotent ones — certified generators, distance brackets, grid-box
synthesis, direct-limit towers, and truncated tensor families."""

__version__ = "0.1.0"

from .errors import AnomalyError, ConvergenceError, InternalCheckError, ValidationError
from .linalg import (
    MERGE_TOL,
    NilWitness,
    SchurForm,
    Spectrum,
    apply_poly,
    compose,
    conjugate,
    direct_sum,
    haar_unitary,
    jordan_nilpotent,
    kron,
    op_norm,
    schur_form,
    spectrum,
    structural_index,
)

__all__ = [
    "AnomalyError",
    "ConvergenceError",
    "InternalCheckError",
    "MERGE_TOL",
    "NilWitness",
    "SchurForm",
    "Spectrum",
    "ValidationError",
    "apply_poly",
    "compose",
    "conjugate",
    "direct_sum",
    "haar_unitary",
    "jordan_nilpotent",
    "kron",
    "op_norm",
    "schur_form",
    "spectrum",
    "structural_index",
    "__version__",
]
