"""Dense complex linear algebra with explicit tolerances.

Everything downstream (Kahan packs, distance brackets, box synthesis,
towers) runs through the handful of primitives here: operator norms,
spectra with declared merging, Schur form, block/tensor composition,
polynomial functional calculus, and the certified nilpotent carrier.

Matrices are plain numpy arrays (square, finite entries).  Nilpotent
matrices are never "tested" for nilpotency by powering; they are carried
as a unitary basis plus an exactly strictly-upper core, so nilpotency is
structural.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .errors import ConvergenceError, ValidationError

MERGE_TOL = 1e-8          # declared eigenvalue-equality tolerance
DENSE_SVD_CUTOFF = 1024   # up to here op_norm uses exact LAPACK svdvals

# op_norm's Lanczos start vector is seeded once, so results are reproducible
_OPNORM_SEED = 0x6E696C


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Validate and return a square complex matrix with finite entries."""
    a = np.asarray(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"{name}: expected a square matrix, got shape {a.shape}")
    if a.size and not np.all(np.isfinite(np.asarray(a, dtype=complex))):
        raise ValidationError(f"{name}: non-finite entries")
    return a


def op_norm(m, *, maxiter: int | None = None) -> float:
    """Largest singular value of a square matrix, relative accuracy ~1e-10.

    Small matrices go through LAPACK svdvals.  Hermitian matrices of any
    size use the Hermitian eigensolver.  Large non-Hermitian matrices use
    Lanczos iteration on the Gram operator M^H M with a seeded start
    vector (iteration cap 10*dim + 1000).
    """
    a = as_matrix(m)
    n = a.shape[0]
    if n == 0:
        return 0.0
    if n <= DENSE_SVD_CUTOFF:
        return float(np.linalg.svd(a, compute_uv=False)[0])
    fro = np.linalg.norm(a)
    if np.linalg.norm(a - a.conj().T) <= 1e-13 * max(1.0, fro):
        w = np.linalg.eigvalsh(a)
        return float(max(abs(w[0]), abs(w[-1])))
    cap = maxiter if maxiter is not None else 10 * n + 1000
    gram = scipy.sparse.linalg.LinearOperator(
        (n, n), matvec=lambda v: a.conj().T @ (a @ v), dtype=complex
    )
    v0 = np.random.default_rng(_OPNORM_SEED).standard_normal(n)
    try:
        lam = scipy.sparse.linalg.eigsh(
            gram, k=1, which="LA", v0=v0, maxiter=cap, tol=1e-12,
            return_eigenvectors=False,
        )
    except scipy.sparse.linalg.ArpackNoConvergence as exc:
        raise ConvergenceError(f"op_norm: Lanczos hit the iteration cap {cap}") from exc
    return float(np.sqrt(max(lam[0], 0.0)))


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Gaussian matrix."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def jordan_nilpotent(n: int) -> np.ndarray:
    """The n x n nilpotent Jordan block (ones on the first superdiagonal)."""
    q = np.zeros((n, n))
    if n > 1:
        idx = np.arange(n - 1)
        q[idx, idx + 1] = 1.0
    return q


# ---------------------------------------------------------------------------
# spectra


@dataclass(frozen=True)
class Spectrum:
    """Finite multiset of complex eigenvalues with multiplicities.

    Points are pairwise distinct after merging at ``merge_tol``; the order
    is lexicographic in (real, imag) for reproducibility.
    """

    points: tuple[tuple[complex, int], ...]

    @classmethod
    def from_values(cls, values, merge_tol: float = MERGE_TOL) -> "Spectrum":
        vals = sorted(map(complex, values), key=lambda z: (z.real, z.imag))
        reps: list[complex] = []
        mult: list[int] = []
        for z in vals:
            for i, r in enumerate(reps):
                if abs(z - r) <= merge_tol:
                    mult[i] += 1
                    break
            else:
                reps.append(z)
                mult.append(1)
        return cls(tuple(zip(reps, mult)))

    @classmethod
    def from_points(cls, points) -> "Spectrum":
        pts = []
        for z, m in points:
            m = int(m)
            if m <= 0:
                raise ValidationError("spectrum multiplicities must be positive")
            pts.append((complex(z), m))
        pts.sort(key=lambda p: (p[0].real, p[0].imag))
        return cls(tuple(pts))

    def values(self) -> np.ndarray:
        """Expand to a flat array, each point repeated by its multiplicity."""
        if not self.points:
            return np.zeros(0, dtype=complex)
        return np.concatenate([[z] * m for z, m in self.points]).astype(complex)

    @property
    def total(self) -> int:
        return sum(m for _, m in self.points)

    def contains(self, z: complex, tol: float = MERGE_TOL) -> bool:
        return any(abs(z - p) <= tol for p, _ in self.points)


def spectrum(m, require_normal: bool = False, merge_tol: float = MERGE_TOL) -> Spectrum:
    """Eigenvalues with multiplicities, read off the Schur core diagonal.

    With ``require_normal`` the commutator test ||MM^H - M^HM|| <= 1e-6 ||M||^2
    must pass first.
    """
    a = as_matrix(m).astype(complex)
    if require_normal:
        comm = a @ a.conj().T - a.conj().T @ a
        scale = op_norm(a) ** 2
        if op_norm(comm) > 1e-6 * max(scale, 1e-300):
            raise ValidationError("matrix is not normal within tolerance 1e-6*||M||^2")
    if a.shape[0] == 0:
        return Spectrum(())
    form = schur_form(a)
    return Spectrum.from_values(np.diagonal(form.core), merge_tol)


# ---------------------------------------------------------------------------
# Schur form


@dataclass(frozen=True)
class SchurForm:
    """Unitary basis and upper-triangular core with M = basis @ core @ basis^H.

    The strict lower triangle of ``core`` is exactly zero (forced), the
    basis is unitary to 1e-9 and the reconstruction residual is at most
    1e-8 * (1 + ||M||).
    """

    basis: np.ndarray
    core: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.basis @ self.core @ self.basis.conj().T

    def diagonal(self) -> np.ndarray:
        return np.diagonal(self.core).copy()


def schur_form(m) -> SchurForm:
    a = as_matrix(m).astype(complex)
    n = a.shape[0]
    if n == 0:
        return SchurForm(np.zeros((0, 0), complex), np.zeros((0, 0), complex))
    try:
        core, basis = scipy.linalg.schur(a, output="complex")
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceError(f"Schur iteration failed: {exc}") from exc
    core = np.triu(core)  # force exact zeros below the diagonal
    form = SchurForm(basis=basis, core=core)
    resid = op_norm(form.reconstruct() - a)
    if resid > 1e-8 * (1.0 + op_norm(a)):
        raise ConvergenceError(f"Schur reconstruction residual {resid:.3e} too large")
    return form


# ---------------------------------------------------------------------------
# structural composition


def direct_sum(*mats) -> np.ndarray:
    blocks = [as_matrix(b) for b in mats]
    return scipy.linalg.block_diag(*blocks) if blocks else np.zeros((0, 0))


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def conjugate(u, m, *, tol: float = 1e-9) -> np.ndarray:
    """U M U^H for unitary U; rejects non-unitary conjugators."""
    u = as_matrix(u, "conjugator")
    m = as_matrix(m)
    if u.shape != m.shape:
        raise ValidationError(f"conjugate: shape mismatch {u.shape} vs {m.shape}")
    gram = u @ u.conj().T - np.eye(u.shape[0])
    if op_norm(gram) > tol:
        raise ValidationError("conjugate: conjugator is not unitary within 1e-9")
    return u @ m @ u.conj().T


def compose(kind: str, *args) -> np.ndarray:
    """Dispatch: 'direct_sum', 'kron' or 'conjugate'."""
    if kind == "direct_sum":
        return direct_sum(*args)
    if kind == "kron":
        if len(args) != 2:
            raise ValidationError("kron takes exactly two matrices")
        return kron(*args)
    if kind == "conjugate":
        if len(args) != 2:
            raise ValidationError("conjugate takes (unitary, matrix)")
        return conjugate(*args)
    raise ValidationError(f"unknown composition kind {kind!r}")


# ---------------------------------------------------------------------------
# polynomial functional calculus


def _check_poly(coeffs) -> np.ndarray:
    c = np.asarray(coeffs, dtype=complex).ravel()
    if c.size == 0 or c[0] != 0:
        raise ValidationError("polynomial must have constant coefficient exactly zero")
    return c


def apply_poly(coeffs, m) -> np.ndarray:
    """Horner evaluation of p(M) for p with p(0) = 0.

    ``coeffs`` is ascending: [0, c1, c2, ...].  If M is strictly upper
    triangular the result is strictly upper triangular exactly (the strict
    lower triangle is re-zeroed, which is a no-op in exact arithmetic).
    """
    c = _check_poly(coeffs)
    a = as_matrix(m).astype(complex)
    n = a.shape[0]
    out = np.zeros_like(a)
    for ck in c[::-1]:
        out = out @ a
        if ck != 0:
            out += ck * np.eye(n)
    # the loop ends after the final multiplication by A, so p(0)=0 is structural
    if np.array_equal(np.tril(a), np.zeros_like(a)):
        out = np.triu(out, 1)
    return out


def poly_eval(coeffs, x: np.ndarray) -> np.ndarray:
    c = _check_poly(coeffs)
    return np.polynomial.polynomial.polyval(np.asarray(x, dtype=complex), c)


# ---------------------------------------------------------------------------
# certified nilpotent witnesses


def structural_index(core: np.ndarray) -> int:
    """Nilpotency index of a strictly upper matrix from its zero pattern.

    Smallest k with core^k = 0; equals 1 + (longest path in the DAG of
    nonzero entries).  Exact: depends only on which entries are nonzero.
    """
    n = core.shape[0]
    if n == 0:
        return 1
    longest = np.zeros(n, dtype=int)
    for j in range(n):
        for i in range(j):
            if core[i, j] != 0 and longest[i] + 1 > longest[j]:
                longest[j] = longest[i] + 1
    return int(longest.max()) + 1


@dataclass(frozen=True)
class NilWitness:
    """A nilpotent matrix in certified form plus its measured defect.

    ``core`` is exactly strictly upper triangular and ``materialized`` is
    basis @ core @ basis^H, so nilpotency holds structurally.  ``defect``
    is op_norm(target - materialized) for whatever target the witness was
    built against.
    """

    basis: np.ndarray
    core: np.ndarray
    defect: float
    materialized: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        basis = as_matrix(self.basis, "witness basis")
        core = as_matrix(self.core, "witness core")
        if basis.shape != core.shape:
            raise ValidationError("witness basis and core shapes differ")
        if np.any(np.tril(core) != 0):
            raise ValidationError("witness core must be exactly strictly upper triangular")
        if self.materialized is None:
            object.__setattr__(self, "materialized", basis @ core @ basis.conj().T)

    @classmethod
    def against(cls, target, basis, core) -> "NilWitness":
        """Build a witness and measure its defect to ``target``."""
        basis = np.asarray(basis, dtype=complex)
        core = np.triu(np.asarray(core, dtype=complex), 1)
        mat = basis @ core @ basis.conj().T
        defect = op_norm(as_matrix(target) - mat)
        return cls(basis=basis, core=core, defect=defect, materialized=mat)

    @property
    def dim(self) -> int:
        return self.core.shape[0]

    @property
    def index(self) -> int:
        return structural_index(self.core)

    def poly(self, coeffs, target) -> "NilWitness":
        """p(witness) in certified form (strictly upper core maps to
        strictly upper core), with defect re-measured against ``target``."""
        new_core = np.triu(apply_poly(coeffs, self.core), 1)
        return NilWitness.against(target, self.basis, new_core)


def nil_direct_sum(*witnesses: NilWitness, target=None) -> NilWitness:
    """Direct sum of certified witnesses is again certified (block-diagonal
    strictly-upper core).  Defect measured against ``target`` if given,
    else the max of the block defects (exact by the direct-sum identity)."""
    basis = direct_sum(*(w.basis for w in witnesses)).astype(complex)
    core = direct_sum(*(w.core for w in witnesses)).astype(complex)
    if target is not None:
        return NilWitness.against(target, basis, core)
    defect = max((w.defect for w in witnesses), default=0.0)
    return NilWitness(basis=basis, core=np.triu(core, 1), defect=defect)
