"""Truncated tensor families anchored at fixed unit vectors.

A family is a finite stem of explicit matrices followed by a tail rule:
``tail_A`` fills later levels with the positive generator A of the given
order, ``tail_M`` with its certified nilpotent witness.  Every level
carries the unit vector xi = top eigenvector of the A at that level's
dimension, which A fixes (A xi = xi up to solver precision); truncations
are therefore coherent under padding by xi for tail_A levels, and the
coherence residual is reported rather than asserted for tail_M.

The comparison bound

    ||tensor(S) - tensor(R)|| <= C_S C_R sum_n ||S_n - R_n||,
    C_X = prod_n max(1, ||X_n||),

is exact mathematics at finite truncation, so a violation aborts with a
diagnostic (it would indicate an op_norm or construction bug).

Cone elements are matrices of polynomials in one variable vanishing at 0;
their nilpotency is decided in exact coefficient arithmetic, never by
sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kahan
from .errors import ValidationError
from .linalg import as_matrix, op_norm

ANCHOR_TOL = 1e-9
POLY_DEGREE_CAP = 64


@lru_cache(maxsize=64)
def _anchor(dim: int) -> tuple:
    """Unit top eigenvector xi of the order-``dim`` positive generator A
    (eigenvalue 1; ties broken by the solver's ordering, then renormalized)."""
    qp = kahan.qprime_matrix(dim)
    lnn = math.log(dim)
    h = (qp + qp.T) / (2.0 * lnn)
    evals, vecs = np.linalg.eigh(h)
    norm_h = max(abs(evals[0]), evals[-1])
    a = (h / norm_h) @ (h / norm_h)
    evals_a, vecs_a = np.linalg.eigh(a)
    xi = vecs_a[:, -1]
    xi = xi / np.linalg.norm(xi)
    return tuple(xi.astype(complex))


def anchor_vector(dim: int) -> np.ndarray:
    xi = np.asarray(_anchor(dim), dtype=complex)
    return xi.copy()


def tail_matrix(rule: str, order: int) -> np.ndarray:
    if rule == "tail_A":
        return kahan.build_kahan(order).A.astype(complex)
    if rule == "tail_M":
        return kahan.nil_witness(order).materialized
    raise ValidationError(f"unknown tail rule {rule!r}")


@dataclass(frozen=True)
class TensorFamily:
    """Stem matrices, a tail rule, and the order schedule for tail levels."""

    stem: tuple                   # tuple of square complex matrices
    tail_rule: str                # "tail_A" | "tail_M"
    dims_schedule: tuple          # generator orders for levels beyond the stem

    def __post_init__(self):
        if self.tail_rule not in ("tail_A", "tail_M"):
            raise ValidationError(f"unknown tail rule {self.tail_rule!r}")
        for s in self.stem:
            as_matrix(s, "stem matrix")
        if any(d < 2 for d in self.dims_schedule):
            raise ValidationError("tail orders must be >= 2")

    @property
    def stem_len(self) -> int:
        return len(self.stem)

    def level_matrix(self, n: int) -> np.ndarray:
        """1-based level n."""
        if n <= self.stem_len:
            return np.asarray(self.stem[n - 1], dtype=complex)
        idx = n - self.stem_len - 1
        if idx >= len(self.dims_schedule):
            raise ValidationError(f"level {n} beyond the dims schedule")
        return tail_matrix(self.tail_rule, self.dims_schedule[idx])

    def level_dim(self, n: int) -> int:
        return self.level_matrix(n).shape[0]

    def level_anchor(self, n: int) -> np.ndarray:
        return anchor_vector(self.level_dim(n))

    def norm_constant(self, k: int) -> float:
        """C = prod_{n<=k} max(1, ||S_n||)."""
        c = 1.0
        for n in range(1, k + 1):
            c *= max(1.0, op_norm(self.level_matrix(n)))
        return c


def truncate(fam: TensorFamily, k: int) -> np.ndarray:
    """Kronecker product of the first k levels (k at least the stem length)."""
    if k < fam.stem_len:
        raise ValidationError(f"truncation level {k} below stem length {fam.stem_len}")
    if k < 1:
        raise ValidationError("truncation level must be >= 1")
    out = np.ones((1, 1), dtype=complex)
    for n in range(1, k + 1):
        out = np.kron(out, fam.level_matrix(n))
    return out


def phi_residual(fam: TensorFamily, k: int) -> float:
    """Coherence of truncations under padding by the next anchor:

        || compress(truncate(k+1)) - truncate(k) ||,

    where compress restricts along xi_{k+1}.  Zero (to solver precision)
    for tail_A because A xi = xi; for tail_M this measures |<M xi, xi> - 1|
    inflation and is reported, not asserted.
    """
    big = truncate(fam, k + 1)
    small = truncate(fam, k)
    d_small = small.shape[0]
    d_next = fam.level_dim(k + 1)
    xi = fam.level_anchor(k + 1)
    big4 = big.reshape(d_small, d_next, d_small, d_next)
    compressed = np.einsum("iajb,a,b->ij", big4, xi.conj(), xi)
    return op_norm(compressed - small)


@dataclass(frozen=True)
class TensorComparison:
    lhs: float
    rhs: float
    holds: bool


def tensorapprox_check(fam_s: TensorFamily, fam_r: TensorFamily, k: int) -> TensorComparison:
    """lhs = ||truncate(S,k) - truncate(R,k)|| against the product-sum bound."""
    dims_s = [fam_s.level_dim(n) for n in range(1, k + 1)]
    dims_r = [fam_r.level_dim(n) for n in range(1, k + 1)]
    if dims_s != dims_r:
        raise ValidationError(f"per-level dims differ: {dims_s} vs {dims_r}")
    lhs = op_norm(truncate(fam_s, k) - truncate(fam_r, k))
    total = sum(
        op_norm(fam_s.level_matrix(n) - fam_r.level_matrix(n)) for n in range(1, k + 1)
    )
    rhs = fam_s.norm_constant(k) * fam_r.norm_constant(k) * total
    holds = lhs <= rhs + 1e-9
    if not holds:
        raise ValidationError(
            f"tensor comparison bound violated: {lhs:.6g} > {rhs:.6g} "
            "(this inequality is exact mathematics; suspect op_norm or construction)"
        )
    return TensorComparison(lhs=lhs, rhs=rhs, holds=holds)


def product_vanish_check(fams, k: int, ell: int, samples: int = 16, seed: int = 0):
    """Products of ``ell`` truncated elements vanish when all families share
    a nilpotent factor of index <= ell at some common level.

    Returns (ok, structural_index, witness_norm) where witness_norm is the
    largest norm among sampled products of length ell-1 (need not vanish).
    """
    fams = list(fams)
    if not fams:
        raise ValidationError("need at least one family")
    if any(f.tail_rule != "tail_M" for f in fams):
        raise ValidationError("product vanishing needs tail_M families")
    shared_level = None
    for n in range(1, k + 1):
        mats = [f.level_matrix(n) for f in fams]
        first = mats[0]
        if all(m.shape == first.shape and np.array_equal(m, first) for m in mats):
            if np.array_equal(np.tril(first), np.zeros_like(first)) and np.any(first):
                from .linalg import structural_index

                if structural_index(first) <= ell:
                    shared_level = n
                    break
    if shared_level is None:
        raise ValidationError("no shared nilpotent level of index <= ell within the truncation")
    rng = np.random.default_rng(seed)
    trunks = [truncate(f, k) for f in fams]
    norms = [op_norm(t) for t in trunks]
    ok = True
    witness = 0.0
    for _ in range(samples):
        sel = rng.integers(0, len(fams), size=ell)
        prod = trunks[sel[0]]
        scale = norms[sel[0]]
        for idx in sel[1:]:
            prod = prod @ trunks[idx]
            scale *= max(norms[idx], 1e-300)
        if op_norm(prod) > 1e-9 * max(scale, 1.0):
            ok = False
        shorter = trunks[sel[0]]
        for idx in sel[1:-1]:
            shorter = shorter @ trunks[idx]
        witness = max(witness, op_norm(shorter))
    return ok, shared_level, witness


# ---------------------------------------------------------------------------
# cone elements: polynomial-valued matrices, exact arithmetic


def _trim(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=complex)
    nz = np.flatnonzero(c)
    return c[: nz[-1] + 1] if len(nz) else np.zeros(1, dtype=complex)


@dataclass(frozen=True)
class PolyMatrix:
    """Square matrix of one-variable polynomials, all vanishing at 0.

    Entries are ascending coefficient arrays; arithmetic is exact on the
    coefficients (no sampling of the variable).
    """

    entries: tuple   # dim x dim nested tuple of coefficient tuples

    @classmethod
    def build(cls, grid) -> "PolyMatrix":
        rows = []
        dim = len(grid)
        for row in grid:
            if len(row) != dim:
                raise ValidationError("PolyMatrix must be square")
            r = []
            for c in row:
                c = _trim(np.asarray(c, dtype=complex))
                if c[0] != 0:
                    raise ValidationError("every entry polynomial must vanish at t = 0")
                r.append(tuple(c))
            rows.append(tuple(r))
        return cls(entries=tuple(rows))

    @classmethod
    def from_scalar_tensor(cls, poly_coeffs, matrix) -> "PolyMatrix":
        """f (x) N with f vanishing at zero: entries f * N[i, j]."""
        m = as_matrix(matrix)
        c = _trim(np.asarray(poly_coeffs, dtype=complex))
        if c[0] != 0:
            raise ValidationError("scalar polynomial must vanish at t = 0")
        grid = [[tuple(c * m[i, j]) for j in range(m.shape[0])] for i in range(m.shape[0])]
        return cls.build(grid)

    def __add__(self, other: "PolyMatrix") -> "PolyMatrix":
        if self.dim != other.dim:
            raise ValidationError("dimension mismatch")
        grid = []
        for i in range(self.dim):
            row = []
            for j in range(self.dim):
                a = np.asarray(self.entries[i][j], dtype=complex)
                b = np.asarray(other.entries[i][j], dtype=complex)
                n = max(len(a), len(b))
                c = np.zeros(n, dtype=complex)
                c[: len(a)] += a
                c[: len(b)] += b
                row.append(tuple(_trim(c)))
            grid.append(tuple(row))
        return PolyMatrix(entries=tuple(grid))

    @property
    def dim(self) -> int:
        return len(self.entries)

    def matmul(self, other: "PolyMatrix", degree_cap: int = POLY_DEGREE_CAP) -> "PolyMatrix":
        if self.dim != other.dim:
            raise ValidationError("dimension mismatch")
        d = self.dim
        grid = []
        for i in range(d):
            row = []
            for j in range(d):
                acc = np.zeros(1, dtype=complex)
                for r in range(d):
                    a = np.asarray(self.entries[i][r], dtype=complex)
                    b = np.asarray(other.entries[r][j], dtype=complex)
                    if not np.any(a) or not np.any(b):
                        continue
                    prod = np.convolve(a, b)
                    n = max(len(acc), len(prod))
                    c = np.zeros(n, dtype=complex)
                    c[: len(acc)] += acc
                    c[: len(prod)] += prod
                    acc = c
                acc = _trim(acc)
                if len(acc) - 1 > degree_cap:
                    raise ValidationError(
                        f"polynomial degree {len(acc) - 1} exceeds cap {degree_cap}"
                    )
                row.append(tuple(acc))
            grid.append(tuple(row))
        return PolyMatrix(entries=tuple(grid))

    def is_zero(self) -> bool:
        return all(
            not np.any(np.asarray(c, dtype=complex)) for row in self.entries for c in row
        )


def cone_check(elem: PolyMatrix, ell: int) -> bool:
    """True iff elem^ell is the zero polynomial matrix, in exact coefficient
    arithmetic."""
    if ell < 1:
        raise ValidationError("cone_check needs ell >= 1")
    power = elem
    for _ in range(ell - 1):
        power = power.matmul(elem)
        if power.is_zero():
            return True
    return power.is_zero()
