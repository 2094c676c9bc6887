"""Log-weighted Jordan-block generators with certified inequality checks.

``build_kahan(n)`` constructs the classical family

    Qprime = sum_{j=1}^{n-1} (1/j) q^j     (q = n x n nilpotent Jordan block)
    Q      = Qprime / ln(n)                 (nilpotent)
    H      = (Q + Q^H) / 2                  (Hermitian, the log-kernel matrix)
    B      = H / ||H||
    A      = B^2                            (positive, norm one)

together with four certified checks.  A note on conventions: the source
lemma writes Q = (i/ln n) Qprime, but under that reading H = Re(Q) is the
bounded sawtooth part whose norm decays like pi/(2 ln n), which makes
|| H || -> 1 impossible and gives A a normalized trace -> 1/3 (blocking any
vanishing nilpotent defect).  Dropping the i yields the log-kernel H for
which three of the four constants are numerically exact and sharp; the
pi/2 bound then applies to the Hermitian part of i*Qprime, i.e. to the
skew half (Qprime - Qprime^T)/2, reported here as ``re_qprime``.

The ``defect`` of ``nil_witness(n)`` is the measured operator-norm distance
|| A - (Q/||H||)^2 ||; the witness core is strictly upper, so its
nilpotency is structural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ValidationError
from .linalg import NilWitness, op_norm

# below this order the 2*pi/ln(n) defect threshold is vacuous
DEFECT_THRESHOLD_MIN_N = 16


def qprime_matrix(n: int) -> np.ndarray:
    """sum_{j<n} (1/j) q^j, built by index shifting (exact, O(n^2))."""
    if n < 2:
        raise ValidationError("kahan order must be >= 2")
    q = np.zeros((n, n))
    for j in range(1, n):
        idx = np.arange(n - j)
        q[idx, idx + j] = 1.0 / j
    return q


@lru_cache(maxsize=32)
def _core(n: int):
    """Cached scalar data for order n: eigenvalues of H, norms.

    H is real symmetric here, so the Hermitian eigensolver applies; the
    skew norm comes from exact singular values of (Qprime - Qprime^T)/2.
    """
    qp = qprime_matrix(n)
    lnn = math.log(n)
    h = (qp + qp.T) / (2.0 * lnn)
    eigs_h = np.linalg.eigvalsh(h)
    norm_h = float(max(abs(eigs_h[0]), eigs_h[-1]))
    skew = float(np.linalg.svd((qp - qp.T) / 2.0, compute_uv=False)[0])
    return eigs_h, norm_h, skew, lnn


def spectrum_a(n: int) -> np.ndarray:
    """Sorted spectrum of A_n = (H/||H||)^2, ascending in [0, 1]."""
    eigs_h, norm_h, _, _ = _core(n)
    return np.sort((eigs_h / norm_h) ** 2)


@dataclass(frozen=True)
class KahanPack:
    n: int
    Qprime: np.ndarray
    Q: np.ndarray
    H: np.ndarray
    B: np.ndarray
    A: np.ndarray
    norms: dict          # re_qprime, h, h_minus_q, a
    checks: tuple        # four certified booleans


def certificates(n: int) -> tuple[dict, tuple]:
    """Norms and the four certified checks, without materializing matrices.

    check1: ||(Qprime - Qprime^T)/2|| <= pi/2          (skew half of i*Qprime)
    check2: | ||H|| - 1 | <= ln(2)/(2 ln n)
    check3: ||H - Q|| <= pi/(2 ln n)
    check4: -I <= H <= I  (as |eigenvalue| <= 1)
    all with slack 1e-9.
    """
    eigs_h, norm_h, skew, lnn = _core(n)
    norms = {
        "re_qprime": skew,
        "h": norm_h,
        "h_minus_q": skew / lnn,   # H - Q = (Qprime^T - Qprime)/(2 ln n)
        "a": 1.0,                  # A = (H/||H||)^2 has top eigenvalue exactly 1
    }
    slack = 1e-9
    checks = (
        skew <= math.pi / 2 + slack,
        abs(norm_h - 1.0) <= math.log(2) / (2 * lnn) + slack,
        norms["h_minus_q"] <= math.pi / (2 * lnn) + slack,
        bool(max(abs(eigs_h[0]), eigs_h[-1]) <= 1.0 + slack),
    )
    return norms, checks


def build_kahan(n: int) -> KahanPack:
    """Materialize the full pack at order n and verify its invariants."""
    qp = qprime_matrix(n)
    eigs_h, norm_h, skew, lnn = _core(n)
    q = qp / lnn
    h = (q + q.T) / 2.0
    b = h / norm_h
    a = b @ b
    norms, checks = certificates(n)
    # measured invariants: A is PSD with top eigenvalue one
    eigs_a = (eigs_h / norm_h) ** 2
    if eigs_a.min() < -1e-9 or abs(eigs_a.max() - 1.0) > 1e-9:
        raise ValidationError(f"kahan pack n={n}: A failed the PSD/norm-one invariant")
    return KahanPack(n=n, Qprime=qp, Q=q, H=h, B=b, A=a, norms=norms, checks=checks)


def witness_defect(n: int) -> float:
    """Measured defect || A - (Q/||H||)^2 || without keeping the matrices."""
    qp = qprime_matrix(n)
    eigs_h, norm_h, _, lnn = _core(n)
    scaled = qp / (lnn * norm_h)
    w = scaled @ scaled
    h = (qp + qp.T) / (2.0 * lnn * norm_h)
    a = h @ h
    return op_norm(a - w)


def nil_witness(n: int) -> NilWitness:
    """Certified nilpotent witness against A_n: core = (Q/||H||)^2.

    For n >= 16 the measured defect is at most 2*pi/ln(n); for smaller n
    that threshold is vacuous (the telescoping constants only bite
    asymptotically).
    """
    qp = qprime_matrix(n)
    eigs_h, norm_h, _, lnn = _core(n)
    scaled = qp / (lnn * norm_h)
    core = np.triu(scaled @ scaled, 1)
    h = (qp + qp.T) / (2.0 * lnn * norm_h)
    a = h @ h
    return NilWitness.against(a, np.eye(n), core)


def density_check(n: int, m: int) -> tuple[bool, list[int]]:
    """Does sigma(A_n) meet [k/m, (k+1)/m) for every k in 0..m-1?

    Returns the verdict and the per-interval hit counts.  Onset orders N_m
    are an empirical matter (no rate is certified); they grow roughly like
    exp(O(m)) for this family.
    """
    if n < 2 or m < 1:
        raise ValidationError("density_check needs n >= 2 and m >= 1")
    evals = spectrum_a(n)
    hits = []
    for k in range(m):
        lo, hi = k / m, (k + 1) / m
        hits.append(int(np.count_nonzero((evals >= lo) & (evals < hi))))
    return all(h > 0 for h in hits), hits


def max_spectral_gap(n: int) -> float:
    """Largest gap between consecutive points of sigma(A_n) with the
    endpoints 0 and 1 appended."""
    pts = np.sort(np.concatenate([[0.0, 1.0], spectrum_a(n)]))
    return float(np.diff(pts).max())
