"""Distance from a matrix to the nilpotent cone: brackets and estimates.

Lower bounds come from two obstructions: the spectral-gap bound for a
non-invertible positive matrix (half the largest gap between consecutive
eigenvalues, with zero forced into the list) and the normalized-trace
bound |tr(M)/dim| (nilpotents are trace free).

Upper bounds are feasible witnesses.  ``upper_schur`` zeroes the diagonal
of the Schur core.  ``estimate`` runs a seeded local search over unitary
bases U; for each basis the exact distance from U^H M U to the strictly
upper triangulars in the operator norm is the nest-algebra distance

    max_k || (U^H M U)[k-1:, :k] ||,

and an optimal strictly-upper completion is materialized by a sequence of
closed-form scalar Parrott fills, so the returned defect is measured, not
asserted.  ``oracle_small`` is an independent brute force (unitary grid
plus joint Nelder-Mead polish) for dims <= 3, kept algorithmically
disjoint from ``estimate`` so the two can cross-check each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.optimize import minimize

from .errors import InternalCheckError, ValidationError
from .linalg import (
    MERGE_TOL,
    NilWitness,
    as_matrix,
    haar_unitary,
    op_norm,
    schur_form,
)


@dataclass(frozen=True)
class LowerBounds:
    gap_lower: float       # 0.0 with gap_applicable=False outside the hypothesis
    trace_lower: float
    gap_applicable: bool

    @property
    def best(self) -> float:
        return max(self.gap_lower, self.trace_lower)


@dataclass(frozen=True)
class BoundsReport:
    gap_lower: float
    trace_lower: float
    schur_upper: float
    estimate_upper: float
    witness: NilWitness

    def valid(self, slack: float = 1e-6) -> bool:
        return max(self.gap_lower, self.trace_lower) <= min(self.schur_upper, self.estimate_upper) + slack


def lower_bounds(m, merge_tol: float = MERGE_TOL) -> LowerBounds:
    """Gap and trace lower bounds on dist(M, nilpotents).

    The gap bound applies only to positive semidefinite M with 0 in the
    spectrum (within merge_tol); otherwise it is reported as 0 with
    ``gap_applicable=False``.  The eigenvalue 0 is forced into the sorted
    list before gaps are measured.
    """
    a = as_matrix(m).astype(complex)
    d = a.shape[0]
    trace_lower = abs(np.trace(a)) / d if d else 0.0
    gap_lower, applicable = 0.0, False
    herm = op_norm(a - a.conj().T) <= 1e-9 * (1.0 + op_norm(a))
    if herm and d:
        evals = np.linalg.eigvalsh((a + a.conj().T) / 2.0)
        psd = evals.min() >= -merge_tol
        if psd and evals.min() <= merge_tol:
            pts = np.sort(np.concatenate([[0.0], np.maximum(evals, 0.0)]))
            gap_lower = float(np.diff(pts).max() / 2.0) if len(pts) > 1 else 0.0
            applicable = True
    return LowerBounds(gap_lower=gap_lower, trace_lower=float(trace_lower), gap_applicable=applicable)


def upper_schur(m) -> NilWitness:
    """Witness from zeroing the Schur diagonal; defect = spectral radius."""
    a = as_matrix(m).astype(complex)
    form = schur_form(a)
    return NilWitness.against(a, form.basis, np.triu(form.core, 1))


# ---------------------------------------------------------------------------
# exact inner step: nest-algebra distance and Parrott completion


def nest_distance(a: np.ndarray) -> float:
    """Exact operator-norm distance from ``a`` to the strictly upper
    triangular matrices: max over lower-left corner blocks a[k-1:, :k]."""
    d = a.shape[0]
    best = 0.0
    for k in range(1, d + 1):
        s = np.linalg.svd(a[k - 1:, :k], compute_uv=False)[0]
        if s > best:
            best = float(s)
    return best


def _parrott_fill(b: np.ndarray, dd: np.ndarray, c: np.ndarray) -> complex:
    """Closed-form scalar Parrott step: argmin_x || [[b, x], [D, c]] ||.

    Derived from the Schur complement of mu^2 I - W W^H: the feasibility
    condition is a convex quadratic in x with minimizer
    x = -conj(c^H S u) / (1 + c^H S c), S = (mu^2 I - D D^H - c c^H)^{-1},
    u = D b^H, evaluated just above the Parrott optimum mu.
    """
    top = np.concatenate([b[None, :], dd], axis=0)
    left = np.concatenate([dd, c[:, None]], axis=1)
    mu = max(
        np.linalg.svd(top, compute_uv=False)[0] if top.size else 0.0,
        np.linalg.svd(left, compute_uv=False)[0] if left.size else 0.0,
    )
    if mu == 0.0:
        return 0.0 + 0.0j
    p = dd.shape[0]
    if p == 0:
        return 0.0 + 0.0j
    mu2 = (mu * (1.0 + 1e-12)) ** 2
    g = mu2 * np.eye(p) - dd @ dd.conj().T - np.outer(c, c.conj())
    u = dd @ b.conj()
    try:
        su = np.linalg.solve(g, u)
        sc = np.linalg.solve(g, c)
    except np.linalg.LinAlgError:
        g = g + (1e-9 * mu2) * np.eye(p)
        su = np.linalg.solve(g, u)
        sc = np.linalg.solve(g, c)
    return complex(-np.conj(c.conj() @ su) / (1.0 + (c.conj() @ sc).real))


def parrott_complete(a: np.ndarray) -> np.ndarray:
    """Strictly upper T with ||a - T|| equal to nest_distance(a).

    Entries are filled column by column, bottom to top; each step is a
    scalar Parrott problem whose two specified blocks are staircases that
    were already completed, so the running maximum never grows.
    """
    d = a.shape[0]
    r = a.astype(complex).copy()
    for j in range(1, d):
        for i in range(j - 1, -1, -1):
            r[i, j] = _parrott_fill(r[i, :j], r[i + 1:, :j], r[i + 1:, j])
    return a - r


# ---------------------------------------------------------------------------
# local-search estimator


def _subgradient_step(a: np.ndarray) -> np.ndarray:
    """Skew-Hermitian descent direction for the active corner block of
    g(U) = nest_distance(U^H M U), evaluated at a = U^H M U."""
    d = a.shape[0]
    best_k, best_s, best_u, best_v = 1, -1.0, None, None
    for k in range(1, d + 1):
        uu, ss, vvh = np.linalg.svd(a[k - 1:, :k])
        if ss[0] > best_s:
            best_k, best_s, best_u, best_v = k, ss[0], uu[:, 0], vvh[0].conj()
    k = best_k
    ut = np.zeros(d, dtype=complex)
    vt = np.zeros(d, dtype=complex)
    ut[k - 1:] = best_u
    vt[:k] = best_v
    x = np.outer(vt, ut.conj()) @ a - a @ np.outer(vt, ut.conj())
    grad = (x.conj().T - x) / 2.0   # projection of X^H onto skew-Hermitians
    nrm = np.linalg.norm(grad)
    return grad / nrm if nrm > 0 else grad


def _rand_skew(d: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    k = (z - z.conj().T) / 2.0
    return k / np.linalg.norm(k)


def estimate(m, restarts: int = 32, iters: int = 500, seed: int = 0):
    """Local-search upper estimate of dist(M, nilpotents).

    Returns ``(value, witness)`` with value the best measured defect.  The
    first restart starts from the Schur basis (so the result never exceeds
    the Schur witness); the rest start from Haar-random unitaries with
    per-restart derived seeds, which makes the result monotone
    nonincreasing in ``restarts`` for a fixed seed.  Each iteration tries
    a seeded random geodesic step and, every fourth iteration, a
    subgradient step on the active corner block; steps are accepted on
    improvement and the scale decays by 0.9 after every 25 rejections.
    """
    a = as_matrix(m).astype(complex)
    d = a.shape[0]
    if restarts < 1:
        raise ValidationError("estimate needs restarts >= 1")
    schur_w = upper_schur(a)
    if d == 0:
        return 0.0, schur_w
    children = np.random.SeedSequence(seed).spawn(restarts)

    def run_restart(r: int):
        rng = np.random.default_rng(children[r])
        u = schur_w.basis if r == 0 else haar_unitary(d, rng)
        cur = u.conj().T @ a @ u
        g = nest_distance(cur)
        step, rejections = 0.3, 0
        for it in range(iters):
            if it % 4 == 3:
                k = _subgradient_step(cur)
            else:
                k = _rand_skew(d, rng)
            u_try = u @ scipy.linalg.expm(step * k)
            cand = u_try.conj().T @ a @ u_try
            g_try = nest_distance(cand)
            if g_try < g:
                u, cur, g = u_try, cand, g_try
                rejections = 0
            else:
                rejections += 1
                if rejections % 25 == 0:
                    step *= 0.9
        return g, u

    from .runtime import worker_cap

    workers = min(worker_cap(), restarts)
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run_restart, range(restarts)))
    else:
        outcomes = [run_restart(r) for r in range(restarts)]
    best_g, best_u = np.inf, None
    for g, u in outcomes:
        if g < best_g:
            best_g, best_u = g, u
    rotated = best_u.conj().T @ a @ best_u
    t = np.triu(parrott_complete(rotated), 1)
    witness = NilWitness.against(a, best_u, t)
    # Schur start is included, so never report worse than the Schur witness
    if witness.defect > schur_w.defect:
        witness = schur_w
    value = witness.defect
    lower = lower_bounds(a)
    if value < lower.best - 1e-6:
        raise InternalCheckError(
            f"estimate {value:.6g} fell below certified lower bound {lower.best:.6g}"
        )
    return value, witness


def bracket(m, restarts: int = 32, iters: int = 500, seed: int = 0) -> BoundsReport:
    """Full distance bracket: both lower bounds and both upper witnesses."""
    lo = lower_bounds(m)
    schur_w = upper_schur(m)
    value, witness = estimate(m, restarts=restarts, iters=iters, seed=seed)
    return BoundsReport(
        gap_lower=lo.gap_lower,
        trace_lower=lo.trace_lower,
        schur_upper=schur_w.defect,
        estimate_upper=value,
        witness=witness,
    )


# ---------------------------------------------------------------------------
# independent brute-force oracle for tiny dimensions


def oracle_small(m, grid_density: int = 2000, polish_iters: int = 2000, seed: int = 0) -> float:
    """Brute-force dist(M, nilpotents) for dim <= 3.

    Scans a seeded Haar sample of unitaries with the Frobenius-optimal
    strictly upper core per basis, then polishes the best candidate by
    Nelder-Mead jointly over the unitary tangent and the core entries in
    the operator norm.  Deterministic for a fixed seed, and deliberately
    shares no machinery with ``estimate``.
    """
    a = as_matrix(m).astype(complex)
    d = a.shape[0]
    if d > 3:
        raise ValidationError("oracle_small only handles dims <= 3")
    if d == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    opn = lambda x: float(np.linalg.svd(x, compute_uv=False)[0])
    best_v, best_u, best_t = np.inf, np.eye(d, dtype=complex), np.zeros((d, d), complex)
    for _ in range(grid_density):
        u = haar_unitary(d, rng)
        rot = u.conj().T @ a @ u
        t = np.triu(rot, 1)
        v = opn(rot - t)
        if v < best_v:
            best_v, best_u, best_t = v, u, t
    iu = np.triu_indices(d, 1)
    n_skew = d * d
    n_upper = len(iu[0])

    def unpack(p):
        k = np.zeros((d, d), dtype=complex)
        off = d * (d - 1) // 2
        k[iu] = p[:off] + 1j * p[off:2 * off]
        k = k - k.conj().T
        k[np.diag_indices(d)] = 1j * p[2 * off:2 * off + d]
        u = best_u @ scipy.linalg.expm(k)
        t = np.zeros((d, d), dtype=complex)
        t[iu] = p[n_skew:n_skew + n_upper] + 1j * p[n_skew + n_upper:]
        return u, t

    def objective(p):
        u, t = unpack(p)
        return opn(u.conj().T @ a @ u - t)

    x0 = np.concatenate([np.zeros(n_skew), best_t[iu].real, best_t[iu].imag])
    res = minimize(
        objective, x0, method="Nelder-Mead",
        options=dict(maxiter=polish_iters, maxfev=2 * polish_iters, xatol=1e-11, fatol=1e-13),
    )
    return float(min(best_v, res.fun))


# ---------------------------------------------------------------------------
# spectral persistence along a sequence of normal matrices


def spectral_persistence(sequence, center: complex, radius: float):
    """Smallest 1-based index K such that every later matrix in the list
    has spectrum meeting the open disk around ``center``; None if the tail
    never stabilizes within the given finite list."""
    if radius <= 0:
        raise ValidationError("spectral_persistence needs a positive radius")
    from .linalg import spectrum  # local import to keep module load light

    hits = []
    for idx, mat in enumerate(sequence):
        spec = spectrum(mat, require_normal=True)
        hits.append(any(abs(z - center) < radius for z, _ in spec.points))
    last_miss = -1
    for i, h in enumerate(hits):
        if not h:
            last_miss = i
    if last_miss == len(hits) - 1:
        return None
    return last_miss + 2
