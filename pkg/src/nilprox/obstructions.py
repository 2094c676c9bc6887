"""Negative results at matrix scale, and the greedy dense-sequence builder.

Block algebras cap nilpotency degree structurally: a certified nilpotent
element of a block algebra with largest block l satisfies W^l = 0 in exact
arithmetic, because each strictly upper core of size d has index <= d.

The trace obstruction pins shifts: along any filtration, lambda*I + T can
approach the nilpotents for at most one lambda, namely the root of
|lambda + tr(T)/dim| (nilpotents are trace free).

The greedy sequence realizes a diagonal whose entries are progressively
dense in [0, 1] while the running matrix stays close to nilpotents: each
level picks the smallest generator order whose witness defect and spectral
coverage meet the tolerance schedule, absorbs the running multiset by
injective nearest matching into copies of the new spectrum, and records a
measured upper chain.  Tolerance schedules are inputs: coverage of this
family improves only like 1/log(order), so schedules below ~0.35 exhaust
any desk-scale ladder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kahan
from .errors import ValidationError
from .linalg import NilWitness, structural_index

DEFAULT_LADDER = (2, 4, 8, 16, 32, 64, 128, 256, 512, 1024, 2048, 4096, 8192)


@dataclass(frozen=True)
class BlockAlgebra:
    block_sizes: tuple

    def __post_init__(self):
        if not self.block_sizes or any(s < 1 for s in self.block_sizes):
            raise ValidationError("block sizes must be positive")

    @property
    def dim(self) -> int:
        return sum(self.block_sizes)

    @property
    def degree_cap(self) -> int:
        return max(self.block_sizes)


def degree_cap_check(alg: BlockAlgebra, blocks: list[NilWitness]) -> bool:
    """True iff W^l = 0 structurally for l = max block size, where W is the
    block-diagonal element with the given certified nilpotent blocks.

    The check is purely structural: each strictly upper core of size d has
    nilpotency index <= d <= l.  Raises if the element is not in the
    algebra (block dimension mismatch).
    """
    if len(blocks) != len(alg.block_sizes):
        raise ValidationError("element does not match the algebra's block structure")
    for w, size in zip(blocks, alg.block_sizes):
        if w.dim != size:
            raise ValidationError(f"block of dim {w.dim} does not fit size {size}")
        if structural_index(w.core) > size:
            return False   # unreachable for strictly upper cores; kept as the literal check
    return True


def shift_scan(t, grid) -> tuple[list[tuple[complex, float]], complex]:
    """Per lambda, the lower bound |lambda + tr(T)/dim| on the limiting
    distance of lambda*I + T to nilpotents, plus the unique vanishing point
    lambda0 = -tr(T)/dim."""
    a = np.asarray(t, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValidationError("shift_scan needs a nonempty square matrix")
    tau = np.trace(a) / a.shape[0]
    bounds = [(complex(lam), float(abs(lam + tau))) for lam in grid]
    return bounds, complex(-tau)


def dyadic_example(n: int):
    """diag(j/2^n, j=1..2^n) with its exact trace bound (2^n+1)/2^{n+1} and
    the informational gap bound 1/2^{n+1} (zero forced into the spectrum,
    as the limiting operator must contain it)."""
    if n < 1:
        raise ValidationError("dyadic_example needs n >= 1")
    size = 2 ** n
    diag = np.arange(1, size + 1) / size
    trace_lower = (size + 1) / (2 * size)
    gap_lower = 1.0 / (2 * size)   # all gaps equal 1/2^n once 0 is included
    return np.diag(diag), float(trace_lower), float(gap_lower)


# ---------------------------------------------------------------------------
# greedy dense-sequence construction


@dataclass(frozen=True)
class GreedyLevel:
    order: int            # generator order chosen from the ladder
    copies: int           # number of spectrum copies used for absorption
    pairing_cost: float   # max displacement of the injective nearest matching
    kahan_defect: float
    upper_chain: float    # measured running bound on dist(R_k, nilpotents)


@dataclass(frozen=True)
class GreedyCertificate:
    levels: tuple
    prefix: tuple         # the a_j values appended level by level
    multiset_ok: bool     # level-k eigenvalues absorbed exactly (index bookkeeping)


def _coverage(evals: np.ndarray) -> float:
    """Max distance from a point of [0,1] to the given spectrum."""
    s = np.sort(evals)
    internal = np.diff(s).max() / 2 if len(s) > 1 else 0.0
    return float(max(s[0], internal, 1.0 - s[-1]))


def greedy_sequence(levels: int, tol_schedule, ladder=DEFAULT_LADDER) -> GreedyCertificate:
    """Build the dense-sequence certificate for the given tolerance schedule.

    At level k, the smallest ladder order whose witness defect is at most
    tol[k] and whose spectrum covers [0,1] within tol[k] is selected; the
    running multiset is then absorbed into enough copies of the new
    spectrum by injective nearest matching.  Raises when the ladder is
    exhausted (coverage decays like 1/log(order), so schedules below about
    pi/ln(max order) cannot be met).
    """
    tol = [float(x) for x in tol_schedule]
    if levels < 1 or len(tol) < levels:
        raise ValidationError("need at least one level and a tolerance per level")
    if any(b > a + 1e-12 for a, b in zip(tol, tol[1:])):
        raise ValidationError("tolerance schedule must be nonincreasing")

    out_levels: list[GreedyLevel] = []
    prefix: list[float] = []
    running: np.ndarray | None = None
    multiset_ok = True
    for k in range(levels):
        chosen = None
        for order in ladder:
            defect = kahan.witness_defect(order)
            cover = _coverage(kahan.spectrum_a(order))
            if defect <= tol[k] and cover <= tol[k]:
                chosen = (order, defect)
                break
        if chosen is None:
            raise ValidationError(
                f"ladder exhausted at level {k + 1}: no order up to {ladder[-1]} meets "
                f"tolerance {tol[k]} (coverage decays like 1/log(order))"
            )
        order, defect = chosen
        evals = kahan.spectrum_a(order)
        if running is None:
            running = evals.copy()
            prefix.extend(evals.tolist())
            out_levels.append(GreedyLevel(
                order=order, copies=1, pairing_cost=0.0,
                kahan_defect=defect, upper_chain=defect,
            ))
            continue
        # absorb the running multiset into copies of the new spectrum;
        # with copies = len(running) every value is available per element,
        # so the loop terminates with displacement <= coverage <= tol
        need = len(running)
        copies = max(1, math.ceil(need / len(evals)))
        while True:
            pool = np.tile(evals, copies)
            used = np.zeros(len(pool), dtype=bool)
            disp = 0.0
            for lam in np.sort(running)[::-1]:
                free = np.flatnonzero(~used)
                j = free[np.abs(pool[free] - lam).argmin()]
                used[j] = True
                disp = max(disp, abs(pool[j] - lam))
            if disp <= tol[k] or copies >= need:
                break
            copies += 1
        remainder = pool[~used]
        if len(remainder) != copies * len(evals) - need:
            multiset_ok = False
        prefix.extend(remainder.tolist())
        running = np.concatenate([running, remainder])
        out_levels.append(GreedyLevel(
            order=order, copies=copies, pairing_cost=float(disp),
            kahan_defect=defect, upper_chain=float(disp + defect),
        ))
    return GreedyCertificate(levels=tuple(out_levels), prefix=tuple(prefix), multiset_ok=multiset_ok)
