"""Grid-box planner and (normal, nilpotent) pair synthesis.

A target spectrum is covered by half-open grid boxes at resolution eps;
the box containing the origin is always kept.  Peeling removes one
non-origin box at a time, never disconnecting the remainder (8-adjacency),
and records a shortest path from the origin box to the removed box.  Each
path is turned into a polynomial vanishing at zero, applied to a Kahan
pack A and its nilpotent witness, and the resulting eigenvalues are
snapped to box centers.  The direct sum over steps gives a normal matrix
whose spectrum is exactly the box centers, a certified nilpotent partner,
and a measured defect per block.

Constants like the source theorem's 7*eps rely on infinite projection
calculus with no matrix-scale analog, so defects here are measured and
reported, never asserted against that bound.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import kahan
from .errors import ConvergenceError, ValidationError
from .linalg import (
    MERGE_TOL,
    NilWitness,
    Spectrum,
    nil_direct_sum,
    op_norm,
    poly_eval,
)

Box = tuple[int, int]


def box_of(z: complex, eps: float) -> Box:
    """Index (n, m) of the half-open box containing z.

    Re z in (eps*n - eps/2, eps*n + eps/2], likewise Im; so the index is
    ceil(v/eps - 1/2) coordinatewise.
    """
    return (math.ceil(z.real / eps - 0.5), math.ceil(z.imag / eps - 0.5))


def box_center(b: Box, eps: float) -> complex:
    return complex(eps * b[0], eps * b[1])


def _neighbors(b: Box):
    for dn in (-1, 0, 1):
        for dm in (-1, 0, 1):
            if dn or dm:
                yield (b[0] + dn, b[1] + dm)


def _connected(boxes: set) -> bool:
    if not boxes:
        return True
    start = next(iter(boxes))
    seen = {start}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        for nb in _neighbors(cur):
            if nb in boxes and nb not in seen:
                seen.add(nb)
                queue.append(nb)
    return len(seen) == len(boxes)


@dataclass(frozen=True)
class BoxSet:
    eps: float
    boxes: frozenset

    def __post_init__(self):
        if self.eps <= 0:
            raise ValidationError("box resolution eps must be positive")
        if (0, 0) not in self.boxes:
            raise ValidationError("the origin box (0,0) must be present")
        if not _connected(set(self.boxes)):
            raise ValidationError(
                "relevant boxes are disconnected under 8-adjacency; coarsen eps"
            )

    def centers(self) -> list[complex]:
        return [box_center(b, self.eps) for b in sorted(self.boxes)]


def boxify(spec: Spectrum, eps: float) -> BoxSet:
    """Boxes containing a spectrum point, with (0,0) force-included.

    Raises if the resulting set is disconnected (a connected target
    spectrum is the standing hypothesis; the caller must coarsen eps).
    """
    boxes = {(0, 0)}
    for z, _ in spec.points:
        boxes.add(box_of(z, eps))
    return BoxSet(eps=eps, boxes=frozenset(boxes))


def good_boxes(bs: BoxSet) -> set:
    """Non-origin boxes whose removal keeps the remainder connected."""
    out = set()
    boxes = set(bs.boxes)
    for b in boxes:
        if b == (0, 0):
            continue
        if _connected(boxes - {b}):
            out.add(b)
    return out


@dataclass(frozen=True)
class PlanStep:
    removed_box: Box
    path: tuple          # box sequence from (0,0) to removed_box


@dataclass(frozen=True)
class Plan:
    eps: float
    steps: tuple


def _shortest_path(boxes: set, target: Box) -> tuple:
    """Deterministic BFS shortest path from (0,0) to target inside boxes
    (ties broken by lexicographic neighbor order)."""
    start = (0, 0)
    parent = {start: None}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        if cur == target:
            break
        for nb in sorted(_neighbors(cur)):
            if nb in boxes and nb not in parent:
                parent[nb] = cur
                queue.append(nb)
    if target not in parent:
        raise ValidationError(f"no path to box {target}")  # unreachable on connected sets
    path = []
    cur = target
    while cur is not None:
        path.append(cur)
        cur = parent[cur]
    return tuple(reversed(path))


def plan(bs: BoxSet) -> Plan:
    """Peeling plan: repeatedly remove the farthest good box (ties broken
    lexicographically), with a shortest path recorded in the current set.

    Exactly len(boxes) - 1 steps; after all steps only (0,0) remains.
    """
    remaining = set(bs.boxes)
    steps = []
    while len(remaining) > 1:
        current = BoxSet(eps=bs.eps, boxes=frozenset(remaining))
        good = good_boxes(current)
        if not good:
            raise ValidationError("no good box found; peeling cannot proceed")
        chosen = max(good, key=lambda b: (abs(box_center(b, bs.eps)), b))
        steps.append(PlanStep(removed_box=chosen, path=_shortest_path(remaining, chosen)))
        remaining.remove(chosen)
    return Plan(eps=bs.eps, steps=tuple(steps))


def validate_plan(bs: BoxSet, pl: Plan) -> bool:
    """Structural check: every removed box good at removal time, paths live
    inside the then-current set, origin retained, all boxes consumed."""
    remaining = set(bs.boxes)
    for step in pl.steps:
        b = step.removed_box
        if b == (0, 0) or b not in remaining:
            return False
        if step.path[0] != (0, 0) or step.path[-1] != b:
            return False
        if any(p not in remaining for p in step.path):
            return False
        if any(q not in _neighbors(p) for p, q in zip(step.path, step.path[1:])):
            return False
        if not _connected(remaining - {b}):
            return False
        remaining.remove(b)
    return remaining == {(0, 0)}


# ---------------------------------------------------------------------------
# path -> polynomial


@dataclass(frozen=True)
class PathPoly:
    coeffs: np.ndarray    # ascending, coeffs[0] == 0
    sup_error: float
    degree: int


def _path_samples(path, eps: float, per_segment: int = 64):
    """Chebyshev-spaced parameter samples of the piecewise-linear path
    through box centers, as (t, gamma(t)) with t in [0, 1]."""
    centers = [box_center(b, eps) for b in path]
    if len(centers) == 1:
        return np.array([0.0]), np.array([centers[0]], dtype=complex)
    nseg = len(centers) - 1
    ts, vals = [], []
    # Chebyshev nodes mapped into each segment, plus the segment endpoints
    nodes = (1 - np.cos(np.pi * np.arange(per_segment + 1) / per_segment)) / 2
    for s in range(nseg):
        a, b = centers[s], centers[s + 1]
        for u in nodes:
            t = (s + u) / nseg
            ts.append(t)
            vals.append(a + (b - a) * u)
    return np.asarray(ts), np.asarray(vals, dtype=complex)


def fit_path_poly(path, eps: float, max_deg: int = 24) -> PathPoly:
    """Least-squares polynomial through the path with p(0) = 0.

    Degree escalates until the sup error on the sample grid is at most
    eps/2; exceeding max_deg raises.
    """
    if tuple(path[0]) != (0, 0):
        raise ValidationError("paths must start at the origin box (0,0)")
    ts, vals = _path_samples(path, eps)
    if len(path) == 1:
        return PathPoly(coeffs=np.zeros(1, dtype=complex), sup_error=0.0, degree=0)
    target = eps / 2.0
    for deg in range(1, max_deg + 1):
        # basis t, t^2, ..., t^deg: constant term structurally zero
        vander = np.vander(ts, deg + 1, increasing=True)[:, 1:]
        sol, *_ = np.linalg.lstsq(vander, vals, rcond=None)
        coeffs = np.concatenate([[0.0], sol])
        resid = np.abs(poly_eval(coeffs, ts) - vals).max()
        if resid <= target:
            return PathPoly(coeffs=coeffs, sup_error=float(resid), degree=deg)
    raise ConvergenceError(
        f"path polynomial needs degree > {max_deg} to reach sup error {target:.3g}"
    )


# ---------------------------------------------------------------------------
# synthesis


class SynthesisError(ConvergenceError):
    """A block's snapped spectrum missed a required box; raise ell."""

    def __init__(self, box, ell):
        self.box, self.ell = box, ell
        super().__init__(
            f"block spectrum missed required box {box} at ell={ell}; raise ell"
        )


@dataclass(frozen=True)
class SynthBlock:
    removed_box: Box
    poly: PathPoly
    n_block: np.ndarray = field(repr=False)
    m_core: np.ndarray = field(repr=False)
    defect: float
    snap_displacement: float
    eigenvalues: np.ndarray = field(repr=False)   # snapped, on box centers


@dataclass(frozen=True)
class PairWitness:
    """Block-diagonal normal N and certified nilpotent M with measured defect."""

    target: BoxSet
    ell: int
    blocks: tuple
    defect: float                  # max over blocks (direct-sum norm identity)

    def spectrum_n(self) -> Spectrum:
        vals = np.concatenate([b.eigenvalues for b in self.blocks])
        return Spectrum.from_values(vals)

    def materialize_n(self) -> np.ndarray:
        import scipy.linalg

        return scipy.linalg.block_diag(*(b.n_block for b in self.blocks))

    def materialize_m(self) -> NilWitness:
        wits = [
            NilWitness(basis=np.eye(b.m_core.shape[0], dtype=complex),
                       core=b.m_core, defect=b.defect)
            for b in self.blocks
        ]
        return nil_direct_sum(*wits)

    @property
    def dim(self) -> int:
        return sum(b.n_block.shape[0] for b in self.blocks)


def synth_pair(bs: BoxSet, ell: int, max_deg: int = 24) -> PairWitness:
    """Per plan step, apply the fitted path polynomial to the Kahan pair at
    order ell, snap eigenvalues to box centers, and assemble by direct sum.

    Every box center of ``bs`` appears in the spectrum (the removed box of
    each step is enforced, the origin via a final 1x1 zero block), and
    0 is in the spectrum.  Defects are measured per block; the total is
    their max.
    """
    if ell < 16:
        raise ValidationError("synth_pair needs ell >= 16")
    pl = plan(bs)
    centers = np.array([box_center(b, bs.eps) for b in sorted(bs.boxes)], dtype=complex)

    qp = kahan.qprime_matrix(ell)
    lnn = math.log(ell)
    h = (qp + qp.T) / (2.0 * lnn)
    evals_h, vecs = np.linalg.eigh(h)
    norm_h = max(abs(evals_h[0]), evals_h[-1])
    a_eigs = (evals_h / norm_h) ** 2                          # same eigenbasis as H
    w_core = np.triu((qp / (lnn * norm_h)) @ (qp / (lnn * norm_h)), 1)

    blocks = []
    for step in pl.steps:
        pp = fit_path_poly(step.path, bs.eps, max_deg=max_deg)
        raw = poly_eval(pp.coeffs, a_eigs.astype(complex))
        snapped_idx = np.abs(raw[:, None] - centers[None, :]).argmin(axis=1)
        snapped = centers[snapped_idx]
        target_center = box_center(step.removed_box, bs.eps)
        if not np.any(np.abs(snapped - target_center) <= MERGE_TOL):
            raise SynthesisError(step.removed_box, ell)
        disp = float(np.abs(raw - snapped).max())
        n_raw = (vecs * raw[None, :]) @ vecs.conj().T
        n_block = (vecs * snapped[None, :]) @ vecs.conj().T
        # snapping shares the eigenbasis, so its cost is exactly the max displacement
        snap_norm = op_norm(n_block - n_raw)
        if abs(snap_norm - disp) > 1e-9 * (1.0 + disp):
            raise ValidationError("snapping exactness check failed")
        m_core = np.triu(apply_poly_core(pp.coeffs, w_core), 1)
        defect = op_norm(n_block - m_core)
        blocks.append(SynthBlock(
            removed_box=step.removed_box, poly=pp, n_block=n_block,
            m_core=m_core, defect=defect, snap_displacement=disp,
            eigenvalues=snapped,
        ))
    # origin block: guarantees 0 in the spectrum and covers the (0,0) center
    blocks.append(SynthBlock(
        removed_box=(0, 0),
        poly=PathPoly(coeffs=np.zeros(1, complex), sup_error=0.0, degree=0),
        n_block=np.zeros((1, 1), dtype=complex),
        m_core=np.zeros((1, 1), dtype=complex),
        defect=0.0, snap_displacement=0.0,
        eigenvalues=np.zeros(1, dtype=complex),
    ))
    total = max(b.defect for b in blocks)
    return PairWitness(target=bs, ell=ell, blocks=tuple(blocks), defect=total)


def apply_poly_core(coeffs, core: np.ndarray) -> np.ndarray:
    """Horner on a strictly upper core; stays strictly upper exactly."""
    from .linalg import apply_poly

    return np.triu(apply_poly(coeffs, core), 1)
