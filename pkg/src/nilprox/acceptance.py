"""The acceptance suite: twelve criteria, each a callable check.

Each criterion returns a record with a verdict and the measured numbers;
the CLI ``regress`` command serializes the records and exits nonzero when
any criterion fails, and tests/test_acceptance.py asserts them one by one.
Quick mode caps dimension ladders (largest order 256) and shrinks the
seeded suites; it exists for fast regression, the stated criteria run at
full size.

Known finding (documented in the README): criterion 1's second certified
constant ln(2)/(2 ln n) is slightly optimistic for this family.  The
measured gap ln(n) - lambda_max of the log-kernel matrix converges to
about 0.349-0.351 > ln(2)/2 = 0.3466, so check2 fails by a few parts in
ten thousand from n = 64 up.  The criterion is implemented as stated and
reports the honest verdict; the other three constants are sharp and pass.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import boxes, distance, kahan, obstructions, tensors, tower
from .linalg import MERGE_TOL, Spectrum, haar_unitary, op_norm

SUITE_SEED = 20260810


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] criterion {self.number:2d}: {self.name}"


def _ladder(quick: bool) -> list[int]:
    top = 256 if quick else 4096
    out, n = [], 2
    while n <= top:
        out.append(n)
        n *= 2
    return out


def criterion_1(quick: bool = False) -> CriterionResult:
    """All four certified generator inequalities, PSD and norm-one A."""
    t0 = time.time()
    per_n = {}
    ok = True
    for n in _ladder(quick):
        norms, checks = kahan.certificates(n)
        evals = kahan.spectrum_a(n)
        psd = bool(evals.min() >= -1e-9)
        norm_one = bool(abs(evals.max() - 1.0) <= 1e-9)
        per_n[n] = {
            "checks": list(checks),
            "psd": psd,
            "norm_one": norm_one,
            "h_norm": norms["h"],
            "check2_rhs": math.log(2) / (2 * math.log(n)),
        }
        ok = ok and all(checks) and psd and norm_one
    return CriterionResult(1, "kahan certificates", ok, {"per_n": per_n}, time.time() - t0)


def criterion_2(quick: bool = False) -> CriterionResult:
    """Witness defect strictly decreasing and below 2*pi/ln(n)."""
    t0 = time.time()
    ns = [64, 128, 256] if quick else [64, 256, 1024, 4096]
    defects = {n: kahan.witness_defect(n) for n in ns}
    decreasing = all(defects[a] > defects[b] for a, b in zip(ns, ns[1:]))
    bounded = all(defects[n] <= 2 * math.pi / math.log(n) for n in ns if n >= 16)
    return CriterionResult(
        2, "kahan witness trend", decreasing and bounded,
        {"defects": defects, "strictly_decreasing": decreasing, "bounded": bounded},
        time.time() - t0,
    )


def _bracket_suite(count: int, seed: int):
    """Seeded mix of normal and non-normal matrices, dims 2..12."""
    rng = np.random.default_rng(seed)
    for i in range(count):
        d = int(rng.integers(2, 13))
        kind = i % 4
        if kind == 0:
            u = haar_unitary(d, rng)
            vals = rng.standard_normal(d) + 1j * rng.standard_normal(d)
            m = u @ np.diag(vals) @ u.conj().T
        elif kind == 1:
            m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        elif kind == 2:
            u = haar_unitary(d, rng)
            vals = np.abs(rng.standard_normal(d))
            vals[rng.integers(0, d)] = 0.0
            m = u @ np.diag(vals.astype(complex)) @ u.conj().T
        else:
            r = int(rng.integers(1, d))
            u = haar_unitary(d, rng)
            m = u @ np.diag(np.concatenate([np.ones(r), np.zeros(d - r)]).astype(complex)) @ u.conj().T
        yield m


def criterion_3(quick: bool = False) -> CriterionResult:
    """Bracket soundness on the seeded suite, and the identity collapse."""
    t0 = time.time()
    count, restarts, iters = (24, 3, 60) if quick else (200, 4, 120)
    worst = -np.inf
    ok = True
    for m in _bracket_suite(count, SUITE_SEED + 3):
        rep = distance.bracket(m, restarts=restarts, iters=iters, seed=SUITE_SEED)
        margin = max(rep.gap_lower, rep.trace_lower) - min(rep.schur_upper, rep.estimate_upper)
        worst = max(worst, margin)
        ok = ok and rep.valid(1e-6)
    identity_ok = True
    id_values = {}
    for d in (2, 3, 6):
        rep = distance.bracket(np.eye(d, dtype=complex), restarts=2, iters=40, seed=SUITE_SEED)
        lo = max(rep.gap_lower, rep.trace_lower)
        hi = min(rep.schur_upper, rep.estimate_upper)
        id_values[d] = [lo, hi]
        identity_ok = identity_ok and abs(lo - 1.0) <= 1e-9 and abs(hi - 1.0) <= 1e-9
    return CriterionResult(
        3, "distance bracket soundness", ok and identity_ok,
        {"count": count, "worst_margin": float(worst), "identity_brackets": id_values},
        time.time() - t0,
    )


def criterion_4(quick: bool = False) -> CriterionResult:
    """Estimator agrees with the brute-force oracle on 2x2 cases."""
    t0 = time.time()
    if quick:
        count, est_par, orc_par = 8, (8, 150), (500, 600)
    else:
        count, est_par, orc_par = 50, (12, 300), (1200, 1500)
    rng = np.random.default_rng(SUITE_SEED + 4)
    worst = 0.0
    ok = True
    for i in range(count):
        m = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        est, _ = distance.estimate(m, restarts=est_par[0], iters=est_par[1], seed=SUITE_SEED + i)
        orc = distance.oracle_small(m, grid_density=orc_par[0], polish_iters=orc_par[1],
                                    seed=SUITE_SEED + i)
        gap = abs(est - orc)
        worst = max(worst, gap)
        ok = ok and gap <= 1e-3
    anchor = distance.oracle_small(np.diag([1.0, 0.0]), grid_density=orc_par[0],
                                   polish_iters=orc_par[1], seed=SUITE_SEED)
    anchor_ok = 0.5 <= anchor <= 0.7072
    return CriterionResult(
        4, "oracle agreement (dim 2)", ok and anchor_ok,
        {"count": count, "worst_gap": worst, "oracle_diag10": anchor},
        time.time() - t0,
    )


def criterion_5(quick: bool = False) -> CriterionResult:
    """Rank-one projection estimates: nonincreasing in dim, >= 1/2, <= 0.9 at 16."""
    t0 = time.time()
    dims = (4, 16) if quick else (4, 16, 64)
    restarts, iters = (3, 200) if quick else (6, 900)
    values = {}
    for d in dims:
        p = np.zeros((d, d), dtype=complex)
        p[0, 0] = 1.0
        v, _ = distance.estimate(p, restarts=restarts, iters=iters, seed=SUITE_SEED + d)
        values[d] = v
    nonincreasing = all(values[a] >= values[b] - 1e-12 for a, b in zip(dims, dims[1:]))
    above_half = all(v >= 0.5 - 1e-6 for v in values.values())
    at16 = values[16] <= 0.9
    return CriterionResult(
        5, "projection distance trend", nonincreasing and above_half and at16,
        {"values": values}, time.time() - t0,
    )


def _random_boxset(rng: np.random.Generator, max_boxes: int = 25) -> boxes.BoxSet:
    target = int(rng.integers(1, max_boxes + 1))
    cells = {(0, 0)}
    while len(cells) < target:
        base = list(cells)[rng.integers(0, len(cells))]
        nb = (base[0] + int(rng.integers(-1, 2)), base[1] + int(rng.integers(-1, 2)))
        cells.add(nb)
    return boxes.BoxSet(eps=1.0, boxes=frozenset(cells))


def criterion_6(quick: bool = False) -> CriterionResult:
    """Planner validity on seeded connected box sets: exact structural checks."""
    t0 = time.time()
    count = 30 if quick else 100
    rng = np.random.default_rng(SUITE_SEED + 6)
    ok = True
    sizes = []
    for _ in range(count):
        bs = _random_boxset(rng)
        pl = boxes.plan(bs)
        sizes.append(len(bs.boxes))
        ok = ok and boxes.validate_plan(bs, pl) and len(pl.steps) == len(bs.boxes) - 1
    return CriterionResult(
        6, "boxes planner correctness", ok,
        {"count": count, "max_boxes": max(sizes)}, time.time() - t0,
    )


def _synth_targets():
    polar = tower.polar_spectrum(4, 4, 0)
    polar_bs = boxes.boxify(polar, eps=0.5)
    l_bs = boxes.BoxSet(eps=1.0, boxes=frozenset({(0, 0), (1, 0), (1, 1)}))
    return {"polar_4x4": polar_bs, "l_shape": l_bs}


def criterion_7(quick: bool = False) -> CriterionResult:
    """Pair synthesis defects shrink from ell=64 to the top ladder order;
    spectra sit exactly on box centers."""
    t0 = time.time()
    ells = (64, 256) if quick else (64, 512)
    details = {}
    ok = True
    for name, bs in _synth_targets().items():
        defects = {}
        for ell in ells:
            pw = boxes.synth_pair(bs, ell)
            defects[ell] = pw.defect
            centers = [boxes.box_center(b, bs.eps) for b in sorted(bs.boxes)]
            spec_vals = pw.spectrum_n().points
            on_centers = all(
                any(abs(z - c) <= MERGE_TOL for c in centers) for z, _ in spec_vals
            )
            covers = all(
                any(abs(z - c) <= MERGE_TOL for z, _ in spec_vals) for c in centers
            )
            ok = ok and on_centers and covers
        ok = ok and defects[ells[-1]] < defects[ells[0]]
        details[name] = defects
    return CriterionResult(7, "pair synthesis trend", ok, details, time.time() - t0)


def criterion_8(quick: bool = False) -> CriterionResult:
    """Tower with ell1 = 12 and ratios 2x2, 2x2, 2x2."""
    t0 = time.time()
    ratios = [(2, 2)] * (2 if quick else 3)
    levels = tower.bookkeeping(12, ratios)
    built = tower.build_tower(levels)
    identities = all(
        (2 * lv.arithmetic.m + 1) * lv.arithmetic.n + 1 + lv.arithmetic.q == lv.arithmetic.ell
        for lv in built
    )
    pairing = all(lv.pairing_cost <= lv.paper_bound + 1e-9 for lv in built[1:])
    inc_eq = all(abs(lv.increment - lv.pairing_cost) <= 1e-9 for lv in built[1:])
    dens = [lv.disk_density for lv in built]
    dens_dec = all(a > b for a, b in zip(dens, dens[1:]))
    ok = identities and pairing and inc_eq and dens_dec
    return CriterionResult(
        8, "uhf tower bookkeeping and pairing", ok,
        {
            "levels": [
                {
                    "ell": lv.arithmetic.ell, "n": lv.arithmetic.n,
                    "m": lv.arithmetic.m, "q": lv.arithmetic.q,
                    "pairing_cost": lv.pairing_cost, "paper_bound": lv.paper_bound,
                    "increment": lv.increment, "disk_density": lv.disk_density,
                }
                for lv in built
            ],
        },
        time.time() - t0,
    )


def criterion_9(quick: bool = False) -> CriterionResult:
    """Bottleneck matcher equals brute-force permutation minimax."""
    t0 = time.time()
    count = 40 if quick else 100
    rng = np.random.default_rng(SUITE_SEED + 9)
    ok = True
    for _ in range(count):
        k = int(rng.integers(1, 8))
        a = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        b = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        got = tower.bottleneck_match(Spectrum.from_values(a), Spectrum.from_values(b)).cost
        want = tower.brute_bottleneck_cost(a, b)
        ok = ok and abs(got - want) <= 1e-12
    return CriterionResult(9, "bottleneck matcher exactness", ok, {"count": count}, time.time() - t0)


def criterion_10(quick: bool = False) -> CriterionResult:
    """Degree caps, shift-scan root uniqueness, exact dyadic traces."""
    t0 = time.time()
    count = 20 if quick else 50
    rng = np.random.default_rng(SUITE_SEED + 10)
    caps_ok = True
    for _ in range(count):
        sizes = tuple(int(s) for s in rng.integers(1, 6, size=rng.integers(1, 5)))
        alg = obstructions.BlockAlgebra(block_sizes=sizes)
        blocks = []
        for s in sizes:
            core = np.triu(rng.standard_normal((s, s)) + 1j * rng.standard_normal((s, s)), 1)
            from .linalg import NilWitness

            blocks.append(NilWitness(basis=np.eye(s, dtype=complex), core=core, defect=0.0))
        caps_ok = caps_ok and obstructions.degree_cap_check(alg, blocks)
    scan_ok = True
    for _ in range(10):
        d = int(rng.integers(1, 6))
        t = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        grid = [complex(x, y) for x in (-1, 0, 1) for y in (-1, 0, 1)]
        bounds, root = obstructions.shift_scan(t, grid)
        tau = np.trace(t) / d
        scan_ok = scan_ok and abs(root + tau) <= 1e-12
        scan_ok = scan_ok and all(abs(bd - abs(lam - root)) <= 1e-12 for lam, bd in bounds)
    dyadic_ok = True
    for n in range(1, 11):
        _, tl, _ = obstructions.dyadic_example(n)
        dyadic_ok = dyadic_ok and tl == (2 ** n + 1) / 2 ** (n + 1)
    ok = caps_ok and scan_ok and dyadic_ok
    return CriterionResult(
        10, "obstruction checks", ok,
        {"degree_caps": caps_ok, "shift_scan": scan_ok, "dyadic": dyadic_ok},
        time.time() - t0,
    )


def criterion_11(quick: bool = False) -> CriterionResult:
    """Tensor suite: comparison bound, structural vanishing, coherence."""
    t0 = time.time()
    count = 20 if quick else 100
    rng = np.random.default_rng(SUITE_SEED + 11)
    approx_ok = True
    for _ in range(count):
        dims = [int(rng.integers(2, 5)) for _ in range(2)]
        stem_s = tuple(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)) for d in dims)
        stem_r = tuple(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)) for d in dims)
        fam_s = tensors.TensorFamily(stem=stem_s, tail_rule="tail_A", dims_schedule=(4,))
        fam_r = tensors.TensorFamily(stem=stem_r, tail_rule="tail_M", dims_schedule=(4,))
        cmp_res = tensors.tensorapprox_check(fam_s, fam_r, 2)
        approx_ok = approx_ok and cmp_res.holds
    fam1 = tensors.TensorFamily(stem=(np.eye(2, dtype=complex),), tail_rule="tail_M",
                                dims_schedule=(3, 3))
    fam2 = tensors.TensorFamily(
        stem=(np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex),),
        tail_rule="tail_M", dims_schedule=(3, 3),
    )
    vanish_ok, level, witness = tensors.product_vanish_check([fam1, fam2], k=2, ell=2,
                                                             samples=8, seed=SUITE_SEED)
    vanish_ok = vanish_ok and witness > 1e-9   # shorter products need not vanish
    jordan = np.array([[0.0, 1.0], [0.0, 0.0]])
    cone_ok = tensors.cone_check(tensors.PolyMatrix.from_scalar_tensor([0, 1], jordan), 2)
    cone_ok = cone_ok and not tensors.cone_check(
        tensors.PolyMatrix.from_scalar_tensor([0, 1], np.eye(2)), 6
    )
    phi_fam = tensors.TensorFamily(stem=(np.eye(2, dtype=complex),), tail_rule="tail_A",
                                   dims_schedule=(5, 5))
    resid = tensors.phi_residual(phi_fam, 1)
    phi_ok = resid <= 1e-9
    ok = approx_ok and vanish_ok and cone_ok and phi_ok
    return CriterionResult(
        11, "tensor suite", ok,
        {"comparison_count": count, "vanish_shared_level": level,
         "short_product_witness": witness, "phi_residual": resid},
        time.time() - t0,
    )


ALL_CRITERIA = [
    criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
    criterion_7, criterion_8, criterion_9, criterion_10, criterion_11,
]


def _comparable_payload(results) -> bytes:
    stripped = [
        {"number": r.number, "name": r.name, "passed": r.passed, "details": r.details}
        for r in results
    ]
    return json.dumps(stripped, sort_keys=True, default=float).encode()


def criterion_12(quick: bool = False) -> CriterionResult:
    """Determinism: two quick-size runs of criteria 1-11 are byte-identical
    (wall times excluded, as the reports exclude only the timestamp).

    The full-size double run would only re-measure the same seeds at larger
    dims; determinism is a property of the seeding, so quick sizes stand in
    regardless of mode.
    """
    t0 = time.time()
    one = _comparable_payload([f(quick=True) for f in ALL_CRITERIA])
    two = _comparable_payload([f(quick=True) for f in ALL_CRITERIA])
    return CriterionResult(
        12, "suite determinism", one == two,
        {"bytes": len(one), "identical": one == two}, time.time() - t0,
    )


def run_all(quick: bool = False):
    results = [f(quick=quick) for f in ALL_CRITERIA]
    results.append(criterion_12(quick=quick))
    return results
