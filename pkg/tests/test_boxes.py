import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nilprox import ConvergenceError, MERGE_TOL, Spectrum, ValidationError
from nilprox.boxes import (
    BoxSet,
    box_center,
    box_of,
    boxify,
    fit_path_poly,
    good_boxes,
    plan,
    synth_pair,
    validate_plan,
)
from nilprox.linalg import poly_eval


# --- box indexing ----------------------------------------------------------------


def test_box_half_open_convention():
    assert box_of(0.5 + 0j, 1.0) == (0, 0)       # 0.5 in (-0.5, 0.5]
    assert box_of(1.0 + 0j, 1.0) == (1, 0)       # 1.0 in (0.5, 1.5]
    assert box_of(-0.5 + 0.5j, 1.0) == (-1, 0)   # boundaries belong to the left box


@settings(max_examples=60, deadline=None)
@given(st.floats(-20, 20), st.floats(-20, 20))
def test_box_of_contains_point(re, im):
    eps = 0.75
    n, m = box_of(complex(re, im), eps)
    assert eps * n - eps / 2 < re + 1e-12 and re <= eps * n + eps / 2 + 1e-12
    assert eps * m - eps / 2 < im + 1e-12 and im <= eps * m + eps / 2 + 1e-12


# --- boxify ----------------------------------------------------------------------


def test_boxify_segment():
    bs = boxify(Spectrum.from_values([0.0, 1.0]), 1.0)
    assert set(bs.boxes) == {(0, 0), (1, 0)}


def test_boxify_boundary_collapse():
    bs = boxify(Spectrum.from_values([0.0, 0.5 + 0.5j]), 1.0)
    assert set(bs.boxes) == {(0, 0)}


def test_boxify_disconnected_rejected():
    with pytest.raises(ValidationError):
        boxify(Spectrum.from_values([0.0, 2.0]), 1.0)


def test_boxset_requires_origin():
    with pytest.raises(ValidationError):
        BoxSet(eps=1.0, boxes=frozenset({(1, 0)}))


# --- good boxes and plans -----------------------------------------------------------


def test_good_boxes_singleton():
    assert good_boxes(BoxSet(eps=1.0, boxes=frozenset({(0, 0)}))) == set()


def test_good_boxes_path_graph():
    bs = BoxSet(eps=1.0, boxes=frozenset({(0, 0), (1, 0), (2, 0)}))
    assert good_boxes(bs) == {(2, 0)}  # (1,0) is a cut vertex


def test_good_boxes_cycle():
    bs = BoxSet(eps=1.0, boxes=frozenset({(0, 0), (1, 0), (0, 1), (1, 1)}))
    assert good_boxes(bs) == {(1, 0), (0, 1), (1, 1)}


def test_plan_sizes_and_validity():
    bs = BoxSet(eps=1.0, boxes=frozenset({(0, 0), (1, 0), (1, 1), (2, 1)}))
    pl = plan(bs)
    assert len(pl.steps) == len(bs.boxes) - 1
    assert validate_plan(bs, pl)


def test_plan_trivial():
    bs = BoxSet(eps=1.0, boxes=frozenset({(0, 0)}))
    assert plan(bs).steps == ()


def test_plan_random_connected(rng):
    for _ in range(25):
        cells = {(0, 0)}
        while len(cells) < int(rng.integers(2, 20)):
            base = list(cells)[rng.integers(0, len(cells))]
            cells.add((base[0] + int(rng.integers(-1, 2)), base[1] + int(rng.integers(-1, 2))))
        bs = BoxSet(eps=0.5, boxes=frozenset(cells))
        pl = plan(bs)
        assert validate_plan(bs, pl)


def test_validate_plan_detects_bad_order():
    bs = BoxSet(eps=1.0, boxes=frozenset({(0, 0), (1, 0), (2, 0)}))
    pl = plan(bs)
    reversed_steps = type(pl)(eps=pl.eps, steps=tuple(reversed(pl.steps)))
    assert not validate_plan(bs, reversed_steps)


# --- path polynomials ----------------------------------------------------------------


def test_fit_linear_path_exact():
    pp = fit_path_poly([(0, 0), (1, 0)], 1.0)
    assert pp.degree == 1
    assert pp.sup_error <= 1e-12
    assert abs(pp.coeffs[1] - 1.0) <= 1e-12


def test_fit_single_box_zero_poly():
    pp = fit_path_poly([(0, 0)], 1.0)
    assert np.all(pp.coeffs == 0)


def test_fit_l_shaped_path():
    pp = fit_path_poly([(0, 0), (1, 0), (1, 1)], 1.0, max_deg=24)
    assert pp.sup_error <= 0.5
    assert pp.degree <= 24
    assert pp.coeffs[0] == 0
    # endpoint lands near the removed box center
    assert abs(poly_eval(pp.coeffs, np.array([1.0]))[0] - (1 + 1j)) <= 0.5 + 1e-9


def test_fit_requires_origin_start():
    with pytest.raises(ValidationError):
        fit_path_poly([(1, 0), (0, 0)], 1.0)


def test_fit_degree_cap():
    # a long wiggling path cannot be fit at degree 1
    path = [(0, 0), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)]
    with pytest.raises(ConvergenceError):
        fit_path_poly(path, 0.25, max_deg=1)


# --- synthesis ------------------------------------------------------------------------


def test_synth_trivial_target():
    bs = BoxSet(eps=1.0, boxes=frozenset({(0, 0)}))
    pw = synth_pair(bs, 16)
    assert pw.defect == 0.0
    assert pw.dim == 1
    assert pw.spectrum_n().points == ((0j, 1),)


def test_synth_segment():
    bs = BoxSet(eps=1.0, boxes=frozenset({(0, 0), (1, 0)}))
    pw = synth_pair(bs, 64)
    centers = {box_center(b, 1.0) for b in bs.boxes}
    for z, _ in pw.spectrum_n().points:
        assert any(abs(z - c) <= MERGE_TOL for c in centers)
    for c in centers:
        assert any(abs(z - c) <= MERGE_TOL for z, _ in pw.spectrum_n().points)
    assert 0 < pw.defect < 2.0


def test_synth_direct_sum_norm_identity():
    # total defect equals the norm of the materialized global difference
    bs = BoxSet(eps=1.0, boxes=frozenset({(0, 0), (1, 0), (1, 1)}))
    pw = synth_pair(bs, 32)
    from nilprox import op_norm

    global_defect = op_norm(pw.materialize_n() - pw.materialize_m().materialized)
    assert global_defect == pytest.approx(pw.defect, abs=1e-9)


def test_synth_certified_nilpotent():
    bs = BoxSet(eps=1.0, boxes=frozenset({(0, 0), (1, 0)}))
    pw = synth_pair(bs, 32)
    w = pw.materialize_m()
    assert np.all(np.tril(w.core) == 0)


def test_synth_defect_shrinks_with_order():
    bs = BoxSet(eps=1.0, boxes=frozenset({(0, 0), (1, 0)}))
    d64 = synth_pair(bs, 64).defect
    d128 = synth_pair(bs, 128).defect
    assert d128 < d64


def test_synth_requires_min_order():
    with pytest.raises(ValidationError):
        synth_pair(BoxSet(eps=1.0, boxes=frozenset({(0, 0)})), 8)
