import numpy as np
import pytest

from nilprox import ValidationError, op_norm
from nilprox.tensors import (
    PolyMatrix,
    TensorFamily,
    anchor_vector,
    cone_check,
    phi_residual,
    product_vanish_check,
    tensorapprox_check,
    truncate,
)

J2 = np.array([[0.0, 1.0], [0.0, 0.0]])


# --- anchors ---------------------------------------------------------------------


@pytest.mark.parametrize("dim", [2, 3, 5, 8])
def test_anchor_fixed_point(dim):
    from nilprox.kahan import build_kahan

    xi = anchor_vector(dim)
    a = build_kahan(dim).A
    assert np.linalg.norm(a @ xi - xi) <= 1e-9
    assert abs(np.linalg.norm(xi) - 1.0) <= 1e-12


# --- truncation -------------------------------------------------------------------


def test_truncate_stem_only():
    fam = TensorFamily(stem=(np.eye(2, dtype=complex),), tail_rule="tail_A", dims_schedule=(5,))
    assert np.allclose(truncate(fam, 1), np.eye(2))


def test_truncate_dimension_product():
    fam = TensorFamily(
        stem=(np.eye(2, dtype=complex), np.eye(3, dtype=complex)),
        tail_rule="tail_A", dims_schedule=(),
    )
    assert truncate(fam, 2).shape == (6, 6)


def test_truncate_below_stem_rejected():
    fam = TensorFamily(stem=(np.eye(2, dtype=complex), np.eye(2, dtype=complex)),
                       tail_rule="tail_A", dims_schedule=())
    with pytest.raises(ValidationError):
        truncate(fam, 1)


def test_phi_consistency_tail_a(rng):
    stem = (rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)),)
    fam = TensorFamily(stem=stem, tail_rule="tail_A", dims_schedule=(5, 4))
    assert phi_residual(fam, 1) <= 1e-9
    assert phi_residual(fam, 2) <= 1e-9


def test_phi_residual_tail_m_reported_not_small():
    fam = TensorFamily(stem=(np.eye(2, dtype=complex),), tail_rule="tail_M",
                       dims_schedule=(5, 5))
    # the nilpotent tail does not fix the anchor, so the residual is order one
    assert phi_residual(fam, 1) > 1e-3


# --- comparison bound ----------------------------------------------------------------


def test_tensorapprox_identical_families():
    fam = TensorFamily(stem=(np.eye(2, dtype=complex),), tail_rule="tail_A", dims_schedule=(4,))
    res = tensorapprox_check(fam, fam, 2)
    assert res.lhs <= 1e-12 and res.holds


def test_tensorapprox_single_level(rng):
    s = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    r = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    fam_s = TensorFamily(stem=(s,), tail_rule="tail_A", dims_schedule=())
    fam_r = TensorFamily(stem=(r,), tail_rule="tail_A", dims_schedule=())
    res = tensorapprox_check(fam_s, fam_r, 1)
    assert res.lhs == pytest.approx(op_norm(s - r), abs=1e-12)
    assert res.holds  # C >= 1 always


def test_tensorapprox_seeded_suite(rng):
    for _ in range(20):
        dims = [int(rng.integers(2, 4)) for _ in range(2)]
        fam_s = TensorFamily(
            stem=tuple(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)) for d in dims),
            tail_rule="tail_A", dims_schedule=(3,),
        )
        fam_r = TensorFamily(
            stem=tuple(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)) for d in dims),
            tail_rule="tail_M", dims_schedule=(3,),
        )
        assert tensorapprox_check(fam_s, fam_r, 2).holds


def test_tensorapprox_dim_mismatch(rng):
    fam_s = TensorFamily(stem=(np.eye(2, dtype=complex),), tail_rule="tail_A", dims_schedule=())
    fam_r = TensorFamily(stem=(np.eye(3, dtype=complex),), tail_rule="tail_A", dims_schedule=())
    with pytest.raises(ValidationError):
        tensorapprox_check(fam_s, fam_r, 1)


# --- product vanishing -----------------------------------------------------------------


def test_products_vanish_single_family():
    fam = TensorFamily(stem=(np.eye(2, dtype=complex),), tail_rule="tail_M", dims_schedule=(3,))
    ok, level, witness = product_vanish_check([fam], k=2, ell=2, samples=4)
    assert ok
    assert level == 2
    assert witness > 1e-9   # length ell-1 products need not vanish


def test_products_vanish_mixed_families(rng):
    s = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    fam1 = TensorFamily(stem=(np.eye(2, dtype=complex),), tail_rule="tail_M", dims_schedule=(3,))
    fam2 = TensorFamily(stem=(s,), tail_rule="tail_M", dims_schedule=(3,))
    ok, level, _ = product_vanish_check([fam1, fam2], k=2, ell=2, samples=8)
    assert ok and level == 2


def test_products_need_tail_m():
    fam = TensorFamily(stem=(np.eye(2, dtype=complex),), tail_rule="tail_A", dims_schedule=(3,))
    with pytest.raises(ValidationError):
        product_vanish_check([fam], k=2, ell=2)


# --- cone elements ------------------------------------------------------------------------


def test_cone_t_times_jordan():
    elem = PolyMatrix.from_scalar_tensor([0, 1], J2)
    assert cone_check(elem, 2)


def test_cone_t_times_identity_never_vanishes():
    elem = PolyMatrix.from_scalar_tensor([0, 1], np.eye(2))
    assert not cone_check(elem, 8)


def test_cone_sum_with_common_nilpotent_tail():
    # sum f_j (x) N_j with both N_j strictly upper 3x3: third power vanishes
    n1 = np.array([[0, 1.0, 0], [0, 0, 1.0], [0, 0, 0]])
    n2 = np.array([[0, 0, 2.0], [0, 0, 0], [0, 0, 0]])
    elem = PolyMatrix.from_scalar_tensor([0, 1], n1) + PolyMatrix.from_scalar_tensor([0, 0, 1], n2)
    assert cone_check(elem, 3)
    assert not cone_check(elem, 2)


def test_cone_entries_must_vanish_at_zero():
    with pytest.raises(ValidationError):
        PolyMatrix.from_scalar_tensor([1.0, 1.0], J2)


def test_cone_degree_cap():
    high = PolyMatrix.from_scalar_tensor([0] * 40 + [1], np.eye(2))
    with pytest.raises(ValidationError, match="degree"):
        high.matmul(high)


def test_cone_exactness_no_float_noise():
    # coefficients stay exactly zero after cancellation of integer entries
    elem = PolyMatrix.from_scalar_tensor([0, 1], J2)
    sq = elem.matmul(elem)
    assert sq.is_zero()
