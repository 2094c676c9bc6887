import json

import numpy as np
import pytest

from nilprox.cli import main
from nilprox.fileio import read_cmat, read_spectrum_json, write_cmat


def run(args):
    return main(args)


def load(path):
    with open(path) as fh:
        return json.load(fh)


def strip_timestamp(payload):
    payload = dict(payload)
    payload.pop("timestamp", None)
    return payload


def test_kahan_small_order_passes(tmp_path):
    rpt = tmp_path / "k.json"
    assert run(["kahan", "--n", "16", "--m", "1", "--report", str(rpt)]) == 0
    data = load(rpt)
    assert data["n"] == 16
    assert all(data["checks"])
    assert data["density"]["dense"] is True
    assert data["version"].startswith("nilprox ")


def test_kahan_large_order_flags_anomaly(tmp_path):
    # the ln(2)/(2 ln n) constant measurably fails from n = 64 up: exit 4,
    # report still written with the finding
    rpt = tmp_path / "k64.json"
    assert run(["kahan", "--n", "64", "--report", str(rpt)]) == 4
    data = load(rpt)
    assert data["checks"][1] is False
    assert data["checks"][0] and data["checks"][2] and data["checks"][3]


def test_kahan_reports_are_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(["kahan", "--n", "16", "--m", "2", "--report", str(a)])
    run(["kahan", "--n", "16", "--m", "2", "--report", str(b)])
    assert strip_timestamp(load(a)) == strip_timestamp(load(b))


def test_distance_identity_bracket(tmp_path):
    mat = tmp_path / "id2.cmat"
    write_cmat(mat, np.eye(2))
    rpt = tmp_path / "d.json"
    assert run(["distance", "--matrix", str(mat), "--restarts", "2",
                "--iters", "30", "--report", str(rpt)]) == 0
    data = load(rpt)
    assert data["trace_lower"] == pytest.approx(1.0)
    assert data["schur_upper"] == pytest.approx(1.0, abs=1e-9)
    assert data["estimate"] == pytest.approx(1.0, abs=1e-9)
    assert read_cmat(data["witness_path"]).shape == (2, 2)


def test_distance_malformed_cmat(tmp_path):
    bad = tmp_path / "bad.cmat"
    bad.write_text("2 2\n1,0\n")
    assert run(["distance", "--matrix", str(bad)]) == 2


def test_distance_missing_file(tmp_path):
    assert run(["distance", "--matrix", str(tmp_path / "nope.cmat")]) == 2


def test_polar_then_boxes(tmp_path):
    spec = tmp_path / "polar.json"
    assert run(["polar", "--n", "2", "--m", "2", "--out", str(spec)]) == 0
    assert read_spectrum_json(spec).total == 11
    rpt = tmp_path / "boxes.json"
    assert run(["boxes", "--spectrum", str(spec), "--eps", "0.5",
                "--ell", "32", "--report", str(rpt)]) == 0
    data = load(rpt)
    assert [0, 0] in data["boxes"]
    assert data["total_defect"] > 0
    assert len(data["plan"]) == len(data["boxes"]) - 1
    assert read_cmat(data["N_path"]).shape[0] == read_cmat(data["M_path"]).shape[0]


def test_tower_report(tmp_path):
    rpt = tmp_path / "t.json"
    assert run(["tower", "--l1", "12", "--ratios", "2x2,2x2", "--report", str(rpt)]) == 0
    data = load(rpt)
    assert [lv["ell"] for lv in data["levels"]] == [12, 48, 192]
    assert all(lv["pairing_within_bound"] for lv in data["levels"])
    assert "nil_estimate" in data["levels"][0]


def test_obstruct_dyadic(tmp_path):
    rpt = tmp_path / "o.json"
    assert run(["obstruct", "dyadic", "--n", "3", "--report", str(rpt)]) == 0
    assert load(rpt)["trace_lower"] == 0.5625


def test_obstruct_scan(tmp_path):
    mat = tmp_path / "m.cmat"
    write_cmat(mat, np.diag([1.0, 0.0]))
    rpt = tmp_path / "s.json"
    assert run(["obstruct", "scan", "--matrix", str(mat),
                "--grid", "0,0;-0.5,0", "--report", str(rpt)]) == 0
    data = load(rpt)
    assert data["root"] == [-0.5, 0.0]


def test_obstruct_sequence(tmp_path):
    rpt = tmp_path / "g.json"
    assert run(["obstruct", "sequence", "--levels", "2",
                "--schedule", "1.0,0.62", "--report", str(rpt)]) == 0
    data = load(rpt)
    assert data["levels"][0]["order"] == 2
    assert data["multiset_ok"] is True


def test_tensor_command(tmp_path):
    s = tmp_path / "s.cmat"
    r = tmp_path / "r.cmat"
    write_cmat(s, np.eye(2))
    write_cmat(r, np.array([[0.0, 1.0], [0.0, 0.0]]))
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "families": [
            {"stem": [str(s)], "tail_rule": "tail_A", "dims_schedule": [4]},
            {"stem": [str(r)], "tail_rule": "tail_M", "dims_schedule": [4]},
        ]
    }))
    rpt = tmp_path / "tens.json"
    assert run(["tensor", "--config", str(cfg), "--K", "2", "--report", str(rpt)]) == 0
    data = load(rpt)
    assert data["comparison"]["holds"] is True
    assert "phi_residual" in data["families"][0]


def test_regress_empty_suite_name():
    assert run(["regress", "--suite", ""]) == 2


def test_regress_unknown_suite():
    assert run(["regress", "--suite", "nope"]) == 2
