import numpy as np
import pytest

from nilprox import Spectrum, ValidationError
from nilprox.fileio import (
    read_cmat,
    read_spectrum_json,
    write_cmat,
    write_spectrum_json,
)


def test_cmat_round_trip(tmp_path, rng):
    m = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    p = tmp_path / "m.cmat"
    write_cmat(p, m)
    back = read_cmat(p)
    assert np.array_equal(back, m)   # shortest round-trip repr is exact


def test_cmat_header(tmp_path):
    p = tmp_path / "m.cmat"
    write_cmat(p, np.eye(2))
    assert p.read_text().splitlines()[0] == "2 2"


def test_cmat_rejects_bad_header(tmp_path):
    p = tmp_path / "bad.cmat"
    p.write_text("2 3\n")
    with pytest.raises(ValidationError, match="line 1"):
        read_cmat(p)


def test_cmat_rejects_bad_token(tmp_path):
    p = tmp_path / "bad.cmat"
    p.write_text("1 1\nnot-a-pair\n")
    with pytest.raises(ValidationError, match="line 2"):
        read_cmat(p)


def test_cmat_rejects_nan(tmp_path):
    p = tmp_path / "bad.cmat"
    p.write_text("1 1\nnan,0.0\n")
    with pytest.raises(ValidationError, match="non-finite"):
        read_cmat(p)


def test_cmat_rejects_short_file(tmp_path):
    p = tmp_path / "bad.cmat"
    p.write_text("3 3\n1,0 0,0 0,0\n")
    with pytest.raises(ValidationError, match="data lines"):
        read_cmat(p)


def test_spectrum_round_trip(tmp_path):
    s = Spectrum.from_points([(0j, 3), (0.5 + 0.25j, 1), (1.0 + 0j, 2)])
    p = tmp_path / "s.json"
    write_spectrum_json(p, s)
    back = read_spectrum_json(p)
    assert back.points == s.points


def test_spectrum_rejects_bad_multiplicity(tmp_path):
    p = tmp_path / "s.json"
    p.write_text("[[0.0, 0.0, 0]]")
    with pytest.raises(ValidationError, match="multiplicity"):
        read_spectrum_json(p)


def test_spectrum_rejects_non_list(tmp_path):
    p = tmp_path / "s.json"
    p.write_text("{}")
    with pytest.raises(ValidationError):
        read_spectrum_json(p)
