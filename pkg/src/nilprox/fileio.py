"""File formats: .cmat matrices and spectrum JSON.

.cmat: first line "d d", then d lines of d whitespace-separated tokens
"re,im" in shortest round-trip decimal.  Readers reject NaN/Inf tokens and
report the offending line.  Spectrum JSON is a list of [re, im, mult].

All writes go through a temp file and an atomic replace.
"""

from __future__ import annotations

import json
import math
import os
import tempfile

import numpy as np

from .errors import ValidationError
from .linalg import Spectrum, as_matrix


def _atomic_write_text(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_cmat(path: str, m) -> None:
    a = as_matrix(m).astype(complex)
    d = a.shape[0]
    lines = [f"{d} {d}"]
    for i in range(d):
        lines.append(" ".join(f"{a[i, j].real!r},{a[i, j].imag!r}" for j in range(d)))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def read_cmat(path: str) -> np.ndarray:
    with open(path) as fh:
        raw = fh.read().splitlines()
    if not raw:
        raise ValidationError(f"{path}: empty file")
    head = raw[0].split()
    if len(head) != 2 or head[0] != head[1]:
        raise ValidationError(f"{path}: line 1: expected 'd d', got {raw[0]!r}")
    try:
        d = int(head[0])
    except ValueError as exc:
        raise ValidationError(f"{path}: line 1: bad dimension {head[0]!r}") from exc
    if d < 0 or len(raw) < d + 1:
        raise ValidationError(f"{path}: expected {d} data lines, found {len(raw) - 1}")
    out = np.zeros((d, d), dtype=complex)
    for i in range(d):
        toks = raw[i + 1].split()
        if len(toks) != d:
            raise ValidationError(f"{path}: line {i + 2}: expected {d} tokens, got {len(toks)}")
        for j, tok in enumerate(toks):
            parts = tok.split(",")
            if len(parts) != 2:
                raise ValidationError(f"{path}: line {i + 2}: token {j + 1}: expected 're,im'")
            try:
                re, im = float(parts[0]), float(parts[1])
            except ValueError as exc:
                raise ValidationError(
                    f"{path}: line {i + 2}: token {j + 1}: unparsable number"
                ) from exc
            if not (math.isfinite(re) and math.isfinite(im)):
                raise ValidationError(f"{path}: line {i + 2}: token {j + 1}: non-finite value")
            out[i, j] = complex(re, im)
    return out


def write_spectrum_json(path: str, spec: Spectrum) -> None:
    data = [[z.real, z.imag, m] for z, m in spec.points]
    _atomic_write_text(path, json.dumps(data, indent=1) + "\n")


def read_spectrum_json(path: str) -> Spectrum:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(data, list):
        raise ValidationError(f"{path}: expected a list of [re, im, multiplicity]")
    pts = []
    for i, row in enumerate(data):
        if not isinstance(row, (list, tuple)) or len(row) != 3:
            raise ValidationError(f"{path}: entry {i}: expected [re, im, multiplicity]")
        re, im, mult = row
        if not (math.isfinite(re) and math.isfinite(im)):
            raise ValidationError(f"{path}: entry {i}: non-finite value")
        if int(mult) != mult or mult < 1:
            raise ValidationError(f"{path}: entry {i}: multiplicity must be a positive integer")
        pts.append((complex(re, im), int(mult)))
    return Spectrum.from_points(pts)


def write_json_report(path: str, payload: dict) -> None:
    """Stable-key JSON; floats serialize in shortest round-trip form."""
    _atomic_write_text(path, json.dumps(payload, indent=1, sort_keys=True) + "\n")
