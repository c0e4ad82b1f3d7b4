import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cryamabe.errors import DataError
from cryamabe.fieldio import (read_field_binary, read_field_csv, read_snapshot,
                              write_field_binary, write_field_csv, write_snapshot)
from cryamabe.sphere import build_grid

GRID = build_grid(4, 4, 6)


@pytest.mark.parametrize("cplx", [False, True])
def test_csv_round_trip_is_exact(tmp_path, cplx):
    rng = np.random.default_rng(0)
    f = rng.standard_normal(GRID.shape)
    if cplx:
        f = f + 1j * rng.standard_normal(GRID.shape)
    path = tmp_path / "f.csv"
    write_field_csv(path, GRID, f)
    assert np.array_equal(read_field_csv(path, GRID), f)


def test_csv_rows_may_be_shuffled(tmp_path):
    f = np.arange(GRID.size, dtype=float).reshape(GRID.shape)
    path = tmp_path / "f.csv"
    write_field_csv(path, GRID, f)
    lines = path.read_text().splitlines()
    path.write_text("\n".join([lines[0]] + lines[1:][::-1]) + "\n")
    assert np.array_equal(read_field_csv(path, GRID), f)


def test_csv_errors(tmp_path):
    with pytest.raises(DataError):
        write_field_csv(tmp_path / "x.csv", GRID, np.zeros(3))
    path = tmp_path / "short.csv"
    write_field_csv(path, GRID, np.zeros(GRID.shape))
    path.write_text("\n".join(path.read_text().splitlines()[:-1]))
    with pytest.raises(DataError):
        read_field_csv(path, GRID)


@settings(max_examples=20, deadline=None)
@given(st.tuples(st.integers(1, 5), st.integers(1, 5), st.integers(1, 5)), st.booleans(),
       st.integers(0, 2**31))
def test_binary_round_trip(shape, cplx, seed):
    import tempfile
    from pathlib import Path
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(shape) + (1j * rng.standard_normal(shape) if cplx else 0)
    with tempfile.TemporaryDirectory() as d:
        p = Path(d) / "f.bin"
        write_field_binary(p, f)
        g = read_field_binary(p)
    assert g.dtype == f.dtype and np.array_equal(g, f)


def test_binary_truncated_and_mismatched(tmp_path):
    p = tmp_path / "f.bin"
    write_field_binary(p, np.ones(GRID.shape))
    with pytest.raises(DataError):
        read_field_binary(p, build_grid(4, 4, 4))
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(DataError):
        read_field_binary(p)


def test_snapshot_round_trip(tmp_path):
    lam = np.random.default_rng(3).standard_normal(GRID.shape)
    a11 = lam * (1 + 2j)
    jp, bp = write_snapshot(tmp_path / "s", GRID, 0.125, {"lambda": lam, "A11": a11}, {"params": 1})
    header, grid, fields = read_snapshot(jp)
    assert grid == GRID and header["t"] == 0.125 and header["params"] == 1
    assert np.array_equal(fields["lambda"], lam) and np.array_equal(fields["A11"], a11)
    assert json.loads(jp.read_text())["blocks"] == ["lambda", "A11"] and bp.exists()
