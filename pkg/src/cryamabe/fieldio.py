"""Field and snapshot serialization.

CSV layout: ``index, eta, xi1, xi2, value`` (complex fields use
``value_re, value_im``).  Binary layout, little endian:

    int64 n_eta, int64 n_xi1, int64 n_xi2, int64 kind   (kind 0 real, 1 complex)
    float64 values, row-major; complex values interleaved (re, im)

A snapshot is ``<stem>.json`` (header) plus ``<stem>.bin`` holding one binary
field block per entry of ``header["blocks"]``, in order.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import DataError
from .sphere import HopfGrid

_HEADER = np.dtype("<i8")
_VALUES = np.dtype("<f8")


def write_field_csv(path, grid: HopfGrid, f):
    f = np.asarray(f)
    if f.shape != grid.shape:
        raise DataError(f"field shape {f.shape} does not match grid {grid.shape}")
    cplx = np.iscomplexobj(f)
    _, eta, x1, x2 = grid.nodes()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "eta", "xi1", "xi2"] + (["value_re", "value_im"] if cplx else ["value"]))
        for i, (e, a, b, v) in enumerate(zip(eta.ravel(), x1.ravel(), x2.ravel(), f.ravel())):
            row = [i, repr(float(e)), repr(float(a)), repr(float(b))]
            row += [repr(float(v.real)), repr(float(v.imag))] if cplx else [repr(float(v))]
            w.writerow(row)


def read_field_csv(path, grid: HopfGrid):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file")
    head, body = rows[0], rows[1:]
    if len(body) != grid.size:
        raise DataError(f"{path}: {len(body)} rows for a grid of {grid.size} nodes")
    data = np.array(body, dtype=float)
    idx = data[:, 0].astype(np.int64)
    if not np.array_equal(np.sort(idx), np.arange(grid.size)):
        raise DataError(f"{path}: node indices are not a permutation of 0..{grid.size - 1}")
    vals = data[:, 4] + 1j * data[:, 5] if "value_im" in head else data[:, 4]
    out = np.empty(grid.size, dtype=vals.dtype)
    out[idx] = vals
    return out.reshape(grid.shape)


def _block_bytes(f):
    f = np.asarray(f)
    kind = 1 if np.iscomplexobj(f) else 0
    head = np.array(list(f.shape) + [kind], dtype=_HEADER)
    vals = np.ascontiguousarray(f, dtype=np.complex128 if kind else np.float64).view(np.float64)
    return head.tobytes() + vals.astype(_VALUES).tobytes()


def _read_block(buf, offset):
    head = np.frombuffer(buf, dtype=_HEADER, count=4, offset=offset)
    shape, kind = tuple(int(v) for v in head[:3]), int(head[3])
    if kind not in (0, 1) or min(shape) <= 0:
        raise DataError(f"corrupt field header {head.tolist()}")
    count = int(np.prod(shape)) * (2 if kind else 1)
    offset += 4 * _HEADER.itemsize
    if offset + count * _VALUES.itemsize > len(buf):
        raise DataError("truncated field block")
    vals = np.frombuffer(buf, dtype=_VALUES, count=count, offset=offset).astype(np.float64)
    if kind:
        vals = vals.view(np.complex128)
    return vals.reshape(shape).copy(), offset + count * _VALUES.itemsize


def write_field_binary(path, f):
    Path(path).write_bytes(_block_bytes(f))


def read_field_binary(path, grid: HopfGrid | None = None):
    f, _ = _read_block(Path(path).read_bytes(), 0)
    if grid is not None and f.shape != grid.shape:
        raise DataError(f"{path}: field shape {f.shape} does not match grid {grid.shape}")
    return f


def write_snapshot(stem, grid: HopfGrid, t, fields: dict, extra=None):
    """Write ``stem.json`` and ``stem.bin``; returns both paths."""
    stem = Path(stem)
    header = {"t": float(t), "grid": grid.to_dict(), "blocks": list(fields)}
    if extra:
        header.update(extra)
    data = b"".join(_block_bytes(v) for v in fields.values())
    bin_path, json_path = stem.with_suffix(".bin"), stem.with_suffix(".json")
    bin_path.write_bytes(data)
    json_path.write_text(json.dumps(header, indent=1))
    return json_path, bin_path


def read_snapshot(json_path):
    json_path = Path(json_path)
    header = json.loads(json_path.read_text())
    grid = HopfGrid.from_dict(header["grid"])
    buf = json_path.with_suffix(".bin").read_bytes()
    fields, off = {}, 0
    for name in header["blocks"]:
        fields[name], off = _read_block(buf, off)
        if fields[name].shape != grid.shape:
            raise DataError(f"{json_path}: block {name!r} has shape {fields[name].shape}")
    return header, grid, fields
