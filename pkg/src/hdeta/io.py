"""File formats for datasets, matrices and ground truth.

Binary container layout (all little-endian)::

    b"VSH1" | rows: u64 | cols: u64 | rows*cols f64 values, column-major

A dataset is stored as the ``n x (p + 1)`` matrix ``[y | X]``; a precision
matrix is stored as-is.  CSV datasets carry a header ``y,x1,...,xp``.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .core_model import DataError, Dataset, GroundTruth

MAGIC = b"VSH1"
_HEADER = struct.Struct("<4sQQ")


def write_matrix(path, mat: np.ndarray) -> None:
    mat = np.atleast_2d(np.asarray(mat, dtype="<f8"))
    rows, cols = mat.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, rows, cols))
        fh.write(mat.tobytes(order="F"))


def read_matrix(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise DataError(f"{path}: truncated header")
    magic, rows, cols = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise DataError(f"{path}: bad magic bytes {magic!r}")
    expected = _HEADER.size + 8 * rows * cols
    if len(raw) != expected:
        raise DataError(f"{path}: expected {expected} bytes, found {len(raw)}")
    values = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    return values.reshape((rows, cols), order="F").astype(float)


def write_dataset_binary(path, data: Dataset) -> None:
    write_matrix(path, np.column_stack([data.y, data.x]))


def read_dataset_binary(path) -> Dataset:
    mat = read_matrix(path)
    if mat.shape[1] < 2:
        raise DataError(f"{path}: a dataset needs at least 2 columns (y and x1)")
    return _as_dataset(mat[:, 1:], mat[:, 0], path)


def write_dataset_csv(path, data: Dataset) -> None:
    header = ["y"] + [f"x{j + 1}" for j in range(data.p)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for yi, xi in zip(data.y, data.x):
            w.writerow([repr(float(yi))] + [repr(float(v)) for v in xi])


def read_dataset_csv(path) -> Dataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(header) < 2 or header[0] != "y" or header[1:] != [f"x{j}" for j in range(1, len(header))]:
            raise DataError(f"{path}: line 1: header must be y,x1,...,xp")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}: line {lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise DataError(f"{path}: line {lineno}: non-numeric field") from None
    if not rows:
        raise DataError(f"{path}: no data rows")
    mat = np.asarray(rows)
    return _as_dataset(mat[:, 1:], mat[:, 0], path)


def _as_dataset(x, y, path) -> Dataset:
    try:
        return Dataset(x, y)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


def read_dataset(path) -> Dataset:
    """Read a dataset, dispatching on the magic bytes."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == MAGIC:
        return read_dataset_binary(path)
    return read_dataset_csv(path)


def write_dataset(path, data: Dataset) -> None:
    """Write CSV for ``.csv`` paths, the binary container otherwise."""
    if str(path).lower().endswith(".csv"):
        write_dataset_csv(path, data)
    else:
        write_dataset_binary(path, data)


def write_ground_truth(path, gt: GroundTruth) -> None:
    Path(path).write_text(json.dumps(gt.to_dict()))


def read_ground_truth(path) -> GroundTruth:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from None
    return GroundTruth.from_dict(d)
