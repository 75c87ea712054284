"""Trajectory files.

CSV: header ``step,q_1,...,q_d,accepted``, one row per recorded step.

Binary (little-endian): magic ``b"MALA1"``, u32 ``d``, u64 ``n``, then ``n*d``
f64 positions in row-major order.
"""

import csv
from pathlib import Path
from typing import Iterator, List, Tuple, Union

import numpy as np

MAGIC = b"MALA1"
HEADER = np.dtype([("magic", "S5"), ("d", "<u4"), ("n", "<u8")])

PathLike = Union[str, Path]


def csv_columns(d: int) -> List[str]:
    return ["step", *(f"q_{i + 1}" for i in range(d)), "accepted"]


def trajectory_rows(
    steps: np.ndarray, positions: np.ndarray, accepted: np.ndarray
) -> Iterator[Tuple[Union[int, float], ...]]:
    """Yield ``(step, q_1, ..., q_d, accepted)`` with accepted as 0 or 1."""
    for step, row, acc in zip(steps, np.atleast_2d(positions), accepted):
        yield (int(step), *(float(v) for v in row), int(acc))


def write_csv(
    path: PathLike, steps: np.ndarray, positions: np.ndarray, accepted: np.ndarray
) -> Path:
    path = Path(path)
    d = np.atleast_2d(positions).shape[1]
    with path.open("w", newline="", encoding="utf-8") as fp:
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(csv_columns(d))
        for step, *row, acc in trajectory_rows(steps, positions, accepted):
            writer.writerow([step, *(repr(v) for v in row), acc])
    return path


def write_binary(path: PathLike, positions: np.ndarray) -> Path:
    path = Path(path)
    positions = np.ascontiguousarray(np.atleast_2d(positions), dtype="<f8")
    n, d = positions.shape
    header = np.array([(MAGIC, d, n)], dtype=HEADER)
    with path.open("wb") as fp:
        fp.write(header.tobytes())
        fp.write(positions.tobytes(order="C"))
    return path


def read_binary(path: PathLike) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < HEADER.itemsize:
        raise ValueError(f"{path}: truncated header")
    header = np.frombuffer(raw[: HEADER.itemsize], dtype=HEADER)[0]
    if bytes(header["magic"]) != MAGIC:
        raise ValueError(f"{path}: bad magic {bytes(header['magic'])!r}")
    d, n = int(header["d"]), int(header["n"])
    body = np.frombuffer(raw[HEADER.itemsize :], dtype="<f8")
    if body.size != n * d:
        raise ValueError(f"{path}: expected {n * d} values, found {body.size}")
    return body.reshape(n, d).astype(np.float64)
