"""
Exact Euclidean distance transform (separable lower-envelope passes).

Distances are measured between cell centers in grid units; occupied cells
have distance 0.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import anyio
from anyio import to_process
import numpy as np
import pandas as pd

from ..config import CSV_FLOAT_FORMAT
from ..errors import ArgumentError
from .raster import Bitmap

logger = logging.getLogger(__name__)

LINES_PER_BATCH = 4096


@dataclass(frozen=True)
class DistanceField:
    distance: np.ndarray
    spacing: float
    origin: Tuple[float, ...]

    @property
    def ambient_dim(self) -> int:
        return self.distance.ndim

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.distance.shape


def lower_envelope(f: Sequence[float]) -> List[float]:
    """
    d(q) = min_p (q - p)^2 + f(p) for one line; f may hold +inf.

    Only finite samples enter the envelope, so an all-inf line stays inf.
    """
    n = len(f)
    sites = [p for p in range(n) if f[p] != np.inf]
    if not sites:
        return [np.inf] * n

    v: List[int] = [sites[0]]
    z: List[float] = [-np.inf, np.inf]
    for q in sites[1:]:
        while True:
            p = v[-1]
            s = ((f[q] + q * q) - (f[p] + p * p)) / (2 * q - 2 * p)
            if s <= z[-2] and len(v) > 1:
                v.pop()
                z.pop()
                continue
            break
        v.append(q)
        z[-1] = s
        z.append(np.inf)

    out = [0.0] * n
    k = 0
    for q in range(n):
        while z[k + 1] < q:
            k += 1
        out[q] = (q - v[k]) ** 2 + f[v[k]]
    return out


def _transform_lines(lines: np.ndarray) -> np.ndarray:
    return np.array([lower_envelope(line.tolist()) for line in lines], dtype=float)


async def _axis_pass(values: np.ndarray, axis: int, workers: int) -> np.ndarray:
    moved = np.moveaxis(values, axis, -1)
    lines = moved.reshape(-1, moved.shape[-1])
    if workers <= 1 or lines.shape[0] <= LINES_PER_BATCH:
        out = _transform_lines(lines)
    else:
        batches = [lines[i:i + LINES_PER_BATCH] for i in range(0, lines.shape[0], LINES_PER_BATCH)]
        results: List[np.ndarray] = [None] * len(batches)
        limiter = anyio.CapacityLimiter(workers)

        async def run(idx: int) -> None:
            results[idx] = await to_process.run_sync(_transform_lines, batches[idx], limiter=limiter)

        async with anyio.create_task_group() as tg:
            for idx in range(len(batches)):
                tg.start_soon(run, idx)
        out = np.concatenate(results, axis=0)
    return np.moveaxis(out.reshape(moved.shape), -1, axis)


async def edt_async(bitmap: Bitmap, workers: int = 1) -> DistanceField:
    values = np.where(bitmap.occupancy, 0.0, np.inf)
    for axis in range(bitmap.ambient_dim):
        values = await _axis_pass(values, axis, workers)
    logger.info(f"EDT done on {bitmap.shape} grid (workers={workers})")
    return DistanceField(distance=np.sqrt(values), spacing=bitmap.spacing, origin=bitmap.origin)


def edt(bitmap: Bitmap, workers: int = 1) -> DistanceField:
    """Exact distance to the nearest occupied cell center, in grid units."""
    if workers < 1:
        raise ArgumentError(f"workers must be >= 1, got {workers}")
    return anyio.run(edt_async, bitmap, workers)


def export_slices(field: DistanceField, path: Union[str, Path], axis: int = 0, index: int = 0) -> Path:
    """One 2-D slice (or the whole 1-D line) of the field as a CSV table."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = field.distance
    if data.ndim == 3:
        data = np.take(data, index, axis=axis)
    frame = pd.DataFrame(np.atleast_2d(data))
    frame.to_csv(path, index=False, header=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    return path
