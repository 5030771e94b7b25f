"""
Cubical sublevel filtration of a distance field (V-construction).

Cells live on the doubled grid of shape 2S-1: a cell's coordinate is odd along
exactly the axes it spans, so its dimension is the number of odd coordinates
and its faces sit one step away along each of those axes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, List, Tuple

import numpy as np

from ..config import BYTES_PER_CELL
from ..errors import ContractViolation

if TYPE_CHECKING:
    from .edt import DistanceField

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FilteredCubicalComplex:
    values: np.ndarray     # filtration value per cell, doubled-grid shape
    dims: np.ndarray       # cell dimension per cell, doubled-grid shape
    order: np.ndarray      # flat cell indices in filtration order
    spacing: float

    @property
    def ambient_dim(self) -> int:
        return self.values.ndim

    @property
    def vertex_shape(self) -> Tuple[int, ...]:
        return tuple((s + 1) // 2 for s in self.values.shape)

    @property
    def n_cells(self) -> int:
        return int(self.values.size)

    @cached_property
    def strides(self) -> Tuple[int, ...]:
        shape = self.values.shape
        return tuple(int(np.prod(shape[a + 1:], dtype=np.int64)) for a in range(len(shape)))

    def cell_counts(self) -> List[int]:
        return np.bincount(self.dims.ravel(), minlength=self.ambient_dim + 1).tolist()

    def faces(self, flat: int) -> List[int]:
        out = []
        rem = flat
        for stride in self.strides:
            coord, rem = divmod(rem, stride)
            if coord % 2:
                out.append(flat - stride)
                out.append(flat + stride)
        return out


def estimate_complex_bytes(vertex_shape: Tuple[int, ...]) -> int:
    cells = int(np.prod([2 * s - 1 for s in vertex_shape], dtype=np.int64))
    return cells * BYTES_PER_CELL


def _axis_slices(ndim: int, axis: int):
    odd, left, right = [slice(None)] * ndim, [slice(None)] * ndim, [slice(None)] * ndim
    odd[axis], left[axis], right[axis] = slice(1, None, 2), slice(0, -1, 2), slice(2, None, 2)
    return tuple(odd), tuple(left), tuple(right)


def cubical_filtration(field: DistanceField) -> FilteredCubicalComplex:
    vertex = field.distance
    ndim = vertex.ndim
    shape = tuple(2 * s - 1 for s in vertex.shape)

    values = np.full(shape, -np.inf)
    values[tuple(slice(None, None, 2) for _ in range(ndim))] = vertex
    dims = np.zeros(shape, dtype=np.int8)
    for axis in range(ndim):
        odd, left, right = _axis_slices(ndim, axis)
        values[odd] = np.maximum(values[left], values[right])
        parity = (np.arange(shape[axis]) % 2).astype(np.int8)
        dims += parity.reshape([-1 if a == axis else 1 for a in range(ndim)])

    flat_index = np.arange(values.size)
    order = np.lexsort((flat_index, dims.ravel(), values.ravel()))
    complex_ = FilteredCubicalComplex(values=values, dims=dims, order=order, spacing=field.spacing)
    logger.info(f"Cubical complex on {shape}: cell counts by dimension {complex_.cell_counts()}")
    return complex_


def check_monotone(complex_: FilteredCubicalComplex) -> None:
    """Every cell's value is >= its faces' values; raises ContractViolation otherwise."""
    values = complex_.values
    if not np.all(np.isfinite(values)):
        raise ContractViolation("filtration contains non-finite values")
    for axis in range(values.ndim):
        odd, left, right = _axis_slices(values.ndim, axis)
        if not (np.all(values[odd] >= values[left]) and np.all(values[odd] >= values[right])):
            raise ContractViolation(f"filtration is not monotone along axis {axis}")


def sublevel_cell_counts(complex_: FilteredCubicalComplex, eps: float) -> List[int]:
    """Number of cells of each dimension with value <= eps (grid units)."""
    inside = complex_.values <= eps
    return np.bincount(complex_.dims[inside].ravel(), minlength=complex_.ambient_dim + 1).tolist()
