"""
Persistence of a filtered cubical complex over the two-element field.

Degree 0 comes from a union-find sweep over the edges (elder rule). Higher
degrees come from boundary-matrix reduction, dimensions processed top-down so
that every pivot found in dimension d+1 clears a column of dimension d.
"""

import logging
import math
from collections import Counter
from typing import Dict, List, Literal, Set, Tuple

import numpy as np

from ..barcodes import make_diagram
from ..errors import ArgumentError
from ..structs import PersistenceDiagram
from .cubical import FilteredCubicalComplex, check_monotone

logger = logging.getLogger(__name__)

Pair = Tuple[int, float, float]


class UnionFind:
    """Disjoint sets over filtration ranks; a root is always the oldest member of its set."""

    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, x: int, y: int) -> Tuple[int, int]:
        """Merge the sets of x and y; returns (survivor, absorbed) roots. Caller ensures they differ."""
        rx, ry = self.find(x), self.find(y)
        elder, younger = (rx, ry) if rx < ry else (ry, rx)
        self.parent[younger] = elder
        return elder, younger


def _face_ranks(complex_: FilteredCubicalComplex, rank: np.ndarray, flat: int) -> List[int]:
    return [int(rank[f]) for f in complex_.faces(flat)]


def _zero_persistence(
    complex_: FilteredCubicalComplex,
    rank: np.ndarray,
    values: np.ndarray,
    dims: np.ndarray,
) -> Tuple[List[Pair], List[int], Set[int]]:
    """Degree-0 pairs by union-find, the surviving roots and the ranks of positive (cycle-creating) edges."""
    order = complex_.order
    uf = UnionFind(len(order))
    pairs: List[Pair] = []
    positive_edges: Set[int] = set()
    for r in np.flatnonzero(dims == 1):
        r = int(r)
        u, v = _face_ranks(complex_, rank, int(order[r]))
        ru, rv = uf.find(u), uf.find(v)
        if ru == rv:
            positive_edges.add(r)
            continue
        _, younger = uf.union(ru, rv)
        pairs.append((0, float(values[younger]), float(values[r])))
    roots = sorted({uf.find(int(r)) for r in np.flatnonzero(dims == 0)})
    return pairs, roots, positive_edges


def _reduce_dimension(
    complex_: FilteredCubicalComplex,
    rank: np.ndarray,
    values: np.ndarray,
    dims: np.ndarray,
    dim: int,
    cleared: Set[int],
) -> Tuple[List[Pair], Set[int], Set[int]]:
    """
    Reduce the columns of dimension `dim` in filtration order.

    Returns the finite pairs of degree dim-1, the ranks of the faces used as
    pivots (to be cleared one dimension down) and the ranks of zero columns.
    """
    order = complex_.order
    pivots: Dict[int, Set[int]] = {}
    pairs: List[Pair] = []
    zero_columns: Set[int] = set()
    for j in np.flatnonzero(dims == dim):
        j = int(j)
        if j in cleared:
            continue
        column = set(_face_ranks(complex_, rank, int(order[j])))
        while column:
            low = max(column)
            reducer = pivots.get(low)
            if reducer is None:
                break
            column ^= reducer
        if column:
            low = max(column)
            pivots[low] = column
            pairs.append((dim - 1, float(values[low]), float(values[j])))
        else:
            zero_columns.add(j)
    return pairs, set(pivots), zero_columns


def persistence(
    complex_: FilteredCubicalComplex,
    h0_method: Literal["union_find", "reduction"] = "union_find",
) -> PersistenceDiagram:
    """
    Barcode of the sublevel filtration in grid units.

    Essential classes get death +inf; the diagram's diameter is the grid
    diagonal. Pairs born and killed at the same value are omitted.
    """
    if h0_method not in ("union_find", "reduction"):
        raise ArgumentError(f"unknown h0_method '{h0_method}'")
    check_monotone(complex_)

    order = complex_.order
    rank = np.empty(order.size, dtype=np.int64)
    rank[order] = np.arange(order.size)
    values = complex_.values.ravel()[order]
    dims = complex_.dims.ravel()[order]
    top = complex_.ambient_dim

    pairs: List[Pair] = []
    essential: List[Tuple[int, int]] = []
    cleared: Set[int] = set()
    lowest = 1 if h0_method == "reduction" else 2
    for dim in range(top, lowest - 1, -1):
        found, cleared, zeros = _reduce_dimension(complex_, rank, values, dims, dim, cleared)
        pairs.extend(found)
        # a zero column that was never cleared is a class nothing kills
        essential.extend((dim, j) for j in zeros)
        logger.debug(f"dimension {dim}: {len(found)} pairs, {len(zeros)} essential")

    if h0_method == "union_find":
        zero_pairs, roots, positive_edges = _zero_persistence(complex_, rank, values, dims)
        pairs.extend(zero_pairs)
        essential.extend((0, r) for r in roots)
        essential.extend((1, e) for e in sorted(positive_edges - cleared))
    else:
        vertices = {int(r) for r in np.flatnonzero(dims == 0)}
        essential.extend((0, r) for r in sorted(vertices - cleared))

    pairs.extend((d, float(values[r]), math.inf) for d, r in essential)
    counts = Counter((d, b, e) for d, b, e in pairs if e > b)
    diagonal = math.sqrt(sum((s - 1) ** 2 for s in complex_.vertex_shape))
    diagram = make_diagram(top, diagonal, ((d, b, e, m) for (d, b, e), m in counts.items()))
    logger.info(f"Persistence done: {sum(counts.values())} bars ({h0_method} for degree 0)")
    return diagram
