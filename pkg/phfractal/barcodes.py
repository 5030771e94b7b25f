"""
Finite persistence diagrams: Betti counts, lifetime counts, rescaling and the
barcode CSV format (dim,birth,death,multiplicity; 17 significant digits).
"""

import logging
from itertools import accumulate
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .config import CSV_FLOAT_FORMAT
from .errors import ArgumentError
from .structs import Barcode, PersistenceDiagram

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["dim", "birth", "death", "multiplicity"]


def make_diagram(
    ambient_dim: int,
    diameter: float,
    bars: Iterable[Tuple[int, float, float, int]],
    resolution_floor: float = 0.0,
) -> PersistenceDiagram:
    """Build a diagram from (dim, birth, death, multiplicity) tuples."""
    return PersistenceDiagram(
        ambient_dim=ambient_dim,
        diameter=diameter,
        bars=tuple(Barcode(dim=d, birth=b, death=e, multiplicity=m) for d, b, e, m in bars),
        resolution_floor=resolution_floor,
    )


def degree_arrays(diagram: PersistenceDiagram, i: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    bars = diagram.degree(i)
    births = np.array([b.birth for b in bars], dtype=float)
    deaths = np.array([b.death for b in bars], dtype=float)
    mult = np.array([float(b.multiplicity) for b in bars], dtype=float)
    return births, deaths, mult


def betti_at(diagram: PersistenceDiagram, i: int, eps: float) -> int:
    """Number of degree-i bars alive at eps, with bars read as [birth, death)."""
    if eps < 0 or i < 0:
        raise ArgumentError(f"betti_at needs eps >= 0 and i >= 0, got eps={eps}, i={i}")
    return sum(bar.multiplicity for bar in diagram.degree(i) if bar.birth <= eps < bar.death)


def lifetime_count(diagram: PersistenceDiagram, i: int, eps: float) -> int:
    """I_{i,eps}: degree-i bars whose lifetime exceeds eps (essential bars included)."""
    if not eps > 0:
        raise ArgumentError(f"lifetime_count needs eps > 0, got {eps}")
    return sum(bar.multiplicity for bar in diagram.degree(i) if bar.lifetime > eps)


def betti_curve(diagram: PersistenceDiagram, i: int, eps_grid: Sequence[float]) -> List[Tuple[float, int]]:
    grid = np.asarray(eps_grid, dtype=float)
    if grid.ndim != 1:
        raise ArgumentError("eps grid must be one-dimensional")
    if grid.size and (grid[0] < 0 or np.any(np.diff(grid) <= 0)):
        raise ArgumentError("eps grid must be strictly ascending and non-negative")

    bars = diagram.degree(i)
    if not bars:
        return [(float(e), 0) for e in grid]

    # alive(eps) = #{birth <= eps} - #{death <= eps}, valid because birth < death
    births = sorted((bar.birth, bar.multiplicity) for bar in bars)
    deaths = sorted((bar.death, bar.multiplicity) for bar in bars)
    born_cum = [0, *accumulate(m for _, m in births)]
    dead_cum = [0, *accumulate(m for _, m in deaths)]
    born_idx = np.searchsorted([b for b, _ in births], grid, side="right")
    dead_idx = np.searchsorted([d for d, _ in deaths], grid, side="right")
    return [(float(e), born_cum[bi] - dead_cum[di]) for e, bi, di in zip(grid, born_idx, dead_idx)]


def scale_diagram(diagram: PersistenceDiagram, factor: float) -> PersistenceDiagram:
    if not factor > 0:
        raise ArgumentError(f"scale factor must be positive, got {factor}")
    return PersistenceDiagram(
        ambient_dim=diagram.ambient_dim,
        diameter=diagram.diameter * factor,
        bars=tuple(
            Barcode(dim=b.dim, birth=b.birth * factor, death=b.death * factor, multiplicity=b.multiplicity)
            for b in diagram.bars
        ),
        resolution_floor=diagram.resolution_floor * factor,
    )

# ─── CSV ────────────────────────────────────────────────────────────────────

def diagram_frame(diagram: PersistenceDiagram) -> pd.DataFrame:
    rows = [(b.dim, b.birth, b.death, b.multiplicity) for b in diagram.bars]
    frame = pd.DataFrame(rows, columns=CSV_COLUMNS)
    return frame.astype({"dim": "int64", "birth": "float64", "death": "float64"})


def write_diagram_csv(diagram: PersistenceDiagram, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    diagram_frame(diagram).to_csv(
        path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n", encoding="utf-8"
    )
    logger.debug(f"Wrote {len(diagram.bars)} bar rows to {path}")
    return path


def read_diagram_csv(
    path: Union[str, Path],
    ambient_dim: int,
    diameter: float,
    resolution_floor: float = 0.0,
) -> PersistenceDiagram:
    """Read a barcode CSV; metadata is not part of the file and must be supplied."""
    frame = pd.read_csv(path, float_precision="round_trip")
    if list(frame.columns) != CSV_COLUMNS:
        raise ArgumentError(f"{path}: expected header {','.join(CSV_COLUMNS)}, got {','.join(frame.columns)}")
    frame = frame.astype({"dim": "int64", "birth": "float64", "death": "float64"})
    rows = (
        (int(d), float(b), float(e), int(m))
        for d, b, e, m in frame.itertuples(index=False, name=None)
    )
    return make_diagram(ambient_dim, diameter, rows, resolution_floor)
