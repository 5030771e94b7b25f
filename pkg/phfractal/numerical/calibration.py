"""
Grid-unit diagrams to physical units, and matching against symbolic bars.
"""

import logging
import math
from collections import Counter
from typing import Dict, Iterable, List, Optional, Tuple, Union

from ..barcodes import make_diagram
from ..config import FLOOR_FACTOR
from ..errors import ArgumentError
from ..structs import Barcode, DegreeMatch, MatchReport, PersistenceDiagram

logger = logging.getLogger(__name__)


def calibrate(
    diagram: PersistenceDiagram,
    h: float,
    diameter: float,
    floor_factor: float = FLOOR_FACTOR,
) -> PersistenceDiagram:
    """
    Scale a grid-unit diagram by h, drop bars shorter than floor_factor cells
    and cap essential bars at the diameter.
    """
    if not h > 0:
        raise ArgumentError(f"grid spacing must be positive, got {h}")
    if floor_factor < 0:
        raise ArgumentError(f"floor factor must be >= 0, got {floor_factor}")
    if not diameter > 0:
        raise ArgumentError(f"diameter must be positive, got {diameter}")

    kept, dropped = [], 0
    for bar in diagram.bars:
        if math.isinf(bar.death):
            kept.append((bar.dim, bar.birth * h, diameter, bar.multiplicity))
        elif bar.lifetime < floor_factor:
            dropped += bar.multiplicity
        else:
            kept.append((bar.dim, bar.birth * h, bar.death * h, bar.multiplicity))
    logger.info(f"Calibrated at h={h:.6g}: kept {sum(m for *_, m in kept)} bars, dropped {dropped} below {floor_factor}h")
    return make_diagram(diagram.ambient_dim, diameter, kept, resolution_floor=floor_factor * h)


Rows = Union[PersistenceDiagram, Iterable[Barcode]]


def _by_degree(bars: Rows) -> Dict[int, Counter]:
    source = bars.bars if isinstance(bars, PersistenceDiagram) else bars
    out: Dict[int, Counter] = {}
    for bar in source:
        out.setdefault(bar.dim, Counter())[(bar.birth, bar.death)] += bar.multiplicity
    return out


def _match_degree(numeric: Counter, symbolic: Counter, tol: float) -> Tuple[int, float]:
    candidates: List[Tuple[float, Tuple[float, float], Tuple[float, float]]] = []
    for a in numeric:
        for b in symbolic:
            dist = max(abs(a[0] - b[0]), abs(a[1] - b[1]))
            if dist <= tol:
                candidates.append((dist, a, b))
    candidates.sort()

    left, right = Counter(numeric), Counter(symbolic)
    matched, worst = 0, 0.0
    for dist, a, b in candidates:
        take = min(left[a], right[b])
        if take <= 0:
            continue
        left[a] -= take
        right[b] -= take
        matched += take
        worst = max(worst, dist)
    return matched, worst


def match_report(
    numeric: Rows,
    symbolic: Rows,
    tol: float,
    degrees: Optional[Iterable[int]] = None,
) -> MatchReport:
    """Greedy nearest matching in the L-infinity (birth, death) distance, bars within `tol` only."""
    if tol < 0:
        raise ArgumentError(f"matching tolerance must be >= 0, got {tol}")
    num, sym = _by_degree(numeric), _by_degree(symbolic)
    wanted = sorted(set(degrees) if degrees is not None else set(num) | set(sym))

    per_degree = []
    for i in wanted:
        a, b = num.get(i, Counter()), sym.get(i, Counter())
        matched, worst = _match_degree(a, b, tol)
        per_degree.append(DegreeMatch(
            degree=i,
            matched=matched,
            unmatched_numeric=sum(a.values()) - matched,
            unmatched_symbolic=sum(b.values()) - matched,
            max_displacement=worst,
        ))
    return MatchReport(tol=tol, per_degree=per_degree)
