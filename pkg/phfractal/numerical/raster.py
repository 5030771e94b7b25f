"""
Rasterization of depth-k pre-fractals and the NRRD-style bitmap file format.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np

from ..config import memory_budget_bytes
from ..errors import ArgumentError, ResourceError
from ..structs import FractalSpec
from .cubical import estimate_complex_bytes

logger = logging.getLogger(__name__)

NRRD_MAGIC = "NRRD0004"


@dataclass(frozen=True)
class Bitmap:
    """Occupancy grid; cell (i0, i1, ...) covers origin + h·[i, i+1)."""
    occupancy: np.ndarray
    spacing: float
    origin: Tuple[float, ...]

    def __post_init__(self):
        occ = self.occupancy
        if occ.dtype != np.bool_:
            raise ArgumentError(f"occupancy must be boolean, got {occ.dtype}")
        if not 1 <= occ.ndim <= 3:
            raise ArgumentError(f"bitmaps are 1-, 2- or 3-dimensional, got {occ.ndim}")
        if min(occ.shape) < 2:
            raise ArgumentError(f"every axis needs >= 2 cells, got shape {occ.shape}")
        if not occ.any():
            raise ArgumentError("bitmap has no occupied cell")
        if not self.spacing > 0:
            raise ArgumentError(f"spacing must be positive, got {self.spacing}")
        if len(self.origin) != occ.ndim:
            raise ArgumentError("origin length must equal the bitmap dimension")

    @property
    def ambient_dim(self) -> int:
        return self.occupancy.ndim

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.occupancy.shape


def _inverse_ratio(spec: FractalSpec) -> int:
    ratio = spec.scale_ratio
    if ratio is None:
        raise ArgumentError(f"{spec.name}: rasterization needs IFS maps sharing one ratio")
    inv = round(1.0 / ratio)
    if inv < 2 or not math.isclose(1.0 / ratio, inv, rel_tol=1e-9):
        raise ArgumentError(f"{spec.name}: IFS ratio {ratio} is not 1/integer")
    return inv


def prefractal_bitmap(
    spec: FractalSpec,
    depth: int,
    resolution: int,
    memory_budget: Optional[float] = None,
) -> Bitmap:
    """
    Occupancy of the depth-k pre-fractal at `resolution` cells per unit length.

    The union of the images of the initial cube under all length-k map
    compositions is a union of cells of side r^k; `resolution·extent` must be a
    multiple of (1/r)^k so that every such box is a block of whole grid cells.
    """
    if depth < 1:
        raise ArgumentError(f"depth must be >= 1, got {depth}")
    if not spec.ifs:
        raise ArgumentError(f"{spec.name} has no IFS maps to rasterize")
    inv = _inverse_ratio(spec)
    coarse = inv ** depth

    cells = resolution * spec.extent
    n_cells = round(cells)
    if not math.isclose(cells, n_cells, rel_tol=1e-12) or n_cells % coarse:
        smallest = math.ceil(coarse / spec.extent)
        above = math.ceil(resolution / coarse) * coarse
        raise ArgumentError(
            f"resolution {resolution} does not align with depth {depth}: it must be a multiple of "
            f"{coarse} (smallest valid n = {smallest}, next valid n = {above})"
        )

    dim = spec.ambient_dim
    shape = (n_cells,) * dim
    needed = estimate_complex_bytes(shape)
    budget = memory_budget_bytes(memory_budget)
    if needed > budget:
        raise ResourceError(
            f"grid {shape} needs about {needed / 2**30:.1f} GiB for its cubical complex, "
            f"budget is {budget / 2**30:.1f} GiB"
        )

    steps = []
    for m in spec.ifs:
        step = [t * inv / spec.extent for t in m.translation]
        if any(not math.isclose(s, round(s), abs_tol=1e-9) for s in step):
            raise ArgumentError(f"{spec.name}: IFS translation {m.translation} is off the 1/{inv} lattice")
        steps.append([round(s) for s in step])
    steps_arr = np.array(steps, dtype=np.int64)

    origins = np.zeros((1, dim), dtype=np.int64)
    for _ in range(depth):
        origins = (inv * origins[:, None, :] + steps_arr[None, :, :]).reshape(-1, dim)

    grid = np.zeros((coarse,) * dim, dtype=bool)
    grid[tuple(origins.T)] = True
    block = n_cells // coarse
    for axis in range(dim):
        grid = np.repeat(grid, block, axis=axis)

    logger.info(f"{spec.name}: depth {depth} pre-fractal on {shape} grid, {int(grid.sum())} occupied cells")
    return Bitmap(occupancy=grid, spacing=spec.extent / n_cells, origin=(0.0,) * dim)

# ─── FILE FORMAT ────────────────────────────────────────────────────────────

def save_bitmap(bitmap: Bitmap, path: Union[str, Path]) -> Path:
    """NRRD-style text header, blank line, then the occupancy as a packed bitset (C order)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # NRRD lists the fastest axis first
    sizes = " ".join(str(s) for s in reversed(bitmap.shape))
    header = "\n".join([
        NRRD_MAGIC,
        "# phfractal pre-fractal bitmap",
        "type: uint8",
        f"dimension: {bitmap.ambient_dim}",
        f"sizes: {sizes}",
        "spacings: " + " ".join(repr(bitmap.spacing) for _ in bitmap.shape),
        "space origin: (" + ",".join(repr(o) for o in reversed(bitmap.origin)) + ")",
        "encoding: raw",
        "content: packed-bits",
    ])
    payload = np.packbits(bitmap.occupancy.ravel(order="C")).tobytes()
    path.write_bytes(header.encode("ascii") + b"\n\n" + payload)
    return path


def load_bitmap(path: Union[str, Path]) -> Bitmap:
    raw = Path(path).read_bytes()
    head, sep, payload = raw.partition(b"\n\n")
    lines = head.decode("ascii").splitlines()
    if not sep or not lines or lines[0] != NRRD_MAGIC:
        raise ArgumentError(f"{path} is not a phfractal bitmap file")

    fields: Dict[str, str] = {}
    for line in lines[1:]:
        if line.startswith("#"):
            continue
        key, _, value = line.partition(":")
        fields[key.strip()] = value.strip()

    try:
        shape = tuple(int(s) for s in reversed(fields["sizes"].split()))
        spacing = float(fields["spacings"].split()[0])
        origin = tuple(float(o) for o in reversed(fields["space origin"].strip("()").split(",")))
    except (KeyError, ValueError) as e:
        raise ArgumentError(f"{path}: malformed header ({e})") from e

    count = int(np.prod(shape))
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8), count=count)
    return Bitmap(occupancy=bits.astype(bool).reshape(shape), spacing=spacing, origin=origin)
