"""
Symbolic self-similar barcode families of the built-in fractals.

A family is an infinite, curated description of bars; everything in this
module materializes it only down to a lifetime threshold δ > 0.
"""

import logging
import math
from itertools import product
from pathlib import Path
from typing import List, Tuple, Union

from pydantic import ValidationError

from .barcodes import make_diagram
from .config import MENGER_MAX_STEP, TIE_RTOL
from .errors import ArgumentError, ContractViolation, StepRangeError
from .structs import (
    DustFamily,
    EssentialBar,
    FractalSpec,
    GeometricFamily,
    IFSMap,
    PersistenceDiagram,
)

logger = logging.getLogger(__name__)

BUILTIN_NAMES = ("cantor", "sierpinski_carpet", "cantor_dust", "menger")

Family = Union[GeometricFamily, DustFamily, EssentialBar]
BarRow = Tuple[float, float, int]

SQRT2 = math.sqrt(2.0)
SQRT3 = math.sqrt(3.0)
THIRD = 1.0 / 3.0
SIXTH = 1.0 / 6.0

# ─── STEP ARITHMETIC ────────────────────────────────────────────────────────
# Enumeration and the closed partial sums in `invariants` share these helpers,
# so both always agree on which bars lie above a threshold.

def is_above(lifetime: float, delta: float) -> bool:
    """Strict `lifetime > δ`, with lifetimes within TIE_RTOL of δ counted as equal."""
    return lifetime > delta * (1.0 + TIE_RTOL)


def step_lifetime(lifetime0: float, ratio: float, k: int) -> float:
    return lifetime0 * ratio ** (k - 1)


def steps_above(lifetime0: float, ratio: float, delta: float) -> int:
    """Number K of steps k = 1..K with lifetime0·r^(k-1) > δ."""
    if not is_above(lifetime0, delta):
        return 0
    k = max(1, int(math.log(lifetime0 / delta) / math.log(1.0 / ratio)) + 1)
    while k > 1 and not is_above(step_lifetime(lifetime0, ratio, k), delta):
        k -= 1
    while is_above(step_lifetime(lifetime0, ratio, k + 1), delta):
        k += 1
    return k


def step_count(count0: int, count_ratio: float, k: int) -> int:
    """c0·m^(k-1) as an exact integer."""
    if float(count_ratio).is_integer():
        return count0 * int(count_ratio) ** (k - 1)
    value = count0 * count_ratio ** (k - 1)
    if abs(value - round(value)) > 1e-9 * max(1.0, value):
        raise ArgumentError(f"count {count0}·{count_ratio}^{k - 1} = {value} is not an integer")
    return int(round(value))


def dust_lifetime(fam: DustFamily, k: int, i: int) -> float:
    # b0·r^(k-1)·(sqrt(1+v^i) - 1), written without the cancellation
    x = fam.inner_decay ** i
    return fam.birth0 * fam.ratio ** (k - 1) * x / (math.sqrt(1.0 + x) + 1.0)


def dust_inner_steps(fam: DustFamily, k: int, delta: float) -> int:
    """Number of inner indices i with lifetime(k, i) > δ."""
    n = 0
    while is_above(dust_lifetime(fam, k, n + 1), delta):
        n += 1
    return n


def largest_lifetime(fam: Family) -> float:
    if isinstance(fam, GeometricFamily):
        return fam.lifetime0
    if isinstance(fam, DustFamily):
        return dust_lifetime(fam, 1, 1)
    return fam.death

# ─── BUILT-IN SPECS ─────────────────────────────────────────────────────────

def _cube_maps(dim: int, keep) -> Tuple[IFSMap, ...]:
    return tuple(
        IFSMap(ratio=THIRD, translation=tuple(a * THIRD for a in corner))
        for corner in product(range(3), repeat=dim)
        if keep(corner)
    )


def _cantor() -> FractalSpec:
    return FractalSpec(
        name="cantor",
        ambient_dim=1,
        diameter=1.0,
        families=(
            EssentialBar(degree=0, death=1.0),
            GeometricFamily(degree=0, birth0=0.0, death0=SIXTH, ratio=THIRD, count0=1, count_ratio=2),
        ),
        ifs=_cube_maps(1, lambda c: c[0] != 1),
        reference_values={"sigma_0": math.log(2) / math.log(3), "beta_0": 0.466, "euler_phf": 0.466},
    )


def _sierpinski_carpet() -> FractalSpec:
    return FractalSpec(
        name="sierpinski_carpet",
        ambient_dim=2,
        diameter=SQRT2,
        families=(
            EssentialBar(degree=0, death=SQRT2),
            GeometricFamily(degree=1, birth0=0.0, death0=SIXTH, ratio=THIRD, count0=1, count_ratio=8),
        ),
        ifs=_cube_maps(2, lambda c: c != (1, 1)),
        reference_values={"sigma_1": math.log(8) / math.log(3), "beta_1": 0.0084, "euler_phf": -0.0084},
    )


def _cantor_dust() -> FractalSpec:
    return FractalSpec(
        name="cantor_dust",
        ambient_dim=2,
        diameter=SQRT2,
        families=(
            EssentialBar(degree=0, death=SQRT2),
            GeometricFamily(degree=0, birth0=0.0, death0=SIXTH, ratio=THIRD, count0=3, count_ratio=4),
            GeometricFamily(degree=1, birth0=SIXTH, death0=SQRT2 / 6, ratio=THIRD, count0=1, count_ratio=4),
            DustFamily(degree=1, birth0=SIXTH, ratio=THIRD, count0=4, count_ratio=4,
                       inner_growth=2, inner_decay=1.0 / 9.0),
        ),
        ifs=_cube_maps(2, lambda c: 1 not in c),
        reference_values={
            "sigma_0": math.log(4) / math.log(3),
            "sigma_1": math.log(4) / math.log(3),
            "beta_0": 0.1456,
            "beta_1": 0.0438,
            "euler_phf": 0.1018,
        },
    )


def _menger() -> FractalSpec:
    return FractalSpec(
        name="menger",
        ambient_dim=3,
        diameter=SQRT3,
        families=(
            EssentialBar(degree=0, death=SQRT3),
            # A_j = 3·20^(j-1) + 2·8^(j-1)
            GeometricFamily(degree=1, birth0=0.0, death0=SIXTH, ratio=THIRD, count0=3, count_ratio=20),
            GeometricFamily(degree=1, birth0=0.0, death0=SIXTH, ratio=THIRD, count0=2, count_ratio=8),
            GeometricFamily(degree=2, birth0=SIXTH, death0=SQRT2 / 6, ratio=THIRD, count0=1, count_ratio=20),
            DustFamily(degree=2, birth0=SIXTH, ratio=THIRD, count0=6, count_ratio=20,
                       inner_growth=2, inner_decay=1.0 / 9.0),
        ),
        ifs=_cube_maps(3, lambda c: sum(1 for a in c if a == 1) <= 1),
        reference_values={
            "sigma_1": math.log(20) / math.log(3),
            "sigma_2": math.log(20) / math.log(3),
            "beta_1": 0.001691,
            "beta_2": 0.001555,
            "euler_phf": -0.0001353,
        },
    )


_BUILDERS = {
    "cantor": _cantor,
    "sierpinski_carpet": _sierpinski_carpet,
    "cantor_dust": _cantor_dust,
    "menger": _menger,
}


def builtin_spec(name: str) -> FractalSpec:
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise ArgumentError(f"unknown fractal '{name}'; choose one of {', '.join(BUILTIN_NAMES)}") from None
    return builder()


def load_spec(path: Union[str, Path]) -> FractalSpec:
    path = Path(path)
    try:
        return FractalSpec.model_validate_json(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ArgumentError(f"cannot read spec file {path}: {e}") from e
    except ValidationError as e:
        raise ArgumentError(f"invalid spec file {path}: {e}") from e


def save_spec(spec: FractalSpec, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(spec.model_dump_json(indent=2), encoding="utf-8")
    return path


def resolve_spec(name_or_path: str) -> FractalSpec:
    """Built-in name first, then a JSON spec file."""
    if name_or_path in _BUILDERS:
        return builtin_spec(name_or_path)
    if Path(name_or_path).is_file():
        return load_spec(name_or_path)
    raise ArgumentError(
        f"'{name_or_path}' is neither a built-in fractal ({', '.join(BUILTIN_NAMES)}) nor a spec file"
    )

# ─── ENUMERATION ────────────────────────────────────────────────────────────

def enumerate_family(fam: Family, delta: float) -> List[BarRow]:
    """All bars of `fam` with lifetime > δ, as (birth, death, multiplicity)."""
    if not delta > 0:
        raise ArgumentError(f"enumeration needs δ > 0, got {delta}")

    if isinstance(fam, EssentialBar):
        return [(0.0, fam.death, 1)] if is_above(fam.death, delta) else []

    rows: List[BarRow] = []
    if isinstance(fam, GeometricFamily):
        for k in range(1, steps_above(fam.lifetime0, fam.ratio, delta) + 1):
            scale = fam.ratio ** (k - 1)
            rows.append((fam.birth0 * scale, fam.death0 * scale, step_count(fam.count0, fam.count_ratio, k)))
        return rows

    k = 1
    while True:
        n_inner = dust_inner_steps(fam, k, delta)
        if n_inner == 0:
            break
        scale = fam.ratio ** (k - 1)
        outer = step_count(fam.count0, fam.count_ratio, k)
        for i in range(1, n_inner + 1):
            rows.append((
                fam.birth0 * scale,
                fam.birth0 * scale * math.sqrt(1.0 + fam.inner_decay ** i),
                outer * step_count(1, fam.inner_growth, i),
            ))
        k += 1
    return rows


def spec_diagram(spec: FractalSpec, delta: float) -> PersistenceDiagram:
    """Symbolic diagram of every degree, truncated to lifetimes > δ."""
    bars = [
        (fam.degree, birth, death, mult)
        for fam in spec.families
        for birth, death, mult in enumerate_family(fam, delta)
    ]
    logger.debug(f"{spec.name}: {len(bars)} symbolic bar rows above δ={delta:g}")
    return make_diagram(spec.ambient_dim, spec.diameter, bars)

# ─── COMPLEXITY AND COUNTS ──────────────────────────────────────────────────

def family_complexity(fam: Family) -> float:
    if isinstance(fam, EssentialBar):
        return 0.0
    outer = math.log(fam.count_ratio) / math.log(1.0 / fam.ratio)
    if isinstance(fam, DustFamily):
        return max(outer, math.log(fam.inner_growth) / math.log(1.0 / fam.inner_decay))
    return outer


def exact_complexity(spec: FractalSpec, i: int) -> float:
    """σ_i: largest convergence exponent over the degree-i families, 0 if none."""
    return max((family_complexity(fam) for fam in spec.degree_families(i)), default=0.0)


def menger_h1_counts(j: int) -> Tuple[int, int]:
    """(A_j, B_j) for the Menger sponge, by recurrence, checked against the closed forms."""
    if j < 1:
        raise ArgumentError(f"step index must be >= 1, got {j}")
    if j > MENGER_MAX_STEP:
        raise StepRangeError(f"menger_h1_counts supports j <= {MENGER_MAX_STEP}, got {j}")

    b = 0
    for t in range(2, j + 1):
        b = 24 * 20 ** (t - 2) + 8 * b
    a = 5 * 20 ** (j - 1) - b

    b_closed = -(2 ** (3 * j - 2)) + 2 * 20 ** (j - 1)
    a_closed = 3 * 20 ** (j - 1) + 2 ** (3 * j - 2)
    if (a, b) != (a_closed, b_closed):
        raise ContractViolation(f"Menger counts disagree at j={j}: recurrence {(a, b)} vs closed {(a_closed, b_closed)}")
    return a, b

