"""
PHFRACTAL Core Data Structures
==============================
Pydantic models for strict validation of diagrams, symbolic families, fractal
specs and reports. Every model is frozen and round-trips through JSON.
"""

import math
from datetime import datetime
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .errors import ArgumentError

# ─── BARCODES ───────────────────────────────────────────────────────────────

class Barcode(BaseModel):
    model_config = ConfigDict(frozen=True, ser_json_inf_nan="constants")

    dim: int = Field(..., ge=0, description="Homology degree")
    birth: float = Field(..., ge=0, description="Birth radius")
    death: float = Field(..., description="Death radius; +inf only for raw numerical output")
    multiplicity: int = Field(1, ge=1, description="Number of identical bars")

    @model_validator(mode="after")
    def _check_interval(self) -> "Barcode":
        if math.isnan(self.birth) or math.isnan(self.death):
            raise ValueError("bar endpoints must not be NaN")
        if not self.birth < self.death:
            raise ValueError(f"degenerate bar ({self.birth}, {self.death}) in degree {self.dim}")
        return self

    @property
    def lifetime(self) -> float:
        return self.death - self.birth


class PersistenceDiagram(BaseModel):
    """Finite multiset of bars, kept in canonical (dim, birth, death) order."""
    model_config = ConfigDict(frozen=True, ser_json_inf_nan="constants")

    ambient_dim: int = Field(..., ge=1, le=3, description="Dimension of the ambient space")
    diameter: float = Field(..., gt=0, description="d_inf of the underlying set")
    bars: Tuple[Barcode, ...] = Field(default_factory=tuple)
    resolution_floor: float = Field(0.0, ge=0, description="0 for exact/symbolic diagrams")

    @field_validator("bars")
    @classmethod
    def _canonicalize(cls, bars: Tuple[Barcode, ...]) -> Tuple[Barcode, ...]:
        merged: Dict[Tuple[int, float, float], int] = {}
        for bar in bars:
            key = (bar.dim, bar.birth, bar.death)
            merged[key] = merged.get(key, 0) + bar.multiplicity
        return tuple(
            Barcode(dim=d, birth=b, death=e, multiplicity=m)
            for (d, b, e), m in sorted(merged.items())
        )

    @model_validator(mode="after")
    def _check_degrees(self) -> "PersistenceDiagram":
        for bar in self.bars:
            if bar.dim > self.ambient_dim:
                raise ValueError(f"bar of degree {bar.dim} exceeds ambient dimension {self.ambient_dim}")
        return self

    def degree(self, i: int) -> Tuple[Barcode, ...]:
        return tuple(bar for bar in self.bars if bar.dim == i)

    @property
    def degrees(self) -> List[int]:
        return sorted({bar.dim for bar in self.bars})

# ─── SYMBOLIC FAMILIES ──────────────────────────────────────────────────────

class GeometricFamily(BaseModel):
    """count0·m^(j-1) bars (birth0·r^(j-1), death0·r^(j-1)) for j = 1, 2, ..."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["geometric"] = "geometric"
    degree: int = Field(..., ge=0)
    birth0: float = Field(..., ge=0)
    death0: float = Field(..., gt=0)
    ratio: float = Field(..., gt=0, lt=1, description="Scale ratio r")
    count0: int = Field(..., ge=1)
    count_ratio: float = Field(..., ge=1, description="Count growth m per step")

    @model_validator(mode="after")
    def _check_family(self) -> "GeometricFamily":
        if not self.death0 > self.birth0:
            raise ValueError("death0 must exceed birth0")
        return self

    @property
    def lifetime0(self) -> float:
        return self.death0 - self.birth0

    @property
    def max_death(self) -> float:
        return self.death0


class DustFamily(BaseModel):
    """count0·m^(j-1)·g^(i-1) bars (b0·r^(j-1), b0·sqrt(1+v^i)·r^(j-1)) for i, j = 1, 2, ..."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["dust"] = "dust"
    degree: int = Field(..., ge=0)
    birth0: float = Field(..., gt=0)
    ratio: float = Field(..., gt=0, lt=1)
    count0: int = Field(..., ge=1)
    count_ratio: float = Field(..., ge=1)
    inner_growth: float = Field(..., gt=1, description="Count growth g along the inner index")
    inner_decay: float = Field(..., gt=0, lt=1, description="Decay v of the inner index")

    @model_validator(mode="after")
    def _check_summable(self) -> "DustFamily":
        if not self.inner_growth * self.inner_decay < 1:
            raise ValueError("inner_growth * inner_decay must be < 1")
        return self

    @property
    def max_death(self) -> float:
        return self.birth0 * math.sqrt(1.0 + self.inner_decay)


class EssentialBar(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["essential"] = "essential"
    degree: int = Field(0, ge=0)
    death: float = Field(..., gt=0, description="Capped death, equal to the diameter")

    @property
    def max_death(self) -> float:
        return self.death


Family = Annotated[Union[GeometricFamily, DustFamily, EssentialBar], Field(discriminator="kind")]


class IFSMap(BaseModel):
    """Similarity x -> ratio·x + translation."""
    model_config = ConfigDict(frozen=True)

    ratio: float = Field(..., gt=0, lt=1)
    translation: Tuple[float, ...]


class FractalSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    ambient_dim: int = Field(..., ge=1, le=3)
    diameter: float = Field(..., gt=0)
    extent: float = Field(1.0, gt=0, description="Side length of the initial cube")
    families: Tuple[Family, ...] = Field(default_factory=tuple)
    ifs: Tuple[IFSMap, ...] = Field(default_factory=tuple)
    reference_values: Dict[str, float] = Field(default_factory=dict, description="Published constants")

    @model_validator(mode="after")
    def _check_spec(self) -> "FractalSpec":
        for fam in self.families:
            if fam.degree > self.ambient_dim:
                raise ValueError(f"family degree {fam.degree} exceeds ambient dimension")
            if fam.max_death > self.diameter * (1.0 + 1e-12):
                raise ValueError(f"family death {fam.max_death} exceeds diameter {self.diameter}")
        for m in self.ifs:
            if len(m.translation) != self.ambient_dim:
                raise ValueError("IFS translation length must equal ambient_dim")
        return self

    def degree_families(self, i: int) -> List[Family]:
        return [fam for fam in self.families if fam.degree == i]

    @property
    def degrees(self) -> List[int]:
        return list(range(self.ambient_dim + 1))

    @property
    def scale_ratio(self) -> Optional[float]:
        """Common IFS ratio, or None when the maps disagree."""
        ratios = {m.ratio for m in self.ifs}
        return ratios.pop() if len(ratios) == 1 else None

    def scaled(self, factor: float) -> "FractalSpec":
        """Same fractal with every length multiplied by factor."""
        if not factor > 0:
            raise ArgumentError(f"scale factor must be positive, got {factor}")
        families = []
        for fam in self.families:
            if isinstance(fam, GeometricFamily):
                fam = fam.model_copy(update={"birth0": fam.birth0 * factor, "death0": fam.death0 * factor})
            elif isinstance(fam, DustFamily):
                fam = fam.model_copy(update={"birth0": fam.birth0 * factor})
            else:
                fam = fam.model_copy(update={"death": fam.death * factor})
            families.append(fam)
        ifs = [m.model_copy(update={"translation": tuple(t * factor for t in m.translation)}) for m in self.ifs]
        return self.model_copy(update={
            "diameter": self.diameter * factor,
            "extent": self.extent * factor,
            "families": tuple(families),
            "ifs": tuple(ifs),
        })

# ─── INVARIANT REPORTS ──────────────────────────────────────────────────────

class SDeltaEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    delta: float = Field(..., gt=0)
    s_value: float = Field(..., ge=0)
    ratio: Optional[float] = Field(None, description="S_delta / |log a_j|; None when a_j = 1")
    increment_estimate: Optional[float] = Field(None, description="(S_j - S_{j-1}) / log(1/r)")


class SDeltaTrace(BaseModel):
    model_config = ConfigDict(frozen=True)

    degree: int
    sigma: float
    entries: Tuple[SDeltaEntry, ...] = Field(default_factory=tuple)
    converged_at: Optional[int] = Field(None, description="Step index j where the estimate settled")

    @model_validator(mode="after")
    def _check_monotone(self) -> "SDeltaTrace":
        for prev, cur in zip(self.entries, self.entries[1:]):
            if not cur.delta < prev.delta:
                raise ValueError("trace deltas must be strictly decreasing")
            if cur.s_value < prev.s_value * (1.0 - 1e-12):
                raise ValueError("S_delta must be non-decreasing as delta decreases")
        return self


class DegreeReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    i: int
    sigma: float
    beta_closed: Optional[float] = None
    beta_sequence: Optional[float] = None
    discrepancy: Optional[float] = None
    converged: bool = True
    note: Optional[str] = None
    trace: List[SDeltaEntry] = Field(default_factory=list)

    @property
    def beta(self) -> float:
        if self.beta_closed is not None:
            return self.beta_closed
        return self.beta_sequence if self.beta_sequence is not None else 0.0


class LWComparison(BaseModel):
    model_config = ConfigDict(frozen=True)

    sigma: float
    delta_min: float
    chi_estimate: float
    chi_increment: float = Field(..., description="Per-scale increment estimate")
    integrals: List[float] = Field(..., description="A_{i,delta} for i = 0..ambient_dim")
    discrepancy: Optional[float] = Field(None, description="|chi_estimate - euler_phf|")


class InvariantReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    fractal: str
    diameter: float
    provenance: Literal["symbolic", "numerical"] = "symbolic"
    parameters: Dict[str, Any] = Field(default_factory=dict)
    degrees: List[DegreeReport] = Field(default_factory=list)
    euler_phf: float
    euler_sequence: Optional[float] = None
    lw_comparison: Optional[LWComparison] = None
    reference_values: Dict[str, float] = Field(default_factory=dict)
    generated_at: Optional[datetime] = None

    @model_validator(mode="after")
    def _check_alternating_sum(self) -> "InvariantReport":
        total = sum((-1) ** d.i * d.beta for d in self.degrees)
        if abs(total - self.euler_phf) > 1e-12:
            raise ValueError(f"euler_phf {self.euler_phf} is not the alternating sum {total}")
        return self

# ─── NUMERICAL DIAGNOSTICS ──────────────────────────────────────────────────

class ComplexityFit(BaseModel):
    model_config = ConfigDict(frozen=True)

    degree: int
    slope: float = Field(..., description="Estimated PH-complexity")
    intercept: float
    r_squared: float
    distinct_counts: int
    samples: int
    window: Tuple[float, float]
    low_confidence: bool


class DegreeMatch(BaseModel):
    model_config = ConfigDict(frozen=True)

    degree: int
    matched: int
    unmatched_numeric: int
    unmatched_symbolic: int
    max_displacement: float


class MatchReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    tol: float
    per_degree: List[DegreeMatch] = Field(default_factory=list)

    @property
    def matched(self) -> int:
        return sum(d.matched for d in self.per_degree)

    @property
    def unmatched_numeric(self) -> int:
        return sum(d.unmatched_numeric for d in self.per_degree)

    @property
    def unmatched_symbolic(self) -> int:
        return sum(d.unmatched_symbolic for d in self.per_degree)

    @property
    def max_displacement(self) -> float:
        return max((d.max_displacement for d in self.per_degree), default=0.0)

# ─── RUN CONFIGURATION ──────────────────────────────────────────────────────

class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    subcommand: Literal["exact", "numeric", "compare", "lw"]
    fractal: str = Field(..., description="Built-in name or path to a spec JSON file")
    depth: Optional[int] = Field(None, ge=1)
    resolution: Optional[int] = Field(None, ge=2, description="Cells per unit length")
    delta: Optional[float] = Field(None, gt=0, lt=1)
    tol: Optional[float] = Field(None, ge=0)
    seq_tol: float = Field(1e-9, gt=0)
    j_max: int = Field(60, ge=3)
    floor_factor: float = Field(2.0, ge=0)
    output_dir: Path = Path("phfractal_out")
    workers: int = Field(1, ge=1)
    memory_budget: Optional[float] = Field(None, gt=0)
    json_output: bool = False
    no_meta: bool = False
    plot: bool = False
    curve_eps: List[float] = Field(default_factory=list)
    curve_points: int = Field(200, ge=2)

    @model_validator(mode="after")
    def _check_combination(self) -> "RunConfig":
        if self.subcommand in ("numeric", "compare"):
            if self.depth is None or self.resolution is None:
                raise ValueError(f"'{self.subcommand}' needs --depth and --res")
        if any(e < 0 for e in self.curve_eps):
            raise ValueError("--curve-eps values must be non-negative")
        return self


class NumericSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    fractal: str
    depth: int
    resolution: int
    spacing: float
    grid_shape: Tuple[int, ...]
    occupied_cells: int
    cell_counts: List[int] = Field(..., description="Cubical cells per dimension")
    floor_factor: float
    resolution_floor: float
    bars_per_degree: Dict[int, int] = Field(default_factory=dict)
    curve_eps: List[float] = Field(default_factory=list)
    curve_betti: List[List[int]] = Field(default_factory=list, description="Betti numbers per requested eps")
    estimated_bytes: int
    runtime_seconds: Optional[float] = None
    peak_rss_kib: Optional[int] = None
    generated_at: Optional[datetime] = None
