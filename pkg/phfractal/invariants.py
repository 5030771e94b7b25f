"""
PHFRACTAL Invariants
====================
Lifetime-truncated power sums S_δ, average ph-fractal Betti numbers (closed
form and sequence method), the average ph-fractal Euler number, the magnitude
form of S_δ, the Llorente-Winter comparison integral and the PH-complexity
regression for finite diagrams.
"""

import logging
import math
from datetime import datetime, timezone
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from .barcodes import degree_arrays
from .config import (
    COMPLEXITY_SAMPLES,
    LOW_CONFIDENCE_R2,
    MIN_DISTINCT_COUNTS,
    RATIO_RTOL,
    SEQUENCE_J_MAX,
    SEQUENCE_TOL,
    SERIES_TAIL_TOL,
    TIE_RTOL,
)
from .errors import (
    ArgumentError,
    ContractViolation,
    ConvergenceError,
    EstimationError,
    InapplicableError,
    UnsupportedStructureError,
)
from .families import (
    Family,
    dust_inner_steps,
    enumerate_family,
    exact_complexity,
    family_complexity,
    is_above,
    largest_lifetime,
    steps_above,
)
from .structs import (
    Barcode,
    ComplexityFit,
    DegreeReport,
    DustFamily,
    EssentialBar,
    FractalSpec,
    GeometricFamily,
    InvariantReport,
    LWComparison,
    PersistenceDiagram,
    SDeltaEntry,
    SDeltaTrace,
)

logger = logging.getLogger(__name__)

Source = Union[FractalSpec, PersistenceDiagram, Sequence[Family]]

# ─── PER-FAMILY PARTIAL SUMS ────────────────────────────────────────────────

def _geometric_partial_sum(q: float, n: int) -> float:
    """1 + q + ... + q^(n-1)."""
    if n <= 0:
        return 0.0
    if math.isclose(q, 1.0, rel_tol=RATIO_RTOL):
        return float(n)
    return (1.0 - q ** n) / (1.0 - q)


def _dust_inner_term(fam: DustFamily, sigma: float, i: int) -> float:
    # g^(i-1)·[(1+v^i)^(σ/2) - 1]
    return fam.inner_growth ** (i - 1) * math.expm1(0.5 * sigma * math.log1p(fam.inner_decay ** i))


def _family_s(fam: Family, sigma: float, delta: float, diameter: float) -> float:
    if isinstance(fam, EssentialBar):
        return (fam.death / diameter) ** sigma / sigma if is_above(fam.death, delta) else 0.0

    q = fam.count_ratio * fam.ratio ** sigma
    if isinstance(fam, GeometricFamily):
        n = steps_above(fam.lifetime0, fam.ratio, delta)
        first = ((fam.death0 / diameter) ** sigma - (fam.birth0 / diameter) ** sigma) * fam.count0 / sigma
        return first * _geometric_partial_sum(q, n)

    # Dust: step k keeps the first N_k inner terms; N_k shrinks as k grows.
    n_max = dust_inner_steps(fam, 1, delta)
    prefix = [0.0]
    for i in range(1, n_max + 1):
        prefix.append(prefix[-1] + _dust_inner_term(fam, sigma, i))
    total, k = 0.0, 1
    while True:
        n_k = dust_inner_steps(fam, k, delta)
        if n_k == 0:
            break
        total += q ** (k - 1) * prefix[n_k]
        k += 1
    return fam.count0 / sigma * (fam.birth0 / diameter) ** sigma * total


def _diagram_s(diagram: PersistenceDiagram, i: int, sigma: float, delta: float, diameter: float) -> float:
    births, deaths, mult = degree_arrays(diagram, i)
    if np.isinf(deaths).any():
        raise ArgumentError("diagram has an uncapped essential bar; calibrate it first")
    keep = (deaths - births) > delta * (1.0 + TIE_RTOL)
    terms = (deaths[keep] / diameter) ** sigma - (births[keep] / diameter) ** sigma
    return float(np.sum(mult[keep] * terms)) / sigma


def s_delta(source: Source, i: int, sigma: float, delta: float, diameter: float) -> float:
    """(1/σ) Σ_{|e|>δ} [(d(e)/d∞)^σ - (b(e)/d∞)^σ] over the degree-i bars of `source`."""
    if not delta > 0:
        raise ArgumentError(f"S_δ needs δ > 0, got {delta}")
    if not diameter > 0:
        raise ArgumentError(f"S_δ needs d∞ > 0, got {diameter}")
    if sigma < 0:
        raise ArgumentError(f"S_δ needs σ >= 0, got {sigma}")
    if sigma == 0:
        return 0.0

    if isinstance(source, PersistenceDiagram):
        return _diagram_s(source, i, sigma, delta, diameter)
    families = source.degree_families(i) if isinstance(source, FractalSpec) else [
        fam for fam in source if fam.degree == i
    ]
    return sum(_family_s(fam, sigma, delta, diameter) for fam in families)


def dust_inner_series(fam: DustFamily, diameter: float, sigma: float) -> float:
    """
    Per-step dust contribution I₁ = (c0/σ)(b0/d∞)^σ Σ_i g^(i-1)[(1+v^i)^(σ/2) - 1].

    Summation stops once the tail bound drops below SERIES_TAIL_TOL of the
    partial sum. The bound uses (1+x)^s - 1 <= s·2^max(s-1,0)·x on [0, 1], which
    makes the tail geometric with ratio g·v.
    """
    if not sigma > 0:
        raise ArgumentError(f"dust series needs σ > 0, got {sigma}")
    s = 0.5 * sigma
    g, v = fam.inner_growth, fam.inner_decay
    lipschitz = s * 2.0 ** max(s - 1.0, 0.0)
    total, i = 0.0, 0
    while True:
        i += 1
        total += _dust_inner_term(fam, sigma, i)
        tail = lipschitz * g ** i * v ** (i + 1) / (1.0 - g * v)
        if tail <= SERIES_TAIL_TOL * total or i >= 10_000:
            break
    logger.debug(f"dust inner series: {i} terms, tail bound {tail:.3g}")
    return fam.count0 / sigma * (fam.birth0 / diameter) ** sigma * total

# ─── AVERAGE BETTI NUMBERS ──────────────────────────────────────────────────

def _common_ratio(families: Iterable[Family]) -> Optional[float]:
    ratios = [fam.ratio for fam in families if not isinstance(fam, EssentialBar)]
    if not ratios:
        return None
    if any(not math.isclose(r, ratios[0], rel_tol=1e-12) for r in ratios):
        raise UnsupportedStructureError(f"families mix scale ratios {sorted(set(ratios))}")
    return ratios[0]


def avg_betti_closed(spec: FractalSpec, i: int) -> float:
    """β_i = ΔS / log(1/r), ΔS being the constant per-step increment of S_δ."""
    sigma = exact_complexity(spec, i)
    if sigma == 0:
        return 0.0
    families = spec.degree_families(i)
    r = _common_ratio(families)

    increment = 0.0
    for fam in families:
        if isinstance(fam, EssentialBar):
            continue
        q = fam.count_ratio * fam.ratio ** sigma
        critical = math.isclose(q, 1.0, rel_tol=RATIO_RTOL)
        if q > 1.0 and not critical:
            raise ContractViolation(f"family growth {q} exceeds 1 at σ={sigma}")
        if isinstance(fam, GeometricFamily):
            if critical:
                increment += fam.count0 / sigma * (
                    (fam.death0 / spec.diameter) ** sigma - (fam.birth0 / spec.diameter) ** sigma
                )
        elif critical:
            increment += dust_inner_series(fam, spec.diameter, sigma)
        elif math.isclose(family_complexity(fam), sigma, rel_tol=RATIO_RTOL):
            raise UnsupportedStructureError(
                "PH-complexity is set by the inner dust index; the per-step increment is not constant"
            )
    return increment / math.log(1.0 / r)


def _plateau_length(families: Iterable[Family], r: float) -> int:
    """Most consecutive steps over which the increment can stay flat before the next inner dust term enters."""
    run = 1
    for fam in families:
        if isinstance(fam, DustFamily):
            per_term = math.ceil(math.log(1.0 / fam.inner_decay) / math.log(1.0 / r) - 1e-9)
            run = max(run, per_term + 1)
    return run


def avg_betti_sequence(
    spec: FractalSpec,
    i: int,
    j_max: int = SEQUENCE_J_MAX,
    tol: float = SEQUENCE_TOL,
) -> Tuple[float, SDeltaTrace]:
    """
    Evaluate S along a_j = L·r^(j-1) (L the largest degree-i lifetime).

    Each entry stores S at δ_j = a_(j+1), the raw ratio S/|log a_j| (kept in
    `trace.entries[*].ratio`) and the per-step increment (S_j - S_(j-1))/log(1/r).
    The raw ratio has the same limit but approaches it only like 1/j, so the
    increment is the estimate that is returned. It settles once a window of
    successive increments spans less than `tol`; the window is one step longer
    than the longest flat run, since dust families add a new inner term only
    every few steps.
    """
    if j_max < 3:
        raise ArgumentError(f"j_max must be >= 3, got {j_max}")
    sigma = exact_complexity(spec, i)
    if sigma == 0:
        return 0.0, SDeltaTrace(degree=i, sigma=0.0, entries=(), converged_at=1)

    families = [fam for fam in spec.degree_families(i) if not isinstance(fam, EssentialBar)]
    r = spec.scale_ratio or _common_ratio(families)
    big_l = max(largest_lifetime(fam) for fam in families)
    log_inv_r = math.log(1.0 / r)
    window = _plateau_length(families, r) + 1

    entries: List[SDeltaEntry] = []
    prev_s: Optional[float] = None
    increments: List[float] = []
    for j in range(1, j_max + 1):
        a_j = big_l * r ** (j - 1)
        s_val = s_delta(spec, i, sigma, a_j * r, spec.diameter)
        log_a = abs(math.log(a_j))
        inc = None if prev_s is None else (s_val - prev_s) / log_inv_r
        entries.append(SDeltaEntry(
            delta=a_j * r,
            s_value=s_val,
            ratio=s_val / log_a if log_a > 0 else None,
            increment_estimate=inc,
        ))
        logger.debug(f"degree {i} j={j}: S={s_val:.17g} increment={inc}")
        if inc is not None:
            increments.append(inc)
            recent = increments[-window:]
            if len(recent) == window and max(recent) - min(recent) < tol:
                trace = SDeltaTrace(degree=i, sigma=sigma, entries=tuple(entries), converged_at=j)
                return inc, trace
        prev_s = s_val

    trace = SDeltaTrace(degree=i, sigma=sigma, entries=tuple(entries), converged_at=None)
    raise ConvergenceError(f"degree {i}: sequence estimate did not settle within j_max={j_max}", trace=trace)

# ─── EULER NUMBER ───────────────────────────────────────────────────────────

def degree_summary(
    spec: FractalSpec,
    i: int,
    j_max: int = SEQUENCE_J_MAX,
    tol: float = SEQUENCE_TOL,
) -> DegreeReport:
    """
    Closed form and sequence estimate of one degree; never raises on non-convergence.

    A closed form that does not apply is left as None with a note. When the
    families have no common scale ratio neither method applies, and
    UnsupportedStructureError is raised.
    """
    sigma = exact_complexity(spec, i)
    note = None
    try:
        closed: Optional[float] = avg_betti_closed(spec, i)
    except UnsupportedStructureError as e:
        closed, note = None, str(e)

    converged = True
    try:
        seq, trace = avg_betti_sequence(spec, i, j_max=j_max, tol=tol)
    except UnsupportedStructureError as e:
        # the sequence needs one scale ratio, so the closed form has failed too
        raise UnsupportedStructureError(f"degree {i}: no estimate applies ({e})") from e
    except ConvergenceError as e:
        logger.warning(str(e))
        trace = e.trace
        converged = False
        last = [entry.increment_estimate for entry in trace.entries if entry.increment_estimate is not None]
        seq = last[-1] if last else None
        note = str(e) if note is None else f"{note}; {e}"

    return DegreeReport(
        i=i,
        sigma=sigma,
        beta_closed=closed,
        beta_sequence=seq,
        discrepancy=abs(closed - seq) if closed is not None and seq is not None else None,
        converged=converged,
        note=note,
        trace=list(trace.entries),
    )


def assemble_report(
    spec: FractalSpec,
    degrees: Sequence[DegreeReport],
    parameters: Optional[dict] = None,
    lw: Optional[LWComparison] = None,
    stamp: bool = True,
) -> InvariantReport:
    """Alternating sums over the degree reports; raises ConvergenceError carrying the report if any degree stalled."""
    degrees = sorted(degrees, key=lambda d: d.i)
    euler_phf = sum((-1) ** d.i * d.beta for d in degrees)
    sequences = [d.beta_sequence for d in degrees]
    report = InvariantReport(
        fractal=spec.name,
        diameter=spec.diameter,
        provenance="symbolic",
        parameters=parameters or {},
        degrees=list(degrees),
        euler_phf=euler_phf,
        euler_sequence=(
            sum((-1) ** d.i * d.beta_sequence for d in degrees) if None not in sequences else None
        ),
        lw_comparison=lw,
        reference_values=spec.reference_values,
        generated_at=datetime.now(timezone.utc) if stamp else None,
    )
    stalled = [d.i for d in degrees if not d.converged]
    if stalled:
        raise ConvergenceError(f"{spec.name}: no convergence in degrees {stalled}", report=report)
    return report


def euler(
    spec: FractalSpec,
    j_max: int = SEQUENCE_J_MAX,
    tol: float = SEQUENCE_TOL,
    stamp: bool = True,
) -> InvariantReport:
    """χ_a^phf = Σ (-1)^i β_i^phf over degrees 0..ambient_dim."""
    degrees = [degree_summary(spec, i, j_max=j_max, tol=tol) for i in spec.degrees]
    return assemble_report(spec, degrees, parameters={"j_max": j_max, "tol": tol}, stamp=stamp)

# ─── MAGNITUDE FORM ─────────────────────────────────────────────────────────

def magnitude_sum(bars: Iterable[Union[Barcode, Tuple[float, float]]], sigma: float, diameter: float) -> float:
    """
    Σ [exp(-h(d)) - exp(-h(b))] with h(ε) = σ·log(d∞/ε) + log σ and exp(-h(0)) = 0.
    """
    if not sigma > 0:
        raise ArgumentError(f"magnitude needs σ > 0, got {sigma}")
    rows = [
        (bar.birth, bar.death, float(bar.multiplicity)) if isinstance(bar, Barcode) else (bar[0], bar[1], 1.0)
        for bar in bars
    ]
    if not rows:
        return 0.0
    births, deaths, mult = (np.array(col, dtype=float) for col in zip(*rows))

    def weight(eps: np.ndarray) -> np.ndarray:
        out = np.zeros_like(eps)
        pos = eps > 0
        out[pos] = np.exp(-(sigma * np.log(diameter / eps[pos]) + math.log(sigma)))
        return out

    return float(np.sum(mult * (weight(deaths) - weight(births))))

# ─── LLORENTE-WINTER COMPARISON ─────────────────────────────────────────────

def _lw_integral(spec: FractalSpec, i: int, sigma: float, delta: float) -> float:
    # A_{i,δ} = (1/σ) Σ_{d>δ} [(d/d∞)^σ - (δ/d∞)^σ]; births are all 0 here
    floor = (delta / spec.diameter) ** sigma
    total = 0.0
    for fam in spec.degree_families(i):
        for _, death, mult in enumerate_family(fam, delta):
            total += float(mult) * ((death / spec.diameter) ** sigma - floor)
    return total / sigma


def lw_average_euler(spec: FractalSpec, delta_min: float) -> LWComparison:
    """
    Finite-δ average fractal Euler number Σ(-1)^i A_{i,δ}/|log δ| and the
    per-scale estimate Σ(-1)^i [A_{i,rδ} - A_{i,δ}]/log(1/r).

    Degrees with PH-complexity 0 contribute 0.
    """
    if not 0 < delta_min < 1:
        raise ArgumentError(f"δ_min must lie in (0, 1), got {delta_min}")
    for fam in spec.families:
        if not isinstance(fam, EssentialBar) and fam.birth0 > 0:
            raise InapplicableError(
                f"{spec.name} has bars born at positive radius (bad radii); the average fractal Euler number "
                "is not defined for it"
            )
    sigma = max(exact_complexity(spec, i) for i in spec.degrees)
    if sigma == 0:
        raise ArgumentError(f"{spec.name} has PH-complexity 0 in every degree")
    r = spec.scale_ratio or _common_ratio(spec.families)

    integrals, shifted = [], []
    for i in spec.degrees:
        if exact_complexity(spec, i) == 0:
            integrals.append(0.0)
            shifted.append(0.0)
            continue
        integrals.append(_lw_integral(spec, i, sigma, delta_min))
        shifted.append(_lw_integral(spec, i, sigma, delta_min * r))

    chi = sum((-1) ** i * a for i, a in enumerate(integrals)) / abs(math.log(delta_min))
    chi_inc = sum((-1) ** i * (b - a) for i, (a, b) in enumerate(zip(integrals, shifted))) / math.log(1.0 / r)
    euler_phf = sum((-1) ** i * avg_betti_closed(spec, i) for i in spec.degrees)
    logger.info(f"{spec.name}: LW χ(δ={delta_min:g}) = {chi:.6g}, increment {chi_inc:.6g}, χ_phf {euler_phf:.6g}")
    return LWComparison(
        sigma=sigma,
        delta_min=delta_min,
        chi_estimate=chi,
        chi_increment=chi_inc,
        integrals=integrals,
        discrepancy=abs(chi - euler_phf),
    )

# ─── FINITE-DIAGRAM ESTIMATES ───────────────────────────────────────────────

def estimate_complexity(
    diagram: PersistenceDiagram,
    i: int,
    eps_window: Tuple[float, float],
    samples: int = COMPLEXITY_SAMPLES,
) -> ComplexityFit:
    """Least-squares slope of log I_{i,ε} against log(1/ε), ε log-uniform in the window."""
    lo, hi = eps_window
    if not 0 < lo < hi:
        raise EstimationError(f"degenerate window ({lo}, {hi})")
    births, deaths, mult = degree_arrays(diagram, i)
    if births.size == 0:
        raise EstimationError(f"degree {i} has no bars")

    order = np.argsort(deaths - births)
    lifetimes = (deaths - births)[order]
    # tail[k] = total multiplicity of bars with index >= k in lifetime order
    tail = np.concatenate([np.cumsum(mult[order][::-1])[::-1], [0.0]])

    eps = np.geomspace(lo, hi, samples)
    counts = tail[np.searchsorted(lifetimes, eps, side="right")]
    keep = counts > 0
    distinct = int(np.unique(counts[keep]).size)
    if distinct < 2:
        raise EstimationError(f"degree {i}: lifetime count is constant over ({lo:g}, {hi:g})")

    fit = stats.linregress(np.log(1.0 / eps[keep]), np.log(counts[keep]))
    r_squared = float(fit.rvalue ** 2)
    low = distinct < MIN_DISTINCT_COUNTS or r_squared < LOW_CONFIDENCE_R2
    if low:
        logger.warning(f"degree {i}: low-confidence complexity fit (R²={r_squared:.4f}, {distinct} distinct counts)")
    return ComplexityFit(
        degree=i,
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        r_squared=r_squared,
        distinct_counts=distinct,
        samples=int(keep.sum()),
        window=(lo, hi),
        low_confidence=low,
    )


def dust_sandwich(fam: DustFamily, diameter: float, sigma: float, j: int) -> Tuple[float, float, float]:
    """
    (lower, S, upper) for the dust part of S at δ = a_(j+1), a_j = l1·r^(j-1):
    Σ_{i<=j/2} (j-2i)·T_i <= S <= j·I₁, T_i the inner term of the dust series.
    """
    if j < 1:
        raise ArgumentError(f"j must be >= 1, got {j}")
    scale = fam.count0 / sigma * (fam.birth0 / diameter) ** sigma
    l1 = largest_lifetime(fam)
    value = _family_s(fam, sigma, l1 * fam.ratio ** j, diameter)
    lower = sum((j - 2 * i) * scale * _dust_inner_term(fam, sigma, i) for i in range(1, j // 2 + 1))
    upper = j * dust_inner_series(fam, diameter, sigma)
    return lower, value, upper
