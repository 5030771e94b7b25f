"""
PHFRACTAL Run Orchestrator
==========================
Coordinates the subcommand pipelines:
- Exact invariants (per-degree work in parallel)
- Numerical persistence of pre-fractals
- Symbolic vs numerical matching
- Llorente-Winter comparison
- Output persistence (partial outputs removed on failure)
"""

import logging
import time
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple

import anyio
import numpy as np
import pandas as pd
from pydantic import BaseModel

from .barcodes import betti_at, write_diagram_csv
from .config import CSV_FLOAT_FORMAT, MATCH_FACTOR, MATCH_TOL_FACTOR
from .errors import ConvergenceError, MatchFailure, PhFractalError
from .families import resolve_spec, spec_diagram
from .invariants import assemble_report, degree_summary, lw_average_euler
from .numerical.calibration import calibrate, match_report
from .numerical.cubical import cubical_filtration, estimate_complex_bytes
from .numerical.edt import edt_async
from .numerical.raster import Bitmap, prefractal_bitmap, save_bitmap
from .numerical.reduction import persistence
from .plotting import betti_curve_frame, plot_betti_curves
from .structs import (
    DegreeReport,
    FractalSpec,
    InvariantReport,
    LWComparison,
    MatchReport,
    NumericSummary,
    PersistenceDiagram,
    RunConfig,
)

logger = logging.getLogger(__name__)

DEFAULT_LW_DELTA = 1e-6


class OutputStore:
    """Files written by one run, under the configured output directory."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.written: List[Path] = []

    def _target(self, name: str) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        path = self.root / name
        self.written.append(path)
        return path

    def save_model(self, name: str, model: BaseModel) -> Path:
        path = self._target(name)
        path.write_text(model.model_dump_json(indent=2), encoding="utf-8")
        logger.info(f"Wrote {path}")
        return path

    def save_frame(self, name: str, frame: pd.DataFrame) -> Path:
        path = self._target(name)
        frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n", encoding="utf-8")
        logger.info(f"Wrote {path}")
        return path

    def save_diagram(self, name: str, diagram: PersistenceDiagram) -> Path:
        return write_diagram_csv(diagram, self._target(name))

    def reserve(self, name: str) -> Path:
        return self._target(name)

    def discard(self) -> None:
        for path in self.written:
            path.unlink(missing_ok=True)
        logger.warning(f"Removed {len(self.written)} partial output file(s)")
        self.written.clear()

    @contextmanager
    def transaction(self) -> Iterator["OutputStore"]:
        """Remove everything written inside the block if it raises."""
        try:
            yield self
        except BaseException:
            self.discard()
            raise


def _peak_rss_kib() -> Optional[int]:
    try:
        import resource
    except ImportError:
        return None
    return int(resource.getrusage(resource.RUSAGE_SELF).ru_maxrss)


class RunOrchestrator:
    """
    One entry point per subcommand. All methods are async and meant to run
    under `anyio.run`; results never depend on task scheduling.
    """

    @staticmethod
    async def run_exact(config: RunConfig, spec: Optional[FractalSpec] = None) -> InvariantReport:
        spec = spec or resolve_spec(config.fractal)
        store = OutputStore(config.output_dir)
        logger.info(f"{spec.name}: exact invariants for degrees {spec.degrees}")

        results: Dict[int, DegreeReport] = {}
        failures: Dict[int, PhFractalError] = {}

        async def solve(i: int) -> None:
            try:
                results[i] = await anyio.to_thread.run_sync(
                    lambda: degree_summary(spec, i, j_max=config.j_max, tol=config.seq_tol)
                )
            except PhFractalError as e:
                failures[i] = e

        async with anyio.create_task_group() as tg:
            for i in spec.degrees:
                tg.start_soon(solve, i)

        if failures:
            # lowest degree first, whatever order the tasks finished in
            raise failures[min(failures)]

        lw = None
        if config.delta is not None:
            lw = RunOrchestrator._try_lw(spec, config.delta)
        try:
            report = assemble_report(
                spec,
                [results[i] for i in spec.degrees],
                parameters={"j_max": config.j_max, "tol": config.seq_tol},
                lw=lw,
                stamp=not config.no_meta,
            )
        except ConvergenceError as e:
            store.save_model(f"{spec.name}_exact.json", e.report)
            raise
        store.save_model(f"{spec.name}_exact.json", report)
        return report

    @staticmethod
    def _try_lw(spec: FractalSpec, delta: float) -> Optional[LWComparison]:
        try:
            return lw_average_euler(spec, delta)
        except PhFractalError as e:
            logger.info(f"{spec.name}: no Llorente-Winter comparison ({e})")
            return None

    @staticmethod
    async def numeric_pipeline(
        spec: FractalSpec, config: RunConfig
    ) -> Tuple[Bitmap, PersistenceDiagram, PersistenceDiagram, NumericSummary]:
        """Bitmap -> EDT -> cubical complex -> persistence -> calibration."""
        started = time.perf_counter()
        bitmap = prefractal_bitmap(spec, config.depth, config.resolution, config.memory_budget)
        field = await edt_async(bitmap, workers=config.workers)
        complex_ = await anyio.to_thread.run_sync(cubical_filtration, field)
        raw = await anyio.to_thread.run_sync(persistence, complex_)
        diagram = calibrate(raw, bitmap.spacing, spec.diameter, config.floor_factor)

        h = bitmap.spacing
        summary = NumericSummary(
            fractal=spec.name,
            depth=config.depth,
            resolution=config.resolution,
            spacing=h,
            grid_shape=bitmap.shape,
            occupied_cells=int(bitmap.occupancy.sum()),
            cell_counts=complex_.cell_counts(),
            floor_factor=config.floor_factor,
            resolution_floor=diagram.resolution_floor,
            bars_per_degree={i: sum(b.multiplicity for b in diagram.degree(i)) for i in diagram.degrees},
            curve_eps=list(config.curve_eps),
            curve_betti=[
                [betti_at(diagram, i, eps) for i in range(spec.ambient_dim + 1)] for eps in config.curve_eps
            ],
            estimated_bytes=estimate_complex_bytes(bitmap.shape),
            runtime_seconds=None if config.no_meta else time.perf_counter() - started,
            peak_rss_kib=None if config.no_meta else _peak_rss_kib(),
            generated_at=None if config.no_meta else datetime.now(timezone.utc),
        )
        return bitmap, raw, diagram, summary

    @staticmethod
    async def run_numeric(config: RunConfig, spec: Optional[FractalSpec] = None) -> NumericSummary:
        spec = spec or resolve_spec(config.fractal)
        store = OutputStore(config.output_dir)
        stem = f"{spec.name}_k{config.depth}_n{config.resolution}"
        with store.transaction():
            bitmap, raw, diagram, summary = await RunOrchestrator.numeric_pipeline(spec, config)
            store.save_diagram(f"{stem}_diagram.csv", diagram)
            store.save_diagram(f"{stem}_raw.csv", raw)

            grid = np.geomspace(summary.spacing, spec.diameter, config.curve_points)
            frame = betti_curve_frame(diagram, grid)
            store.save_frame(f"{stem}_betti.csv", frame)
            if config.plot:
                plot_betti_curves(frame, store.reserve(f"{stem}_betti.png"), f"{spec.name}, depth {config.depth}")
            save_bitmap(bitmap, store.reserve(f"{stem}.nrrd"))
            store.save_model(f"{stem}_summary.json", summary)
        return summary

    @staticmethod
    async def run_compare(config: RunConfig, spec: Optional[FractalSpec] = None) -> MatchReport:
        """Exit criterion: every symbolic bar with lifetime > MATCH_FACTOR·h has a numeric partner."""
        spec = spec or resolve_spec(config.fractal)
        store = OutputStore(config.output_dir)
        with store.transaction():
            _, _, diagram, summary = await RunOrchestrator.numeric_pipeline(spec, config)
            h = summary.spacing
            symbolic = spec_diagram(spec, MATCH_FACTOR * h)
            tol = config.tol if config.tol is not None else MATCH_TOL_FACTOR * h
            report = match_report(diagram, symbolic, tol)
            store.save_model(f"{spec.name}_k{config.depth}_n{config.resolution}_compare.json", report)

        logger.info(
            f"{spec.name}: matched {report.matched}, unmatched symbolic {report.unmatched_symbolic}, "
            f"unmatched numeric {report.unmatched_numeric}, max displacement {report.max_displacement:.3g}"
        )
        if report.unmatched_symbolic:
            raise MatchFailure(
                f"{report.unmatched_symbolic} symbolic bar(s) with lifetime > {MATCH_FACTOR:g}h have no numeric "
                f"partner within {tol:.3g}",
                report=report,
            )
        return report

    @staticmethod
    async def run_lw(config: RunConfig, spec: Optional[FractalSpec] = None) -> LWComparison:
        spec = spec or resolve_spec(config.fractal)
        store = OutputStore(config.output_dir)
        delta = config.delta if config.delta is not None else DEFAULT_LW_DELTA
        comparison = await anyio.to_thread.run_sync(lw_average_euler, spec, delta)
        store.save_model(f"{spec.name}_lw.json", comparison)
        return comparison


orchestrator = RunOrchestrator()
