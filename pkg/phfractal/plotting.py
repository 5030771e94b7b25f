"""Betti-curve tables and plots."""

import logging
from pathlib import Path
from typing import Sequence, Union

import pandas as pd

from .barcodes import betti_curve
from .structs import PersistenceDiagram

logger = logging.getLogger(__name__)


def betti_curve_frame(diagram: PersistenceDiagram, eps_grid: Sequence[float]) -> pd.DataFrame:
    """One row per eps, one `b<i>` column per degree 0..ambient_dim."""
    frame = pd.DataFrame({"eps": list(eps_grid)})
    for i in range(diagram.ambient_dim + 1):
        frame[f"b{i}"] = [count for _, count in betti_curve(diagram, i, eps_grid)]
    return frame


def plot_betti_curves(frame: pd.DataFrame, path: Union[str, Path], title: str) -> Path:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(10, 6))
    for column in frame.columns[1:]:
        if frame[column].any():
            ax.step(frame["eps"], frame[column], where="post", label=f"$b_{column[1:]}$")
    ax.set_xscale("log")
    ax.set_yscale("symlog")
    ax.set_xlabel("ε")
    ax.set_ylabel("Betti number")
    ax.set_title(title)
    ax.legend()
    ax.grid(True)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    logger.info(f"Saved Betti-curve plot to {path}")
    return path
