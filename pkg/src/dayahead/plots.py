"""Actual-vs-predicted overlays written as SVG."""

from __future__ import annotations

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "dayahead"
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

logger = logging.getLogger(__name__)

WINDOWS = {"2weeks": 14 * 24, "1day": 24}


def plot_window(actual, predicted, hours: int, title: str, path: str | Path, label: str = "predicted") -> int:
    """Plot the first ``hours`` points; returns the number of points drawn (0 = no file)."""
    actual = np.asarray(actual, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    if len(predicted) == 0:
        logger.warning("no predictions for %s; plot skipped", title)
        return 0
    n = min(hours, len(actual), len(predicted))
    if n < hours:
        logger.warning("%s: window of %d h clipped to %d h of test data", title, hours, n)
    x = np.arange(n)
    fig, ax = plt.subplots(figsize=(10, 3.5))
    ax.plot(x, actual[:n], label="actual", color="black", linewidth=1.0)
    ax.plot(x, predicted[:n], label=label, linewidth=1.0)
    ax.set_xlabel("hour")
    ax.set_ylabel("load (kW)")
    ax.set_title(title)
    ax.legend(loc="upper right")
    fig.tight_layout()
    # fixed metadata keeps the SVG bytes stable between runs
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return n


def export_plots(actual, predictions: dict[str, np.ndarray], outdir: str | Path, scenario: str) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    if not predictions:
        logger.warning("no predictions for %s; nothing plotted", scenario)
    for model, pred in predictions.items():
        for tag, hours in WINDOWS.items():
            path = outdir / f"{model}_{tag}.svg"
            if plot_window(actual, pred, hours, f"{scenario} {model} ({tag})", path, label=model):
                written.append(path)
    return written
