# app/utils/svg.py
"""Static SVG heatmaps and line charts (matplotlib, Agg backend)."""
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# Fixed element ids and no timestamp: identical inputs give identical bytes.
SVG_RC = {"svg.hashsalt": "raydiff", "svg.fonttype": "path"}
SVG_METADATA = {"Date": None, "Creator": None}
CMAP = "Blues"


def _save(fig, path: Union[str, Path]) -> Path:
    path = Path(path)
    with plt.rc_context(SVG_RC):
        fig.savefig(path, format="svg", metadata=SVG_METADATA)
    plt.close(fig)
    return path


def save_heatmap(
    nx: int,
    ny: int,
    values: Sequence[Optional[float]],
    title: str,
    path: Union[str, Path],
    marker: Optional[Tuple[float, float]] = None,
) -> Path:
    """
    Heatmap of a row-major (iy, ix) grid with iy growing upwards. `None`
    cells stay unfilled. `marker` is an optional (ix, iy) position in cell
    units, e.g. the transmitter.
    """
    grid = np.array([np.nan if v is None else float(v) for v in values], dtype=float).reshape(ny, nx)
    data = np.ma.masked_invalid(grid)
    cmap = plt.get_cmap(CMAP).copy()
    cmap.set_bad(alpha=0.0)

    fig, ax = plt.subplots(figsize=(6, 5))
    if data.count():
        vmin, vmax = float(data.min()), float(data.max())
    else:
        vmin, vmax = 0.0, 1.0
    image = ax.imshow(data, origin="lower", cmap=cmap, vmin=vmin, vmax=vmax,
                      interpolation="nearest", aspect="equal")
    if marker is not None:
        ax.plot([marker[0]], [marker[1]], marker="o", color="tab:red", markersize=6)
    colorbar = fig.colorbar(image, ax=ax)
    colorbar.set_label("no data" if not data.count() else f"min {vmin:.6g}  max {vmax:.6g}")
    ax.set_title(title)
    ax.set_xlabel("ix")
    ax.set_ylabel("iy")
    return _save(fig, path)


def save_line_chart(times: Sequence[float], values: Sequence[Optional[float]], title: str,
                    path: Union[str, Path]) -> Path:
    """One channel over time; gaps where the value is None."""
    t = np.asarray(times, dtype=float)
    v = np.array([np.nan if x is None else float(x) for x in values], dtype=float)
    fig, ax = plt.subplots(figsize=(8, 3))
    ax.plot(t, v, marker=".", linewidth=1.5)
    ax.set_title(title)
    ax.set_xlabel("t [s]")
    ax.grid(True, alpha=0.3)
    return _save(fig, path)
