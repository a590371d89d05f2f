"""Figure rendering from the simulator's CSV output.

Pure presentation: the renderers consume the documented CSV schemas and
never recompute physics.  Three figure kinds are supported:

* ``bounds``: phase-difference variance with its two local bounds on a log
  axis over one time window,
* ``trajectories``: the two mechanical position means on an early and a late
  window, side by side,
* ``sweep-heatmap``: a final-window quantity over a two-axis sweep grid.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["PlotSpec", "SchemaError", "WindowRangeError", "render", "KINDS"]

KINDS = ("bounds", "trajectories", "sweep-heatmap")

BOUND_COLUMNS = ("t", "var_minus", "l_nec", "u_suf")
TRAJECTORY_COLUMNS = ("t", "q1", "q2")


class SchemaError(ValueError):
    """The CSV lacks a column the figure needs."""


class WindowRangeError(ValueError):
    """A requested time window selects no rows."""


@dataclass(frozen=True)
class PlotSpec:
    """What to render and where to write it.

    ``window`` and ``window2`` are ``(t_start, t_end)`` pairs; ``None`` means
    the full range (for ``trajectories`` the defaults are the first and last
    5% of the run).  ``x``, ``y`` and ``value`` name sweep-heatmap columns.
    """

    input_csv: str
    kind: str
    output: str
    window: tuple[float, float] | None = None
    window2: tuple[float, float] | None = None
    logy: bool = True
    x: str = ""
    y: str = ""
    value: str = "var_minus"
    dpi: int = 150
    figsize: tuple[float, float] = field(default=(9.0, 4.0))

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; valid: {', '.join(KINDS)}")


def _read_csv(path) -> dict[str, np.ndarray]:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty file, no header row")
        rows = list(reader)
    columns: dict[str, np.ndarray] = {}
    for name in reader.fieldnames:
        raw = [r[name] for r in rows]
        try:
            columns[name] = np.array([float(x) if x != "" else np.nan for x in raw])
        except ValueError:
            columns[name] = np.array(raw, dtype=object)
    return columns


def _require(columns: dict, needed, path) -> None:
    for name in needed:
        if name not in columns:
            raise SchemaError(f"{path}: missing required column {name!r}")


def _window_mask(t: np.ndarray, window) -> np.ndarray:
    if window is None:
        mask = np.ones_like(t, dtype=bool)
    else:
        lo, hi = window
        mask = (t >= lo) & (t <= hi)
    if not np.any(mask):
        raise WindowRangeError(f"window {window} selects no samples")
    return mask


def _render_bounds(columns, spec: PlotSpec, ax) -> None:
    t = columns["t"]
    mask = _window_mask(t, spec.window)
    series = (
        ("u_suf", "upper bound", "tab:red", "--"),
        ("var_minus", "phase-difference variance", "tab:blue", "-"),
        ("l_nec", "lower bound", "tab:green", "-."),
    )
    for name, label, color, style in series:
        vals = columns[name][mask]
        ax.plot(t[mask], vals, style, color=color, label=label, linewidth=1.0)
    if spec.logy:
        ax.set_yscale("log")
    ax.set_xlabel("scaled time")
    ax.set_ylabel("rad$^2$")
    ax.legend(loc="best", fontsize=8)


def _default_trajectory_windows(t: np.ndarray):
    span = t[-1] - t[0]
    return (t[0], t[0] + 0.05 * span), (t[-1] - 0.05 * span, t[-1])


def _render_trajectories(columns, spec: PlotSpec, fig) -> None:
    t = columns["t"]
    w1, w2 = spec.window, spec.window2
    if w1 is None and w2 is None:
        w1, w2 = _default_trajectory_windows(t)
    elif w2 is None:
        w2 = _default_trajectory_windows(t)[1]
    elif w1 is None:
        w1 = _default_trajectory_windows(t)[0]
    for i, (win, title) in enumerate(((w1, "early"), (w2, "late")), start=1):
        ax = fig.add_subplot(1, 2, i)
        mask = _window_mask(t, win)
        ax.plot(t[mask], columns["q1"][mask], color="tab:blue", label=r"$\langle q_1 \rangle$")
        ax.plot(t[mask], columns["q2"][mask], color="tab:orange", label=r"$\langle q_2 \rangle$")
        ax.set_xlabel("scaled time")
        ax.set_title(title)
        if i == 1:
            ax.set_ylabel("mean position")
        ax.legend(loc="upper right", fontsize=8)


def _render_sweep_heatmap(columns, spec: PlotSpec, ax, path) -> None:
    if not spec.x or not spec.y:
        raise ValueError("sweep-heatmap needs x and y axis column names")
    _require(columns, (spec.x, spec.y, spec.value), path)
    xs = np.unique(columns[spec.x])
    ys = np.unique(columns[spec.y])
    grid = np.full((len(ys), len(xs)), np.nan)
    for xv, yv, val in zip(columns[spec.x], columns[spec.y], columns[spec.value]):
        grid[np.searchsorted(ys, yv), np.searchsorted(xs, xv)] = val
    mesh = ax.pcolormesh(xs, ys, grid, shading="nearest")
    ax.set_xlabel(spec.x)
    ax.set_ylabel(spec.y)
    ax.figure.colorbar(mesh, ax=ax, label=spec.value)


def render(spec: PlotSpec) -> Path:
    """Render one figure and return the output path."""
    columns = _read_csv(spec.input_csv)
    fig = plt.figure(figsize=spec.figsize)
    try:
        if spec.kind == "bounds":
            _require(columns, BOUND_COLUMNS, spec.input_csv)
            _render_bounds(columns, spec, fig.add_subplot(1, 1, 1))
        elif spec.kind == "trajectories":
            _require(columns, TRAJECTORY_COLUMNS, spec.input_csv)
            _render_trajectories(columns, spec, fig)
        else:
            _render_sweep_heatmap(columns, spec, fig.add_subplot(1, 1, 1), spec.input_csv)
        out = Path(spec.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.tight_layout()
        fig.savefig(out, dpi=spec.dpi)
    finally:
        plt.close(fig)
    return Path(spec.output)
