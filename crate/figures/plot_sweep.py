"""Line and contour plots from the sweep CSV.

    python3 figures/plot_sweep.py lines   sweep_theta1.csv  out.png
    python3 figures/plot_sweep.py contour sweep_theta1_theta2.csv out.png

Reads only the CSV written by `hybrid ecp sweep`; never recomputes physics.
Series counts and data extents are stored in the PNG text metadata so a
rerender can be checked without comparing pixels.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

HEADER = ["theta1", "theta2", "theta3", "alpha", "P_closed", "P_sim"]
THETAS = HEADER[:3]


class TableError(ValueError):
    pass


@dataclass
class SweepTable:
    columns: dict[str, np.ndarray]

    def __len__(self) -> int:
        return len(self.columns["alpha"])

    def varying(self, names=THETAS) -> list[str]:
        return [n for n in names if np.unique(self.columns[n]).size > 1]


def load(path: str | Path) -> SweepTable:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip().split(",") != HEADER:
        raise TableError(f"header must be exactly {','.join(HEADER)}")
    rows = [l.split(",") for l in lines[1:] if l.strip()]
    if not rows:
        raise TableError("empty table")
    try:
        data = np.array(rows, dtype=float)
    except ValueError as e:
        raise TableError(f"malformed row: {e}") from None
    if data.shape[1] != len(HEADER):
        raise TableError("wrong column count")
    t = SweepTable({h: data[:, k] for k, h in enumerate(HEADER)})
    for p in ("P_closed", "P_sim"):
        if np.any(t.columns[p] < 0) or np.any(t.columns[p] > 1):
            raise TableError(f"{p} outside [0, 1]")
    return t


def _save(fig, out: Path, meta: dict) -> None:
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, metadata={"Description": json.dumps(meta, sort_keys=True)})


def plot_lines(table: SweepTable, out: str | Path) -> dict:
    """One curve of P_closed per α against the single varying θ."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    alphas = np.unique(table.columns["alpha"])
    axis = None
    series = []
    for a in alphas:
        sel = table.columns["alpha"] == a
        sub = SweepTable({k: v[sel] for k, v in table.columns.items()})
        v = sub.varying()
        if len(v) != 1:
            raise TableError(f"alpha={a}: expected one varying theta column, found {v}")
        if axis not in (None, v[0]):
            raise TableError("series vary different thetas")
        axis = v[0]
        order = np.argsort(sub.columns[axis])
        series.append((a, sub.columns[axis][order], sub.columns["P_closed"][order]))

    fig, ax = plt.subplots(figsize=(6, 4))
    zeros = {}
    for a, x, y in series:
        ax.plot(x, y, label=f"α = {a:g}")
        zeros[f"{a:g}"] = [float(v) for v in x[y == 0.0]]
    j = axis[-1]
    ax.set_xlabel(f"θ{j} (rad)")
    ax.set_ylabel("P")
    ax.legend()
    meta = {
        "kind": "lines",
        "axis": axis,
        "series": len(series),
        "x_range": [float(table.columns[axis].min()), float(table.columns[axis].max())],
        "p_max": float(table.columns["P_closed"].max()),
        "zeros": zeros,
    }
    _save(fig, Path(out), meta)
    plt.close(fig)
    return meta


def plot_contour(table: SweepTable, out: str | Path, axes: tuple[str, str] | None = None) -> dict:
    """Filled contour of P_closed over a full 2-D θ grid at a single α."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if np.unique(table.columns["alpha"]).size != 1:
        raise TableError("contour needs a single alpha")
    axes = axes or tuple(table.varying())
    if len(axes) != 2:
        raise TableError(f"need exactly two varying thetas, found {list(axes)}")
    xs, ys = (np.unique(table.columns[a]) for a in axes)
    if len(table) != xs.size * ys.size:
        raise TableError(f"not a full grid: {len(table)} rows for {xs.size}×{ys.size}")
    grid = np.full((ys.size, xs.size), np.nan)
    ix = np.searchsorted(xs, table.columns[axes[0]])
    iy = np.searchsorted(ys, table.columns[axes[1]])
    grid[iy, ix] = table.columns["P_closed"]
    if np.isnan(grid).any():
        raise TableError("not a full grid: duplicate or missing points")

    fig, ax = plt.subplots(figsize=(5, 4))
    cs = ax.contourf(xs, ys, grid, levels=20)
    fig.colorbar(cs, ax=ax, label="P")
    ax.set_xlabel(f"θ{axes[0][-1]} (rad)")
    ax.set_ylabel(f"θ{axes[1][-1]} (rad)")
    p_max = float(np.max(grid))
    ax.set_title(f"max P = {p_max:.6f}")
    meta = {"kind": "contour", "axes": list(axes), "shape": [int(ys.size), int(xs.size)], "p_max": p_max}
    _save(fig, Path(out), meta)
    plt.close(fig)
    return meta


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("kind", choices=["lines", "contour"])
    ap.add_argument("csv")
    ap.add_argument("out")
    a = ap.parse_args(argv)
    try:
        t = load(a.csv)
        meta = plot_lines(t, a.out) if a.kind == "lines" else plot_contour(t, a.out)
    except (TableError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(json.dumps(meta))
    return 0


if __name__ == "__main__":
    sys.exit(main())
