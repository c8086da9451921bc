"""Result emission: CSV with 17-significant-digit floats (round-trip exact),
JSON mirroring the same values, and static SVG line plots rendered from the
CSV files, never from separate computation."""

from __future__ import annotations

import csv
import json
from pathlib import Path


def fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def write_csv(path: str | Path, header: list[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def write_json(path: str | Path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def error_json(message: str, **detail) -> str:
    return json.dumps({"error": message, **detail}, sort_keys=True)


def svg_from_csv(csv_path: str | Path, svg_path: str | Path, x_col: str,
                 y_cols: list[str], logy: bool = False) -> Path:
    """Line plot of the named CSV columns; the CSV is the single source."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    csv_path = Path(csv_path)
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    x = [float(r[x_col]) for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    for col in y_cols:
        ax.plot(x, [float(r[col]) for r in rows], label=col)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(x_col)
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    svg_path = Path(svg_path)
    svg_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(svg_path, format="svg")
    plt.close(fig)
    return svg_path
