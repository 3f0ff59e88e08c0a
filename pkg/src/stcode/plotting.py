"""Optional PNG figures for Monte Carlo outputs (``--plot``); results never depend on them."""

from __future__ import annotations

import csv
import json
from pathlib import Path


def _rows(path: Path) -> list[dict]:
    with path.open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def plot_outputs(kind: str, out_dir) -> list[str]:
    """Render the figures available for ``kind``; returns the written file names."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    written = []
    if kind in ("mc-scan", "mc-hysteresis"):
        name = "plaquette.csv" if kind == "mc-scan" else "hysteresis.csv"
        rows = [r for r in _rows(out_dir / name) if r["observable"] == "plaquette"]
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for branch in sorted({r["branch"] for r in rows}):
            sel = [r for r in rows if r["branch"] == branch]
            ax.errorbar([float(r["beta"]) for r in sel], [float(r["value"]) for r in sel],
                        yerr=[float(r["error"] or 0) for r in sel], marker="o", ms=3, label=branch)
        ax.set_xlabel("beta")
        ax.set_ylabel("<hexagon>")
        ax.legend()
        fig.tight_layout()
        fig.savefig(out_dir / "plaquette.png", dpi=120)
        plt.close(fig)
        written.append("plaquette.png")
    elif kind == "mc-wilson":
        rows = _rows(out_dir / "wilson.csv")
        fit = json.loads((out_dir / "wilson_fit.json").read_text(encoding="utf-8"))
        import math

        fig, axes = plt.subplots(1, 2, figsize=(8, 3.5))
        for ax, key in zip(axes, ("area", "perimeter")):
            xs = [float(r[key]) for r in rows if float(r["W"]) > 0]
            ys = [-math.log(float(r["W"])) for r in rows if float(r["W"]) > 0]
            ax.plot(xs, ys, "o")
            top = max(xs) if xs else 1.0
            ax.plot([0, top], [0, fit[key]["c"] * top], "-", label=f"R2={fit[key]['r2']:.3f}")
            ax.set_xlabel(key)
            ax.set_ylabel("-log W")
            ax.legend()
        fig.tight_layout()
        fig.savefig(out_dir / "wilson.png", dpi=120)
        plt.close(fig)
        written.append("wilson.png")
    return written
