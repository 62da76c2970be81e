"""Histogram figures for the replication report.

Renders one PNG per reported parameter next to the delimited histogram
output, using the same bin count, so the figures and the CSVs describe
the same binning.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402


def render_histograms(rows: dict[str, dict[str, list[float]]], bins: int,
                      out_dir: Path, multi_case: bool) -> list[Path]:
    """Write hist_<param>.png files; returns the written paths."""
    out_dir = Path(out_dir)
    written: list[Path] = []
    for case_name, per_param in sorted(rows.items()):
        for pname, values in sorted(per_param.items()):
            arr = np.asarray(values, dtype=float)
            fig, ax = plt.subplots(figsize=(4.0, 3.0))
            ax.hist(arr, bins=bins, color="#4878d0", edgecolor="white")
            label = f"{case_name}: {pname}" if multi_case else pname
            ax.set_title(f"{label} ({arr.size} replications)")
            ax.set_xlabel("estimate")
            ax.set_ylabel("count")
            fig.tight_layout()
            stem = (f"hist_{case_name}_{pname}" if multi_case
                    else f"hist_{pname}")
            path = out_dir / f"{stem}.png"
            fig.savefig(path, dpi=120)
            plt.close(fig)
            written.append(path)
    return written
