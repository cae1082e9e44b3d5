"""SVG chart of a suite summary. Presentation only."""
from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .errors import MalformedSummary  # noqa: E402

_REQUIRED = ("scenario", "gravity_m_s2", "body_apex_m")


def read_summary(path) -> list[dict]:
    try:
        with open(Path(path), newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames
            rows = list(reader)
    except OSError as exc:
        raise MalformedSummary(f"cannot read {path}: {exc}") from exc
    if not header or any(col not in header for col in _REQUIRED):
        raise MalformedSummary(f"{path}: header must contain {', '.join(_REQUIRED)}")
    for i, row in enumerate(rows):
        try:
            row["gravity_m_s2"] = float(row["gravity_m_s2"])
            row["body_apex_m"] = float(row["body_apex_m"])
        except (TypeError, ValueError) as exc:
            raise MalformedSummary(f"{path}: bad number on data row {i + 1}") from exc
    return rows


def render_summary_plot(summary_csv, out_path) -> Path:
    """Apex per scenario, one marker series per run; marker shape follows gravity."""
    rows = read_summary(summary_csv)
    out = Path(out_path)
    fig, ax = plt.subplots(figsize=(7, 4))
    names = [r["scenario"] for r in rows]
    markers = "osD^v<>"
    gravities = sorted({r["gravity_m_s2"] for r in rows})
    for i, r in enumerate(rows):
        m = markers[gravities.index(r["gravity_m_s2"]) % len(markers)]
        ax.plot([i], [r["body_apex_m"]], m, label=f"{r['scenario']} (g = {r['gravity_m_s2']:g})")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=60, ha="right", fontsize=7)
    ax.set_ylabel("body apex [m]")
    if rows:
        ax.legend(fontsize=6, ncol=2)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    # fixed metadata and id salt keep repeated renders byte-identical
    with matplotlib.rc_context({"svg.hashsalt": "leapsim"}):
        fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out
