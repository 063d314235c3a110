"""Plot emission: tabular data is always written; the PNG rendering is optional."""
from __future__ import annotations

import logging
import re
from enum import Enum
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import pandas as pd

from src.errors import PlotError

logger = logging.getLogger(__name__)


class PlotKind(str, Enum):
    QUANTITY_CURVE = "QUANTITY_CURVE"
    RELATION_DISTRIBUTION = "RELATION_DISTRIBUTION"
    COOCCURRENCE_HEATMAP = "COOCCURRENCE_HEATMAP"


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", name).strip("_").lower()


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _write_frame(frame: pd.DataFrame, out_dir: Path, stem: str) -> list[Path]:
    csv_path, json_path = out_dir / f"{stem}.csv", out_dir / f"{stem}.json"
    frame.to_csv(csv_path, index=False)
    frame.to_json(json_path, orient="records", indent=2)
    return [csv_path, json_path]


def _quantity_frame(artifact: Any) -> pd.DataFrame:
    """Rows of {series, cap, f1}, or {series: {cap: f1}}."""
    if isinstance(artifact, Mapping):
        rows = [{"series": s, "cap": int(c), "f1": float(f)} for s, curve in artifact.items() for c, f in curve.items()]
    else:
        rows = list(artifact)
    frame = pd.DataFrame(rows)
    if frame.empty:
        return frame
    missing = {"series", "cap", "f1"} - set(frame.columns)
    if missing:
        raise PlotError(f"quantity metrics lack columns {sorted(missing)}")
    return frame.sort_values(["series", "cap"]).reset_index(drop=True)


def _distribution_frame(artifact: Mapping[str, Mapping[str, int]]) -> pd.DataFrame:
    rows = [{"perspective": p, "label": label, "count": int(n)} for p, counts in artifact.items() for label, n in counts.items()]
    return pd.DataFrame(rows)


def emit_plots(artifact: Any, kind: PlotKind | str, out_dir: str | Path, render: bool = True) -> list[Path]:
    """Write the data behind a plot (CSV and JSON) and, when `render`, the PNG; returns written paths.

    Artifacts: QUANTITY_CURVE takes metric rows or {series: {cap: f1}}; RELATION_DISTRIBUTION takes
    {perspective: {label: count}}; COOCCURRENCE_HEATMAP takes {name: (entity types, square matrix)}.
    """
    try:
        kind = PlotKind(kind)
    except ValueError as e:
        raise PlotError(f"unknown plot kind: {kind}") from e
    if not artifact:
        raise PlotError(f"nothing to plot for {kind.value}")
    out_dir = Path(out_dir)

    if kind is PlotKind.QUANTITY_CURVE:
        frame = _quantity_frame(artifact)
        if frame.empty:
            raise PlotError("quantity metrics are empty")
        out_dir.mkdir(parents=True, exist_ok=True)
        written = _write_frame(frame, out_dir, "quantity_curve")
        if render:
            plt = _pyplot()
            fig, ax = plt.subplots(figsize=(6, 4))
            for series, group in frame.groupby("series", sort=True):
                ax.plot(group["cap"], group["f1"], marker="o", label=series)
            ax.set_xlabel("training sentences")
            ax.set_ylabel("micro F1")
            ax.legend()
            written.append(_save(fig, plt, out_dir / "quantity_curve.png"))
        return written

    if kind is PlotKind.RELATION_DISTRIBUTION:
        frame = _distribution_frame(artifact)
        if frame.empty:
            raise PlotError("relation distribution is empty")
        out_dir.mkdir(parents=True, exist_ok=True)
        written = _write_frame(frame, out_dir, "relation_distribution")
        if render:
            plt = _pyplot()
            table = frame.pivot(index="label", columns="perspective", values="count")
            fig, ax = plt.subplots(figsize=(7, 4))
            table.plot.bar(ax=ax, rot=20)
            ax.set_ylabel("relations")
            written.append(_save(fig, plt, out_dir / "relation_distribution.png"))
        return written

    matrices = {name: (list(types), np.asarray(m, dtype=float)) for name, (types, m) in artifact.items()}
    for name, (types, m) in matrices.items():
        if m.shape != (len(types), len(types)):
            raise PlotError(f"{name}: matrix shape {m.shape} does not match {len(types)} entity types")
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, (types, m) in sorted(matrices.items()):
        stem = f"cooccurrence_{_slug(name)}"
        frame = pd.DataFrame(m, index=types, columns=types)
        csv_path = out_dir / f"{stem}.csv"
        frame.to_csv(csv_path)
        json_path = out_dir / f"{stem}.json"
        frame.to_json(json_path, orient="split", indent=2)
        written += [csv_path, json_path]
        if render:
            plt = _pyplot()
            fig, ax = plt.subplots(figsize=(5, 4.5))
            image = ax.imshow(m, cmap="Blues")
            ax.set_xticks(range(len(types)), types, rotation=45, ha="right")
            ax.set_yticks(range(len(types)), types)
            ax.set_title(name)
            fig.colorbar(image, ax=ax)
            written.append(_save(fig, plt, out_dir / f"{stem}.png"))
    return written


def _save(fig, plt, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    logger.debug("Wrote %s", path)
    return path
