"""Qualitative outputs: SVG scatter plots and per-cluster triple samples."""

from __future__ import annotations

import colorsys
import random
from dataclasses import dataclass, field

import numpy as np

from .graph import TripleRecord
from .projection import Projection2D

PLOT_WIDTH = 640
PLOT_HEIGHT = 480
LEGEND_WIDTH = 110
MARGIN = 30


def cluster_palette(k: int) -> list[str]:
    """k visually distinct hex colors, stable across calls."""
    colors = []
    for i in range(k):
        r, g, b = colorsys.hsv_to_rgb(i / max(k, 1), 0.65, 0.85)
        colors.append(f"#{int(r * 255):02x}{int(g * 255):02x}{int(b * 255):02x}")
    return colors


def render_scatter(proj: Projection2D, assignments, k: int | None = None) -> str:
    """Standalone SVG scatter: one circle per point, one fill per cluster id,
    plus a legend column listing the cluster ids. Output bytes are
    deterministic for identical inputs."""
    coords = np.asarray(proj.coords, dtype=np.float64)
    if len(coords) == 0:
        raise ValueError("cannot render an empty projection")
    assign = np.asarray(assignments, dtype=np.int64)
    if len(assign) != len(coords):
        raise ValueError("assignments must align with projection rows")
    if k is None:
        k = int(assign.max()) + 1
    palette = cluster_palette(k)

    lo = coords.min(axis=0)
    hi = coords.max(axis=0)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    inner_w = PLOT_WIDTH - 2 * MARGIN
    inner_h = PLOT_HEIGHT - 2 * MARGIN
    xs = MARGIN + (coords[:, 0] - lo[0]) / span[0] * inner_w
    ys = MARGIN + (1.0 - (coords[:, 1] - lo[1]) / span[1]) * inner_h

    width = PLOT_WIDTH + LEGEND_WIDTH
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{PLOT_HEIGHT}" '
        f'viewBox="0 0 {width} {PLOT_HEIGHT}">',
        f'<rect x="0" y="0" width="{width}" height="{PLOT_HEIGHT}" fill="#ffffff"/>',
        '<g class="points">',
    ]
    for i in range(len(coords)):
        color = palette[int(assign[i]) % k]
        parts.append(f'<circle cx="{xs[i]:.2f}" cy="{ys[i]:.2f}" r="3" fill="{color}" fill-opacity="0.75"/>')
    parts.append("</g>")
    parts.append('<g class="legend">')
    box = 14
    for c in range(k):
        y = MARGIN + c * (box + 6)
        parts.append(
            f'<rect x="{PLOT_WIDTH + 10}" y="{y}" width="{box}" height="{box}" fill="{palette[c]}"/>'
        )
        parts.append(
            f'<text x="{PLOT_WIDTH + 10 + box + 6}" y="{y + box - 3}" font-size="12" '
            f'font-family="sans-serif">cluster {c}</text>'
        )
    parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


@dataclass
class ClusterSample:
    cluster_id: int
    size: int
    triples: list[TripleRecord]
    triple_indices: list[int]
    cohesion: float | None = None
    separation: float | None = None


@dataclass
class ClusterReport:
    relation: str
    samples: list[ClusterSample] = field(default_factory=list)

    def to_markdown(self) -> str:
        lines = [f"# Sampled triples for {self.relation}", ""]
        for s in self.samples:
            stats = ""
            if s.cohesion is not None and s.separation is not None:
                stats = f" (cohesion {s.cohesion:.3f}, separation {s.separation:.3f})"
            lines.append(f"## Cluster {s.cluster_id} — {s.size} triples{stats}")
            lines.append("")
            lines.append("| head | relation | tail |")
            lines.append("| --- | --- | --- |")
            for t in s.triples:
                lines.append(f"| {t.head} | {t.relation} | {t.tail} |")
            lines.append("")
        return "\n".join(lines) + "\n"


def sample_cluster_triples(
    assignments,
    triples: list[TripleRecord],
    m: int = 5,
    seed: int = 0,
    relation: str = "",
    quality=None,
) -> ClusterReport:
    """Uniform without-replacement sample of min(m, size) triples per cluster.

    ``assignments`` must align with ``triples`` (row i of the clustering is
    triple i). Deterministic per seed; m = 0 still reports cluster sizes.
    """
    assign = np.asarray(assignments, dtype=np.int64)
    if len(assign) != len(triples):
        raise ValueError("assignments must align with the relation's triples")
    if m < 0:
        raise ValueError("sample size must be >= 0")
    rng = random.Random(seed)
    quality_rows = {row.cluster_id: row for row in quality.rows} if quality is not None else {}
    report = ClusterReport(relation=relation or (triples[0].relation if triples else ""))
    for c in range(int(assign.max()) + 1 if len(assign) else 0):
        member_idx = [int(i) for i in np.flatnonzero(assign == c)]
        chosen = sorted(rng.sample(member_idx, min(m, len(member_idx))))
        row = quality_rows.get(c)
        report.samples.append(
            ClusterSample(
                cluster_id=c,
                size=len(member_idx),
                triples=[triples[i] for i in chosen],
                triple_indices=chosen,
                cohesion=getattr(row, "cohesion", None),
                separation=getattr(row, "separation", None),
            )
        )
    return report
