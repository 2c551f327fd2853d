"""Cohesion and separation statistics for clusterings of translation vectors.

Centroids are computed on the raw vectors; points and centroids are then
projected onto the unit hypersphere before any distance is taken, so the
numbers are comparable across clusters. Cohesion is 1 minus the average
member-to-centroid distance; separation is the average distance from one
normalized centroid to all the others.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateVectorError

logger = logging.getLogger(__name__)


def cluster_centroid(points) -> np.ndarray:
    """Componentwise mean of the cluster's raw members."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or len(pts) == 0:
        raise ValueError("cluster_centroid requires a non-empty 2-D point array")
    return pts.mean(axis=0)


def normalize_unit(v) -> np.ndarray:
    """Project onto the unit hypersphere; idempotent."""
    v = np.asarray(v, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise DegenerateVectorError("cannot normalize a zero vector")
    return v / norm


@dataclass
class CohesionResult:
    t: float
    cohesion: float
    excluded: int = 0


def cohesion(points, centroid=None) -> CohesionResult:
    """Average unit-sphere distance from members to centroid, subtracted from 1.

    Zero-norm members cannot be normalized; they are excluded from the
    average (and counted), while a zero-norm centroid aborts the cluster.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or len(pts) == 0:
        raise ValueError("cohesion requires a non-empty 2-D point array")
    if centroid is None:
        centroid = cluster_centroid(pts)
    unit_centroid = normalize_unit(centroid)
    norms = np.linalg.norm(pts, axis=1)
    usable = norms > 0.0
    excluded = int(np.count_nonzero(~usable))
    if excluded:
        logger.warning("cohesion: excluded %d zero-norm member(s)", excluded)
    if not usable.any():
        raise DegenerateVectorError("all cluster members have zero norm")
    unit_pts = pts[usable] / norms[usable, None]
    t = float(np.linalg.norm(unit_pts - unit_centroid, axis=1).mean())
    return CohesionResult(t=t, cohesion=1.0 - t, excluded=excluded)


def separation(centroids, m: int) -> float:
    """Average unit-sphere distance from centroid m to the other k-1 centroids."""
    cents = np.asarray(centroids, dtype=np.float64)
    if cents.ndim != 2 or len(cents) < 2:
        raise ValueError("separation requires at least 2 centroids")
    if not 0 <= m < len(cents):
        raise ValueError(f"centroid index {m} out of range")
    unit = np.stack([normalize_unit(c) for c in cents])
    others = np.delete(np.arange(len(cents)), m)
    return float(np.linalg.norm(unit[others] - unit[m], axis=1).mean())


@dataclass
class Summary:
    mean: float
    std: float

    @property
    def variance(self) -> float:
        return self.std * self.std


def summarize(values) -> Summary:
    """Arithmetic mean and population standard deviation."""
    vals = np.asarray(values, dtype=np.float64)
    if vals.ndim != 1 or len(vals) == 0:
        raise ValueError("summarize requires a non-empty list")
    mean = float(vals.mean())
    std = math.sqrt(float(((vals - mean) ** 2).mean()))
    return Summary(mean=mean, std=std)


@dataclass
class ClusterRow:
    cluster_id: int
    size: int
    cohesion: float
    separation: float
    t: float
    excluded: int = 0
    flagged: bool = False


@dataclass
class ClusterQuality:
    rows: list[ClusterRow] = field(default_factory=list)
    summary: dict[str, float] = field(default_factory=dict)

    def to_tsv(self) -> str:
        def fmt(value, flagged):
            if flagged:
                return "flagged"
            return "undefined" if math.isnan(value) else f"{value:.6f}"

        lines = ["cluster_id\tsize\tcohesion\tseparation"]
        for r in self.rows:
            lines.append(
                f"{r.cluster_id}\t{r.size}\t{fmt(r.cohesion, r.flagged)}\t{fmt(r.separation, r.flagged)}"
            )
        for key in sorted(self.summary):
            lines.append(f"# {key}\t{self.summary[key]:.6f}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        def opt(value):
            return None if math.isnan(value) else value

        payload = {
            "clusters": [
                {
                    "cluster_id": r.cluster_id,
                    "size": r.size,
                    "cohesion": opt(r.cohesion),
                    "separation": opt(r.separation),
                    "mean_distance": opt(r.t),
                    "excluded_members": r.excluded,
                    "flagged": r.flagged,
                }
                for r in self.rows
            ],
            "summary": self.summary,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def cluster_quality(points, assignments, k: int) -> ClusterQuality:
    """Cohesion/separation per cluster plus mean/std summaries.

    The summary reports the population standard deviation as the primary
    dispersion number and also its square under a ``variance_*`` label.
    """
    pts = np.asarray(points, dtype=np.float64)
    assign = np.asarray(assignments, dtype=np.int64)
    if len(pts) != len(assign):
        raise ValueError("points and assignments must align")
    if k < 2:
        raise ValueError("cluster_quality requires k >= 2")

    centroids = np.stack([cluster_centroid(pts[assign == c]) for c in range(k)])
    norms = np.linalg.norm(centroids, axis=1)
    usable = norms > 0.0
    unit_centroids = np.where(usable[:, None], centroids / np.where(usable, norms, 1.0)[:, None], 0.0)
    if not usable.all():
        logger.warning("cluster_quality: %d zero-norm centroid(s) flagged", int((~usable).sum()))

    quality = ClusterQuality()
    coh_values: list[float] = []
    sep_values: list[float] = []
    for c in range(k):
        members = pts[assign == c]
        # A zero-norm centroid (or an all-zero cluster) aborts that cluster's
        # metrics; other clusters measure separation over the usable centroids
        # and report NaN when no usable counterpart remains.
        try:
            if not usable[c]:
                raise DegenerateVectorError("zero-norm centroid")
            coh = cohesion(members, centroids[c])
        except DegenerateVectorError:
            quality.rows.append(
                ClusterRow(cluster_id=c, size=len(members), cohesion=math.nan,
                           separation=math.nan, t=math.nan, flagged=True)
            )
            continue
        others = [j for j in range(k) if j != c and usable[j]]
        if others:
            sep = float(np.linalg.norm(unit_centroids[others] - unit_centroids[c], axis=1).mean())
            sep_values.append(sep)
        else:
            sep = math.nan
        quality.rows.append(
            ClusterRow(cluster_id=c, size=len(members), cohesion=coh.cohesion,
                       separation=sep, t=coh.t, excluded=coh.excluded)
        )
        coh_values.append(coh.cohesion)

    if coh_values:
        s = summarize(coh_values)
        quality.summary.update(
            mean_cohesion=s.mean, std_cohesion=s.std, variance_cohesion=s.variance
        )
    if sep_values:
        s = summarize(sep_values)
        quality.summary.update(
            mean_separation=s.mean, std_separation=s.std, variance_separation=s.variance
        )
    return quality
