"""k-Means over translation vectors plus the four k-selection scores.

Lloyd iterations with deterministic tie-breaking (nearest mean, lowest
cluster id wins) and seeded initialization from k distinct data points;
kmeans++ is available behind a flag. Emptied clusters are reseeded with the
point farthest from its currently assigned mean, so returned clusterings
never contain an empty cluster.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Clustering:
    k: int
    assignments: np.ndarray
    means: np.ndarray
    iterations_run: int
    converged: bool
    wss_trace: list[float] = field(default_factory=list)

    def cluster_sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "assignments": self.assignments.tolist(),
            "means": self.means.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Clustering":
        payload = json.loads(text)
        assignments = np.asarray(payload["assignments"], dtype=np.int64)
        means = np.asarray(payload["means"], dtype=np.float64)
        return cls(
            k=int(payload["k"]),
            assignments=assignments,
            means=means,
            iterations_run=0,
            converged=True,
        )


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or len(pts) < 1:
        raise ValueError("points must be a non-empty 2-D array")
    if not np.isfinite(pts).all():
        raise ValueError("points must be finite")
    return pts


def _sq_distances(points: np.ndarray, means: np.ndarray) -> np.ndarray:
    d2 = (
        (points * points).sum(axis=1)[:, None]
        + (means * means).sum(axis=1)[None, :]
        - 2.0 * points @ means.T
    )
    return np.maximum(d2, 0.0)


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    chosen = [int(rng.integers(len(points)))]
    d2 = ((points - points[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            remaining = [i for i in range(len(points)) if i not in chosen]
            chosen.append(int(rng.choice(remaining)))
        else:
            chosen.append(int(rng.choice(len(points), p=d2 / total)))
        d2 = np.minimum(d2, ((points - points[chosen[-1]]) ** 2).sum(axis=1))
    return points[chosen].copy()


def kmeans(
    points,
    k: int,
    seed: int = 0,
    max_iter: int = 300,
    init: str = "random",
    initial_means: np.ndarray | None = None,
) -> Clustering:
    """Lloyd k-means, deterministic per seed.

    Stops when assignments no longer change (converged) or after
    ``max_iter`` iterations. Returned means are the arithmetic means of the
    final assignment, and no returned cluster is empty.
    """
    pts = _as_points(points)
    n = len(pts)
    if k < 1 or k > n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    rng = np.random.Generator(np.random.PCG64(seed))
    if initial_means is not None:
        means = np.asarray(initial_means, dtype=np.float64).copy()
        if means.shape != (k, pts.shape[1]):
            raise ValueError("initial_means must have shape (k, dim)")
    elif init == "kmeans++":
        means = _kmeans_pp_init(pts, k, rng)
    elif init == "random":
        means = pts[rng.choice(n, size=k, replace=False)].copy()
    else:
        raise ValueError(f"unknown init {init!r}")

    assignments = np.full(n, -1, dtype=np.int64)
    trace: list[float] = []
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        new_assign = np.argmin(_sq_distances(pts, means), axis=1)
        repaired = _repair_empty_clusters(pts, means, new_assign, k)
        if not repaired and np.array_equal(new_assign, assignments):
            converged = True
            break
        assignments = new_assign
        for c in range(k):
            means[c] = pts[assignments == c].mean(axis=0)
        trace.append(float(((pts - means[assignments]) ** 2).sum()))

    return Clustering(
        k=k,
        assignments=assignments,
        means=means,
        iterations_run=iterations,
        converged=converged,
        wss_trace=trace,
    )


def _repair_empty_clusters(pts, means, assignments, k) -> bool:
    """Reseed each empty cluster with the point farthest from its assigned mean."""
    sizes = np.bincount(assignments, minlength=k)
    if not (sizes == 0).any():
        return False
    dist_to_own = ((pts - means[assignments]) ** 2).sum(axis=1)
    for c in np.flatnonzero(sizes == 0):
        eligible = sizes[assignments] > 1
        if not eligible.any():
            continue
        candidates = np.where(eligible, dist_to_own, -np.inf)
        donor = int(np.argmax(candidates))
        sizes[assignments[donor]] -= 1
        assignments[donor] = c
        sizes[c] = 1
        dist_to_own[donor] = 0.0
    return True


def kmeans_best_of(
    points,
    k: int,
    restarts: int,
    seed: int = 0,
    max_iter: int = 300,
    init: str = "random",
) -> tuple[Clustering, int]:
    """Run ``restarts`` seeded k-means and keep the lowest-WSS clustering."""
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    pts = _as_points(points)
    best: Clustering | None = None
    best_wss = math.inf
    best_seed = -1
    for r in range(restarts):
        run_seed = int(np.random.SeedSequence((seed, k, r)).generate_state(1)[0])
        clustering = kmeans(pts, k, seed=run_seed, max_iter=max_iter, init=init)
        run_wss = wss(clustering, pts)
        if run_wss < best_wss:
            best, best_wss, best_seed = clustering, run_wss, run_seed
    assert best is not None
    return best, best_seed


def wss(clustering: Clustering, points) -> float:
    """Within-cluster sum of squared distances to the assigned mean."""
    pts = _as_points(points)
    return float(((pts - clustering.means[clustering.assignments]) ** 2).sum())


def silhouette(clustering: Clustering, points, variant: str = "centroid") -> float:
    """Mean silhouette; the default follows the centroid-based description
    (a = distance to own centroid, b = nearest other centroid), with the
    classic pairwise definition behind ``variant="pairwise"``."""
    pts = _as_points(points)
    if clustering.k < 2:
        raise ValueError("silhouette requires k >= 2")
    if variant == "centroid":
        d = np.sqrt(_sq_distances(pts, clustering.means))
        idx = np.arange(len(pts))
        a = d[idx, clustering.assignments]
        d_other = d.copy()
        d_other[idx, clustering.assignments] = np.inf
        b = d_other.min(axis=1)
        denom = np.maximum(a, b)
        s = np.where(denom > 0, (b - a) / np.where(denom > 0, denom, 1.0), 0.0)
        return float(s.mean())
    if variant == "pairwise":
        return _silhouette_pairwise(clustering, pts)
    raise ValueError(f"unknown silhouette variant {variant!r}")


def _silhouette_pairwise(clustering: Clustering, pts: np.ndarray) -> float:
    d = np.sqrt(_sq_distances(pts, pts))
    sizes = clustering.cluster_sizes()
    scores = np.zeros(len(pts))
    for i in range(len(pts)):
        own = clustering.assignments[i]
        if sizes[own] == 1:
            scores[i] = 0.0
            continue
        mask_own = clustering.assignments == own
        a = d[i, mask_own].sum() / (sizes[own] - 1)
        b = min(
            d[i, clustering.assignments == c].mean()
            for c in range(clustering.k)
            if c != own
        )
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0 else (b - a) / denom
    return float(scores.mean())


def davies_bouldin(clustering: Clustering, points) -> float:
    """DB index (lower is better); duplicate centroids yield +inf instead of
    a division by zero."""
    pts = _as_points(points)
    k = clustering.k
    if k < 2:
        raise ValueError("davies_bouldin requires k >= 2")
    sigma = np.empty(k)
    for c in range(k):
        members = pts[clustering.assignments == c]
        sigma[c] = float(np.linalg.norm(members - clustering.means[c], axis=1).mean())
    centroid_dist = np.sqrt(_sq_distances(clustering.means, clustering.means))
    total = 0.0
    for i in range(k):
        worst = 0.0
        for j in range(k):
            if j == i:
                continue
            if centroid_dist[i, j] == 0.0:
                worst = math.inf
                break
            worst = max(worst, (sigma[i] + sigma[j]) / centroid_dist[i, j])
        total += worst
    return total / k


def calinski_harabasz(clustering: Clustering, points) -> float:
    """CH index (higher is better); a zero within-cluster scatter yields +inf."""
    pts = _as_points(points)
    n, k = len(pts), clustering.k
    if not 2 <= k < n:
        raise ValueError(f"calinski_harabasz requires 2 <= k < n, got k={k}, n={n}")
    w = wss(clustering, pts)
    overall = pts.mean(axis=0)
    sizes = clustering.cluster_sizes()
    b = float((sizes * ((clustering.means - overall) ** 2).sum(axis=1)).sum())
    if w == 0.0:
        return math.inf
    return (b / (k - 1)) / (w / (n - k))


@dataclass
class KSelectionRow:
    k: int
    wss: float
    silhouette: float
    davies_bouldin: float
    calinski_harabasz: float
    best_seed: int


@dataclass
class KSelectionCurve:
    rows: list[KSelectionRow] = field(default_factory=list)

    def to_tsv(self) -> str:
        lines = ["k\twss\tsilhouette\tdavies_bouldin\tcalinski_harabasz\tbest_seed"]
        for r in self.rows:
            lines.append(
                f"{r.k}\t{r.wss:.6f}\t{r.silhouette:.6f}\t{_fmt(r.davies_bouldin)}"
                f"\t{_fmt(r.calinski_harabasz)}\t{r.best_seed}"
            )
        return "\n".join(lines) + "\n"

    def suggestions(self) -> dict[str, int]:
        """Extremum locations per index; reported, never auto-committed.

        Both silhouette extrema are listed because conventions differ on
        whether the score is maximized or minimized.
        """
        if not self.rows:
            return {}
        ks = [r.k for r in self.rows]
        sil = [r.silhouette for r in self.rows]
        db = [r.davies_bouldin for r in self.rows]
        ch = [r.calinski_harabasz for r in self.rows]
        out = {
            "silhouette_max_k": ks[int(np.argmax(sil))],
            "silhouette_min_k": ks[int(np.argmin(sil))],
            "davies_bouldin_min_k": ks[int(np.argmin(db))],
            "calinski_harabasz_max_k": ks[int(np.argmax(ch))],
        }
        if len(self.rows) >= 3:
            w = [r.wss for r in self.rows]
            second = [w[i - 1] - 2 * w[i] + w[i + 1] for i in range(1, len(w) - 1)]
            out["elbow_k"] = ks[1 + int(np.argmax(second))]
        return out


def k_sweep(
    points,
    k_range,
    restarts: int = 10,
    seed: int = 0,
    max_iter: int = 300,
    init: str = "random",
) -> KSelectionCurve:
    """Best-of-restarts k-means per k, scored with all four indices."""
    pts = _as_points(points)
    ks = sorted(set(int(k) for k in k_range))
    if not ks:
        raise ValueError("k_range is empty")
    if ks[0] < 2 or ks[-1] > len(pts) - 1:
        raise ValueError(f"k_range must lie within [2, {len(pts) - 1}]")
    curve = KSelectionCurve()
    for k in ks:
        clustering, best_seed = kmeans_best_of(pts, k, restarts, seed=seed, max_iter=max_iter, init=init)
        curve.rows.append(
            KSelectionRow(
                k=k,
                wss=wss(clustering, pts),
                silhouette=silhouette(clustering, pts),
                davies_bouldin=davies_bouldin(clustering, pts),
                calinski_harabasz=calinski_harabasz(clustering, pts),
                best_seed=best_seed,
            )
        )
    return curve


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:.6f}"


def adjusted_rand_index(labels_a, labels_b) -> float:
    """Chance-corrected agreement between two labelings of the same points."""
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("labelings must be equal-length 1-D sequences")
    n = len(a)
    if n == 0:
        raise ValueError("labelings must be non-empty")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    contingency = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(contingency, (ai, bi), 1)

    def comb2(x):
        return x * (x - 1) / 2.0

    sum_ij = comb2(contingency).sum()
    sum_a = comb2(contingency.sum(axis=1)).sum()
    sum_b = comb2(contingency.sum(axis=0)).sum()
    total = comb2(n)
    expected = sum_a * sum_b / total if total > 0 else 0.0
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        return 1.0
    return float((sum_ij - expected) / (max_index - expected))
