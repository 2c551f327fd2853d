"""2-D projections of point sets: exact t-SNE and a PCA fallback.

The t-SNE here is the exact O(n^2) formulation: symmetrized Gaussian input
affinities with per-point perplexity calibration, Student-t low-dimensional
kernel, early exaggeration, and momentum gradient descent with per-parameter
gains. Inputs above ``max_points`` are uniformly subsampled (seeded) and the
surviving row indices are recorded in the result.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MACHINE_EPS = np.finfo(np.float64).eps
DEFAULT_MAX_POINTS = 10_000


@dataclass
class Projection2D:
    coords: np.ndarray
    method: str
    params: dict
    point_indices: np.ndarray
    kl_trace: list[tuple[int, float]] = field(default_factory=list)

    def to_tsv(self, assignments=None) -> str:
        lines = ["point_id\tx\ty\tcluster_id"]
        for row, idx in enumerate(self.point_indices):
            cluster = "" if assignments is None else str(int(assignments[idx]))
            lines.append(f"{int(idx)}\t{self.coords[row, 0]:.6f}\t{self.coords[row, 1]:.6f}\t{cluster}")
        return "\n".join(lines) + "\n"


def project_2d(
    points,
    method: str = "tsne",
    *,
    perplexity: float = 30.0,
    iterations: int = 1000,
    seed: int = 0,
    early_exaggeration: float = 12.0,
    exaggeration_iters: int = 250,
    learning_rate: float | None = None,
    max_points: int = DEFAULT_MAX_POINTS,
) -> Projection2D:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise ValueError("points must be a 2-D array")
    n_total = len(pts)
    if n_total < 4:
        raise ValueError(f"projection requires at least 4 points, got {n_total}")

    indices = np.arange(n_total)
    if n_total > max_points:
        rng = np.random.Generator(np.random.PCG64(seed))
        indices = np.sort(rng.choice(n_total, size=max_points, replace=False))
        pts = pts[indices]
    n = len(pts)

    if method == "pca":
        coords = _pca_2d(pts)
        params = {"seed": seed, "subsampled": n_total > max_points}
        return Projection2D(coords=coords, method="pca", params=params, point_indices=indices)
    if method != "tsne":
        raise ValueError(f"unknown projection method {method!r}")

    if perplexity >= (n - 1) / 3:
        raise ValueError(f"perplexity must be < (n-1)/3 = {(n - 1) / 3:.2f}, got {perplexity}")
    if learning_rate is None:
        learning_rate = max(n / early_exaggeration, 1.0)
    coords, kl_trace = _tsne(
        pts,
        perplexity=perplexity,
        iterations=iterations,
        seed=seed,
        early_exaggeration=early_exaggeration,
        exaggeration_iters=exaggeration_iters,
        learning_rate=learning_rate,
    )
    params = {
        "perplexity": perplexity,
        "iterations": iterations,
        "seed": seed,
        "early_exaggeration": early_exaggeration,
        "exaggeration_iters": exaggeration_iters,
        "learning_rate": learning_rate,
        "subsampled": n_total > max_points,
    }
    return Projection2D(coords=coords, method="tsne", params=params,
                        point_indices=indices, kl_trace=kl_trace)


def _pca_2d(pts: np.ndarray) -> np.ndarray:
    centered = pts - pts.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:2]
    # Fix component signs so output bytes are reproducible across runs.
    for i in range(len(components)):
        pivot = np.argmax(np.abs(components[i]))
        if components[i, pivot] < 0:
            components[i] = -components[i]
    return centered @ components.T


def _squared_distances(pts: np.ndarray) -> np.ndarray:
    sq = (pts * pts).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * pts @ pts.T
    np.fill_diagonal(d2, 0.0)
    return np.maximum(d2, 0.0)


def _conditional_probs(d2_row: np.ndarray, i: int, perplexity: float, tol=1e-5, steps=64) -> np.ndarray:
    """Binary-search the Gaussian precision so the row entropy hits log(perplexity)."""
    target = np.log(perplexity)
    beta, beta_min, beta_max = 1.0, -np.inf, np.inf
    p = np.zeros_like(d2_row)
    for _ in range(steps):
        p = np.exp(-d2_row * beta)
        p[i] = 0.0
        total = p.sum()
        if total <= 0.0:
            total = MACHINE_EPS
        p /= total
        entropy = float(-(p[p > 0] * np.log(p[p > 0])).sum())
        diff = entropy - target
        if abs(diff) < tol:
            break
        if diff > 0:
            beta_min = beta
            beta = beta * 2.0 if beta_max == np.inf else (beta + beta_max) / 2.0
        else:
            beta_max = beta
            beta = beta / 2.0 if beta_min == -np.inf else (beta + beta_min) / 2.0
    return p


def _joint_probs(pts: np.ndarray, perplexity: float) -> np.ndarray:
    d2 = _squared_distances(pts)
    n = len(pts)
    cond = np.empty((n, n))
    for i in range(n):
        cond[i] = _conditional_probs(d2[i], i, perplexity)
    joint = (cond + cond.T) / (2.0 * n)
    return np.maximum(joint, MACHINE_EPS)


def _tsne(
    pts: np.ndarray,
    perplexity: float,
    iterations: int,
    seed: int,
    early_exaggeration: float,
    exaggeration_iters: int,
    learning_rate: float,
    checkpoint_every: int = 50,
) -> tuple[np.ndarray, list[tuple[int, float]]]:
    n = len(pts)
    p = _joint_probs(pts, perplexity)
    rng = np.random.Generator(np.random.PCG64(seed))
    y = rng.standard_normal((n, 2)) * 1e-4
    update = np.zeros_like(y)
    gains = np.ones_like(y)
    kl_trace: list[tuple[int, float]] = []

    for it in range(1, iterations + 1):
        exaggerate = early_exaggeration if it <= exaggeration_iters else 1.0
        momentum = 0.5 if it <= exaggeration_iters else 0.8

        d2 = _squared_distances(y)
        num = 1.0 / (1.0 + d2)
        np.fill_diagonal(num, 0.0)
        q = np.maximum(num / num.sum(), MACHINE_EPS)

        pq = (exaggerate * p - q) * num
        grad = 4.0 * ((np.diag(pq.sum(axis=1)) - pq) @ y)

        flips = (grad > 0) != (update > 0)
        gains[flips] += 0.2
        gains[~flips] *= 0.8
        np.clip(gains, 0.01, None, out=gains)
        update = momentum * update - learning_rate * gains * grad
        y = y + update
        y = y - y.mean(axis=0)

        if it == 1 or it % checkpoint_every == 0 or it == iterations:
            kl = float((p * np.log(p / q)).sum())
            kl_trace.append((it, kl))

    return y, kl_trace
