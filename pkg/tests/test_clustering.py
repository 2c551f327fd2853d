import math

import numpy as np
import pytest
from sklearn import metrics as sk_metrics

from relsub.clustering import (
    Clustering,
    adjusted_rand_index,
    calinski_harabasz,
    davies_bouldin,
    k_sweep,
    kmeans,
    kmeans_best_of,
    silhouette,
    wss,
)

TWO_BLOBS_1D = np.array([[0.0], [1.0], [10.0], [11.0]])


def partitions_into_k(n, k):
    """All partitions of range(n) into exactly k non-empty blocks (RGS form)."""
    assign = [0] * n

    def rec(i, max_used):
        if i == n:
            if max_used == k - 1:
                yield tuple(assign)
            return
        for label in range(min(max_used + 1, k - 1) + 1):
            assign[i] = label
            yield from rec(i + 1, max(max_used, label))

    yield from rec(1, 0)


def partition_wss(points, assign, k):
    total = 0.0
    assign = np.asarray(assign)
    for c in range(k):
        members = points[assign == c]
        total += float(((members - members.mean(axis=0)) ** 2).sum())
    return total


def exhaustive_optimal_wss(points, k):
    return min(partition_wss(points, a, k) for a in partitions_into_k(len(points), k))


def blob_points(seed, blobs=2, per_blob=6, dim=2, spread=0.5, distance=20.0):
    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(blobs, dim)) * distance
    pts = np.vstack([c + rng.normal(scale=spread, size=(per_blob, dim)) for c in centers])
    labels = np.repeat(np.arange(blobs), per_blob)
    return pts, labels


class TestKMeans:
    def test_k1_returns_global_centroid(self):
        pts = np.array([[0.0, 0.0], [2.0, 2.0], [4.0, -1.0]])
        clustering = kmeans(pts, 1, seed=0)
        assert np.allclose(clustering.means[0], pts.mean(axis=0))
        assert set(clustering.assignments.tolist()) == {0}

    def test_two_points_forced_optimum(self):
        clustering = kmeans(np.array([[0.0], [10.0]]), 2, seed=0)
        assert sorted(clustering.means.ravel().tolist()) == [0.0, 10.0]
        assert wss(clustering, np.array([[0.0], [10.0]])) == 0.0

    def test_parameter_errors(self):
        pts = np.array([[0.0], [1.0]])
        with pytest.raises(ValueError):
            kmeans(pts, 0, seed=0)
        with pytest.raises(ValueError):
            kmeans(pts, 3, seed=0)
        with pytest.raises(ValueError):
            kmeans(np.array([[np.nan]]), 1, seed=0)

    def test_two_far_blobs_match_brute_force(self):
        pts, labels = blob_points(seed=5, blobs=2, per_blob=6)
        clustering, _ = kmeans_best_of(pts, 2, restarts=20, seed=1)
        got = wss(clustering, pts)
        assert got == pytest.approx(exhaustive_optimal_wss(pts, 2), abs=1e-6)
        assert adjusted_rand_index(clustering.assignments, labels) == 1.0

    @pytest.mark.parametrize("seed", [11, 12, 13])
    @pytest.mark.parametrize("k", [2, 3])
    def test_small_sets_reach_exhaustive_optimum(self, seed, k):
        rng = np.random.default_rng(seed)
        pts = rng.normal(size=(rng.integers(8, 13), 3))
        clustering, _ = kmeans_best_of(pts, k, restarts=50, seed=seed)
        assert wss(clustering, pts) == pytest.approx(exhaustive_optimal_wss(pts, k), abs=1e-6)

    def test_deterministic_per_seed(self):
        pts, _ = blob_points(seed=7, blobs=3, per_blob=10)
        a = kmeans(pts, 3, seed=9)
        b = kmeans(pts, 3, seed=9)
        assert np.array_equal(a.assignments, b.assignments)
        assert np.array_equal(a.means, b.means)

    def test_permutation_equivariance_with_explicit_init(self):
        pts, _ = blob_points(seed=3, blobs=3, per_blob=8)
        init = pts[[0, 8, 16]]
        base = kmeans(pts, 3, initial_means=init)
        rng = np.random.default_rng(0)
        perm = rng.permutation(len(pts))
        permuted = kmeans(pts[perm], 3, initial_means=init)
        assert np.array_equal(permuted.assignments, base.assignments[perm])
        assert np.allclose(permuted.means, base.means)

    def test_wss_trace_non_increasing(self):
        pts, _ = blob_points(seed=21, blobs=3, per_blob=15, spread=3.0, distance=5.0)
        clustering = kmeans(pts, 4, seed=2)
        trace = clustering.wss_trace
        assert all(trace[i + 1] <= trace[i] + 1e-9 for i in range(len(trace) - 1))

    def test_empty_cluster_repair(self):
        pts = np.array([[0.0, 0.0], [0.1, 0.0], [10.0, 0.0], [10.1, 0.0]])
        # Third mean is far from every point, so it starts empty and must be reseeded.
        init = np.array([[0.0, 0.0], [10.0, 0.0], [500.0, 500.0]])
        clustering = kmeans(pts, 3, initial_means=init)
        assert clustering.cluster_sizes().min() >= 1

    def test_ties_break_to_lowest_cluster_id(self):
        pts = np.array([[0.0], [5.0], [10.0]])
        init = np.array([[0.0], [10.0]])
        clustering = kmeans(pts, 2, initial_means=init, max_iter=1)
        # the midpoint is equidistant from both means and must join cluster 0
        assert clustering.assignments[1] == 0

    def test_means_equal_member_average(self):
        pts, _ = blob_points(seed=8, blobs=2, per_blob=9)
        clustering = kmeans(pts, 2, seed=4)
        for c in range(2):
            members = pts[clustering.assignments == c]
            assert np.allclose(clustering.means[c], members.mean(axis=0))

    def test_kmeans_pp_init(self):
        pts, labels = blob_points(seed=10, blobs=3, per_blob=10)
        clustering, _ = kmeans_best_of(pts, 3, restarts=5, seed=2, init="kmeans++")
        assert adjusted_rand_index(clustering.assignments, labels) == 1.0

    def test_json_round_trip(self):
        pts, _ = blob_points(seed=1, blobs=2, per_blob=5)
        clustering = kmeans(pts, 2, seed=0)
        loaded = Clustering.from_json(clustering.to_json())
        assert loaded.k == 2
        assert np.array_equal(loaded.assignments, clustering.assignments)
        assert np.allclose(loaded.means, clustering.means)


class TestWss:
    def test_zero_when_points_equal_means(self):
        pts = np.array([[1.0, 1.0], [2.0, 2.0]])
        clustering = kmeans(pts, 2, seed=0)
        assert wss(clustering, pts) == 0.0

    def test_forced_arithmetic(self):
        pts = np.array([[0.0], [10.0]])
        clustering = kmeans(pts, 1, seed=0)
        assert wss(clustering, pts) == pytest.approx(50.0)

    def test_matches_summation_oracle(self):
        rng = np.random.default_rng(14)
        pts = rng.normal(size=(30, 4))
        clustering = kmeans(pts, 5, seed=3)
        oracle = 0.0
        for i, p in enumerate(pts):
            diff = p - clustering.means[clustering.assignments[i]]
            oracle += float((diff * diff).sum())
        assert wss(clustering, pts) == pytest.approx(oracle, abs=1e-9)

    def test_scaling_quadratic_translation_invariant(self):
        rng = np.random.default_rng(15)
        pts = rng.normal(size=(20, 3))
        clustering = kmeans(pts, 3, seed=1)
        base = wss(clustering, pts)
        shifted = Clustering(
            k=3, assignments=clustering.assignments, means=clustering.means + 7.5,
            iterations_run=0, converged=True,
        )
        assert wss(shifted, pts + 7.5) == pytest.approx(base, abs=1e-8)
        scaled = Clustering(
            k=3, assignments=clustering.assignments, means=clustering.means * 3.0,
            iterations_run=0, converged=True,
        )
        assert wss(scaled, pts * 3.0) == pytest.approx(9.0 * base, rel=1e-12)


def two_blob_clustering():
    assignments = np.array([0, 0, 1, 1])
    means = np.array([[0.5], [10.5]])
    return Clustering(k=2, assignments=assignments, means=means, iterations_run=1, converged=True)


def silhouette_oracle(points, assignments, means):
    """Independent per-point oracle for the centroid-based silhouette."""
    scores = []
    for i, p in enumerate(points):
        own = assignments[i]
        a = float(np.linalg.norm(p - means[own]))
        b = min(float(np.linalg.norm(p - means[c])) for c in range(len(means)) if c != own)
        denom = max(a, b)
        scores.append(0.0 if denom == 0 else (b - a) / denom)
    return float(np.mean(scores))


class TestSilhouette:
    def test_two_blob_fixture_matches_per_point_oracle(self):
        clustering = two_blob_clustering()
        oracle = silhouette_oracle(TWO_BLOBS_1D, clustering.assignments, clustering.means)
        # Hand geometry: points 0 and 11 give 10/10.5, points 1 and 10 give 9/9.5.
        assert oracle == pytest.approx((2 * (10 / 10.5) + 2 * (9 / 9.5)) / 4, abs=1e-12)
        assert oracle == pytest.approx(379 / 399, abs=1e-12)
        assert silhouette(clustering, TWO_BLOBS_1D) == pytest.approx(oracle, abs=1e-12)

    def test_points_on_centroids_score_one(self):
        pts = np.array([[0.0, 0.0], [5.0, 5.0]])
        clustering = kmeans(pts, 2, seed=0)
        assert silhouette(clustering, pts) == 1.0

    def test_equidistant_point_scores_zero(self):
        pts = np.array([[0.0], [10.0], [5.0]])
        clustering = Clustering(
            k=2, assignments=np.array([0, 1, 0]), means=np.array([[0.0], [10.0]]),
            iterations_run=1, converged=True,
        )
        d = np.abs(pts - clustering.means[clustering.assignments])
        per_point = silhouette_oracle(pts, clustering.assignments, clustering.means)
        assert silhouette(clustering, pts) == pytest.approx(per_point, abs=1e-12)
        # the midpoint contributes exactly 0
        assert d[2, 0] == 5.0

    def test_requires_k_at_least_two(self):
        pts = np.array([[0.0], [1.0]])
        with pytest.raises(ValueError):
            silhouette(kmeans(pts, 1, seed=0), pts)

    def test_bounded(self):
        rng = np.random.default_rng(16)
        pts = rng.normal(size=(40, 3))
        clustering = kmeans(pts, 4, seed=1)
        assert -1.0 <= silhouette(clustering, pts) <= 1.0

    def test_pairwise_variant_matches_sklearn(self):
        pts, _ = blob_points(seed=30, blobs=3, per_blob=8)
        clustering = kmeans(pts, 3, seed=2)
        expected = sk_metrics.silhouette_score(pts, clustering.assignments)
        got = silhouette(clustering, pts, variant="pairwise")
        assert got == pytest.approx(expected, abs=1e-9)


class TestDaviesBouldin:
    def test_two_blob_hand_arithmetic(self):
        clustering = two_blob_clustering()
        # sigma = 0.5 for both clusters, centroid distance 10 -> (0.5+0.5)/10.
        assert davies_bouldin(clustering, TWO_BLOBS_1D) == pytest.approx(0.1, abs=1e-12)

    def test_distinct_singletons_score_zero(self):
        pts = np.array([[0.0], [5.0], [9.0]])
        clustering = kmeans(pts, 3, seed=0)
        assert davies_bouldin(clustering, pts) == 0.0

    def test_matches_formula_oracle_and_sklearn(self):
        rng = np.random.default_rng(17)
        pts = rng.normal(size=(50, 4))
        clustering = kmeans(pts, 5, seed=2)
        k = clustering.k
        sigma = [
            float(np.linalg.norm(pts[clustering.assignments == c] - clustering.means[c], axis=1).mean())
            for c in range(k)
        ]
        oracle = 0.0
        for i in range(k):
            oracle += max(
                (sigma[i] + sigma[j]) / float(np.linalg.norm(clustering.means[i] - clustering.means[j]))
                for j in range(k)
                if j != i
            )
        oracle /= k
        got = davies_bouldin(clustering, pts)
        assert got == pytest.approx(oracle, abs=1e-9)
        assert got == pytest.approx(
            sk_metrics.davies_bouldin_score(pts, clustering.assignments), abs=1e-9
        )

    def test_duplicate_centroids_flagged_infinite(self):
        clustering = Clustering(
            k=2, assignments=np.array([0, 1]), means=np.array([[1.0], [1.0]]),
            iterations_run=1, converged=True,
        )
        assert math.isinf(davies_bouldin(clustering, np.array([[1.0], [1.0]])))


class TestCalinskiHarabasz:
    def test_two_blob_hand_arithmetic(self):
        clustering = two_blob_clustering()
        # B = 100, W = 1, k = 2, n = 4 -> (100/1)/(1/2) = 200.
        assert calinski_harabasz(clustering, TWO_BLOBS_1D) == pytest.approx(200.0, abs=1e-12)

    def test_k_equals_n_rejected(self):
        pts = np.array([[0.0], [1.0]])
        clustering = kmeans(pts, 2, seed=0)
        with pytest.raises(ValueError):
            calinski_harabasz(clustering, pts)

    def test_zero_within_scatter_flagged_infinite(self):
        pts = np.array([[0.0], [0.0], [7.0]])
        clustering = Clustering(
            k=2, assignments=np.array([0, 0, 1]), means=np.array([[0.0], [7.0]]),
            iterations_run=1, converged=True,
        )
        assert math.isinf(calinski_harabasz(clustering, pts))

    def test_matches_formula_oracle_and_sklearn(self):
        rng = np.random.default_rng(18)
        pts = rng.normal(size=(60, 3))
        clustering = kmeans(pts, 4, seed=5)
        n, k = len(pts), clustering.k
        overall = pts.mean(axis=0)
        b = sum(
            (clustering.assignments == c).sum() * float(((clustering.means[c] - overall) ** 2).sum())
            for c in range(k)
        )
        w = wss(clustering, pts)
        oracle = (b / (k - 1)) / (w / (n - k))
        got = calinski_harabasz(clustering, pts)
        assert got == pytest.approx(oracle, rel=1e-6)
        assert got == pytest.approx(
            sk_metrics.calinski_harabasz_score(pts, clustering.assignments), rel=1e-9
        )


class TestIndicesInvariance:
    def test_translation_invariance_and_wss_scaling(self):
        pts, _ = blob_points(seed=19, blobs=3, per_blob=7)
        clustering = kmeans(pts, 3, seed=3)
        shift = np.array([3.0, -11.0])
        shifted = kmeans(pts + shift, 3, initial_means=clustering.means + shift)
        assert silhouette(clustering, pts) == pytest.approx(
            silhouette(shifted, pts + shift), abs=1e-9
        )
        assert davies_bouldin(clustering, pts) == pytest.approx(
            davies_bouldin(shifted, pts + shift), abs=1e-9
        )
        assert calinski_harabasz(clustering, pts) == pytest.approx(
            calinski_harabasz(shifted, pts + shift), rel=1e-9
        )
        assert wss(shifted, pts + shift) == pytest.approx(wss(clustering, pts), abs=1e-8)
        scaled = kmeans(pts * 4.0, 3, initial_means=clustering.means * 4.0)
        assert wss(scaled, pts * 4.0) == pytest.approx(16.0 * wss(clustering, pts), rel=1e-9)


class TestKSweep:
    def test_row_count(self):
        rng = np.random.default_rng(20)
        pts = rng.normal(size=(40, 2))
        curve = k_sweep(pts, range(2, 11), restarts=2, seed=0)
        assert [row.k for row in curve.rows] == list(range(2, 11))

    def test_three_blob_extrema_at_three(self):
        pts, _ = blob_points(seed=22, blobs=3, per_blob=10, spread=0.4, distance=15.0)
        curve = k_sweep(pts, range(2, 7), restarts=10, seed=1)
        suggestions = curve.suggestions()
        assert suggestions["silhouette_max_k"] == 3
        assert suggestions["calinski_harabasz_max_k"] == 3

    def test_best_of_restarts_wss_non_increasing_on_blobs(self):
        pts, _ = blob_points(seed=23, blobs=3, per_blob=8, spread=0.5, distance=12.0)
        curve = k_sweep(pts, range(2, 8), restarts=20, seed=2)
        wss_values = [row.wss for row in curve.rows]
        assert all(wss_values[i + 1] <= wss_values[i] + 1e-9 for i in range(len(wss_values) - 1))

    def test_range_validation(self):
        pts = np.random.default_rng(0).normal(size=(10, 2))
        with pytest.raises(ValueError):
            k_sweep(pts, range(1, 4), restarts=1)
        with pytest.raises(ValueError):
            k_sweep(pts, range(2, 30), restarts=1)
        with pytest.raises(ValueError):
            k_sweep(pts, [], restarts=1)

    def test_tsv_output(self):
        pts = np.random.default_rng(1).normal(size=(20, 2))
        curve = k_sweep(pts, range(2, 5), restarts=2, seed=0)
        tsv = curve.to_tsv()
        assert tsv.splitlines()[0] == "k\twss\tsilhouette\tdavies_bouldin\tcalinski_harabasz\tbest_seed"
        assert len(tsv.splitlines()) == 4


class TestAdjustedRandIndex:
    def test_perfect_and_permuted(self):
        labels = np.array([0, 0, 1, 1, 2, 2])
        assert adjusted_rand_index(labels, labels) == 1.0
        assert adjusted_rand_index(labels, (labels + 1) % 3) == 1.0

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_sklearn(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.integers(0, 4, size=80)
        b = rng.integers(0, 3, size=80)
        assert adjusted_rand_index(a, b) == pytest.approx(
            sk_metrics.adjusted_rand_score(a, b), abs=1e-12
        )

    def test_validation(self):
        with pytest.raises(ValueError):
            adjusted_rand_index([0, 1], [0])
        with pytest.raises(ValueError):
            adjusted_rand_index([], [])
