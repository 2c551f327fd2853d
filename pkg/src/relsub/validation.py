"""Embedding-quality protocol built on per-relation translation vectors.

For each relation r the translation vector of a triple (h, r, t) is
vec(t) - vec(h). Two aligned similarity lists are formed from cosines against
the directly learned relation vector and against the centroid of the
translation vectors; their absolute Spearman rank correlation (plus a
histogram KL cross-check) measures how faithfully the table realizes
translation semantics.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .embedding import EmbeddingTable
from .errors import EmbeddingLookupError
from .graph import GraphSample

DEFAULT_KL_BINS = 50
_KL_EPS = 1e-10


@dataclass
class TranslationSet:
    """Per-relation matrix of translation vectors, one row per triple.

    ``triple_order[i]`` is the position in the source sample of the triple
    behind row i; the ordering is fixed at construction and never reordered.
    """

    relation_id: int
    triple_order: list[int]
    vectors: np.ndarray

    def __len__(self) -> int:
        return len(self.triple_order)


def translation_vectors(
    table: EmbeddingTable,
    sample: GraphSample,
    relation: str,
    positions: list[int] | None = None,
) -> TranslationSet:
    """Rows are vec(tail) - vec(head) for every triple of ``relation``, in sample order."""
    if relation not in sample.relation_index:
        raise EmbeddingLookupError(relation)
    relation_id = sample.relation_index[relation]
    if relation_id >= table.num_relations:
        raise EmbeddingLookupError(relation)
    if positions is None:
        positions = sample.relation_positions(relation)
    head_ids = np.empty(len(positions), dtype=np.int64)
    tail_ids = np.empty(len(positions), dtype=np.int64)
    for row, pos in enumerate(positions):
        t = sample.triples[pos]
        for uri, out in ((t.head, head_ids), (t.tail, tail_ids)):
            entity_id = sample.entity_index.get(uri)
            if entity_id is None or entity_id >= table.num_entities:
                raise EmbeddingLookupError(uri)
            out[row] = entity_id
    ent = table.entity_vecs.astype(np.float64)
    vectors = ent[tail_ids] - ent[head_ids]
    return TranslationSet(relation_id=relation_id, triple_order=list(positions), vectors=vectors)


def centroid_vector(ts: TranslationSet) -> np.ndarray:
    """Componentwise mean of all translation vectors."""
    if len(ts) == 0:
        raise ValueError("centroid of an empty translation set is undefined")
    return ts.vectors.mean(axis=0)


@dataclass
class SimilarityListPair:
    """Aligned cosine lists against the learned vector and against the centroid."""

    sl_direct: np.ndarray
    sl_centroid: np.ndarray
    degenerate_count: int = 0


def _cosines(reference: np.ndarray, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ref_norm = np.linalg.norm(reference)
    row_norms = np.linalg.norm(rows, axis=1)
    degenerate = row_norms == 0.0
    if ref_norm == 0.0:
        return np.zeros(len(rows)), np.ones(len(rows), dtype=bool)
    cos = rows @ reference / (np.where(degenerate, 1.0, row_norms) * ref_norm)
    cos[degenerate] = 0.0
    return cos, degenerate


def similarity_lists(table: EmbeddingTable, ts: TranslationSet) -> SimilarityListPair:
    """Cosine of every translation vector against vec(r) and against the centroid.

    Zero-norm rows (vec(t) == vec(h)) get cosine 0 so the lists stay aligned
    and length |G_r|; such rows are tallied in ``degenerate_count``.
    """
    if len(ts) == 0:
        raise ValueError("similarity lists of an empty translation set are undefined")
    direct_ref = table.relation(ts.relation_id).astype(np.float64)
    centroid = centroid_vector(ts)
    sl_direct, deg_direct = _cosines(direct_ref, ts.vectors)
    sl_centroid, deg_centroid = _cosines(centroid, ts.vectors)
    degenerate = int(np.count_nonzero(deg_direct | deg_centroid))
    return SimilarityListPair(sl_direct=sl_direct, sl_centroid=sl_centroid, degenerate_count=degenerate)


def average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks; tied values share the average of their rank range."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values), dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


@dataclass
class SpearmanResult:
    rho: float
    abs_rho: float
    degenerate: bool = False


def spearman_abs(x: np.ndarray, y: np.ndarray) -> SpearmanResult:
    """Spearman rho with average ranks for ties, plus its absolute value.

    A constant list has no rank variance, so rho is undefined; the result is
    flagged degenerate and reported as NaN.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("spearman_abs requires two equal-length 1-D lists")
    if len(x) < 2:
        raise ValueError("spearman_abs requires lists of length >= 2")
    rx, ry = average_ranks(x), average_ranks(y)
    dx, dy = rx - rx.mean(), ry - ry.mean()
    denom = math.sqrt(float(dx @ dx) * float(dy @ dy))
    if denom == 0.0:
        return SpearmanResult(rho=float("nan"), abs_rho=float("nan"), degenerate=True)
    rho = float(dx @ dy) / denom
    rho = max(-1.0, min(1.0, rho))
    return SpearmanResult(rho=rho, abs_rho=abs(rho))


def kl_check(pair: SimilarityListPair, bins: int = DEFAULT_KL_BINS) -> float:
    """Symmetrized KL divergence between histograms of the two similarity lists.

    Histograms use equal-width bins over [-1, 1] with additive smoothing, so
    disjoint supports give a large but finite value; identical lists give 0.
    """
    if bins < 2:
        raise ValueError("kl_check requires at least 2 bins")
    p = _histogram_probs(pair.sl_direct, bins)
    q = _histogram_probs(pair.sl_centroid, bins)
    return float(0.5 * np.sum(p * np.log(p / q)) + 0.5 * np.sum(q * np.log(q / p)))


def _histogram_probs(values: np.ndarray, bins: int) -> np.ndarray:
    counts, _ = np.histogram(np.clip(values, -1.0, 1.0), bins=bins, range=(-1.0, 1.0))
    smoothed = counts.astype(np.float64) + _KL_EPS
    return smoothed / smoothed.sum()


@dataclass
class RelationRow:
    relation: str
    triple_count: int
    rho: float
    abs_rho: float
    rho_sign: int
    kl: float
    degenerate_entries: int

    def to_dict(self) -> dict:
        return {
            "relation": self.relation,
            "triple_count": self.triple_count,
            "spearman": None if math.isnan(self.rho) else self.rho,
            "abs_spearman": None if math.isnan(self.abs_rho) else self.abs_rho,
            "spearman_sign": self.rho_sign,
            "kl_divergence": self.kl,
            "degenerate_entries": self.degenerate_entries,
        }


@dataclass
class RelationValidationReport:
    rows: list[RelationRow] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)

    def to_tsv(self) -> str:
        lines = ["relation\ttriple_count\tspearman\tabs_spearman\tspearman_sign\tkl_divergence\tdegenerate_entries"]
        for r in self.rows:
            rho = "undefined" if math.isnan(r.rho) else f"{r.rho:.6f}"
            abs_rho = "undefined" if math.isnan(r.abs_rho) else f"{r.abs_rho:.6f}"
            lines.append(
                f"{r.relation}\t{r.triple_count}\t{rho}\t{abs_rho}\t{r.rho_sign}\t{r.kl:.6f}\t{r.degenerate_entries}"
            )
        for relation, reason in self.skipped:
            lines.append(f"{relation}\tskipped: {reason}\t\t\t\t\t")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        payload = {
            "relations": [r.to_dict() for r in self.rows],
            "skipped": [{"relation": rel, "reason": reason} for rel, reason in self.skipped],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def validate_all(
    table: EmbeddingTable,
    sample: GraphSample,
    min_triples: int = 2,
    bins: int = DEFAULT_KL_BINS,
) -> RelationValidationReport:
    """Run the full per-relation protocol; relations below ``min_triples`` are skipped."""
    report = RelationValidationReport()
    for relation in sample.relations_by_id():
        positions = sample.relation_positions(relation)
        if len(positions) < min_triples:
            report.skipped.append((relation, f"only {len(positions)} triple(s), need {min_triples}"))
            continue
        ts = translation_vectors(table, sample, relation, positions)
        pair = similarity_lists(table, ts)
        sp = spearman_abs(pair.sl_direct, pair.sl_centroid)
        sign = 0 if sp.degenerate else (1 if sp.rho > 0 else -1 if sp.rho < 0 else 0)
        report.rows.append(
            RelationRow(
                relation=relation,
                triple_count=len(positions),
                rho=sp.rho,
                abs_rho=sp.abs_rho,
                rho_sign=sign,
                kl=kl_check(pair, bins),
                degenerate_entries=pair.degenerate_count,
            )
        )
    return report
