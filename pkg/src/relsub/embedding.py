"""Translation-based embedding trainer plus persistence and sanity checks.

Entities and relations get dense float32 vectors trained with a margin
ranking loss over corrupted triples: score(h, r, t) = -||h + r - t||_2,
optimized by minibatch SGD with per-parameter adaptive (Adagrad) scaling.
Single-worker runs are bit-reproducible for a fixed seed; multi-worker runs
apply unsynchronized updates to the shared tables and only promise a final
loss in the same ballpark.
"""

from __future__ import annotations

import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, EmbeddingLookupError, FormatError
from .graph import GraphSample

MAGIC = b"RELSUBEM"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sIIQQ")
_ADA_EPS = 1e-10


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 100
    epochs: int = 30
    learning_rate: float = 0.1
    margin: float = 1.0
    negatives: int = 10
    batch_size: int = 1000
    seed: int = 0
    workers: int = 1
    normalize_entities: bool = False
    strict_negatives: bool = False

    def validate(self) -> None:
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.margin <= 0:
            raise ConfigError(f"margin must be > 0, got {self.margin}")
        if self.negatives < 1:
            raise ConfigError(f"negatives must be >= 1, got {self.negatives}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")


@dataclass
class EmbeddingTable:
    """Dense float32 vectors for every entity and relation id."""

    dim: int
    entity_vecs: np.ndarray
    relation_vecs: np.ndarray

    def __post_init__(self):
        self.entity_vecs = np.ascontiguousarray(self.entity_vecs, dtype=np.float32)
        self.relation_vecs = np.ascontiguousarray(self.relation_vecs, dtype=np.float32)
        if self.entity_vecs.ndim != 2 or self.entity_vecs.shape[1] != self.dim:
            raise FormatError("entity vectors do not match declared dimension")
        if self.relation_vecs.ndim != 2 or self.relation_vecs.shape[1] != self.dim:
            raise FormatError("relation vectors do not match declared dimension")

    @property
    def num_entities(self) -> int:
        return self.entity_vecs.shape[0]

    @property
    def num_relations(self) -> int:
        return self.relation_vecs.shape[0]

    def entity(self, entity_id: int) -> np.ndarray:
        if not 0 <= entity_id < self.num_entities:
            raise EmbeddingLookupError(f"entity id {entity_id}")
        return self.entity_vecs[entity_id]

    def relation(self, relation_id: int) -> np.ndarray:
        if not 0 <= relation_id < self.num_relations:
            raise EmbeddingLookupError(f"relation id {relation_id}")
        return self.relation_vecs[relation_id]

    def all_finite(self) -> bool:
        return bool(np.isfinite(self.entity_vecs).all() and np.isfinite(self.relation_vecs).all())


@dataclass
class TrainResult:
    table: EmbeddingTable
    epoch_losses: list[float] = field(default_factory=list)


def _init_table(n_entities: int, n_relations: int, config: TrainConfig) -> EmbeddingTable:
    # Seeded uniform init in [-0.5/dim, 0.5/dim] per component.
    rng = np.random.Generator(np.random.PCG64(config.seed))
    scale = 0.5 / config.dim
    ent = rng.uniform(-scale, scale, size=(n_entities, config.dim)).astype(np.float32)
    rel = rng.uniform(-scale, scale, size=(n_relations, config.dim)).astype(np.float32)
    return EmbeddingTable(dim=config.dim, entity_vecs=ent, relation_vecs=rel)


def train_embeddings(sample: GraphSample, config: TrainConfig) -> TrainResult:
    """Train a table on the sample; returns the table plus per-epoch average loss."""
    config.validate()
    if not sample.triples:
        raise DataError("cannot train on an empty sample")
    ids = sample.to_id_array()
    n_ent, n_rel = sample.num_entities, sample.num_relations
    if ids[:, (0, 2)].max() >= n_ent or ids[:, 1].max() >= n_rel:
        raise DataError("triple ids exceed dictionary sizes (inconsistent sample)")

    table = _init_table(n_ent, n_rel, config)
    ent, rel = table.entity_vecs, table.relation_vecs
    acc_ent = np.zeros_like(ent)
    acc_rel = np.zeros_like(rel)
    rng = np.random.Generator(np.random.PCG64(config.seed + 1))
    true_set = {(int(h), int(r), int(t)) for h, r, t in ids} if config.strict_negatives else None

    losses: list[float] = []
    n = len(ids)
    for _ in range(config.epochs):
        if config.normalize_entities:
            norms = np.linalg.norm(ent, axis=1, keepdims=True)
            np.maximum(norms, 1e-12, out=norms)
            ent /= norms
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch = ids[order[start : start + config.batch_size]]
            corrupt_head = rng.random((len(batch), config.negatives)) < 0.5
            neg_ids = rng.integers(0, n_ent, size=(len(batch), config.negatives))
            if true_set is not None:
                _reject_true_negatives(batch, corrupt_head, neg_ids, true_set, rng, n_ent)
            if config.workers == 1:
                epoch_loss += _sgd_step(
                    ent, rel, acc_ent, acc_rel, batch, corrupt_head, neg_ids, config
                )
            else:
                slices = np.array_split(np.arange(len(batch)), config.workers)
                with ThreadPoolExecutor(max_workers=config.workers) as pool:
                    futures = [
                        pool.submit(
                            _sgd_step,
                            ent,
                            rel,
                            acc_ent,
                            acc_rel,
                            batch[s],
                            corrupt_head[s],
                            neg_ids[s],
                            config,
                        )
                        for s in slices
                        if len(s)
                    ]
                    epoch_loss += sum(f.result() for f in futures)
        losses.append(epoch_loss / (n * config.negatives))

    if not table.all_finite():
        raise DataError("training produced non-finite embeddings")
    return TrainResult(table=table, epoch_losses=losses)


def _reject_true_negatives(batch, corrupt_head, neg_ids, true_set, rng, n_ent, max_tries=20):
    for i in range(len(batch)):
        h, r, t = (int(v) for v in batch[i])
        for j in range(neg_ids.shape[1]):
            for _ in range(max_tries):
                cand = (int(neg_ids[i, j]), r, t) if corrupt_head[i, j] else (h, r, int(neg_ids[i, j]))
                if cand not in true_set:
                    break
                neg_ids[i, j] = rng.integers(0, n_ent)


def _sgd_step(ent, rel, acc_ent, acc_rel, batch, corrupt_head, neg_ids, config: TrainConfig) -> float:
    """One Adagrad step over a batch; returns summed hinge loss."""
    h, r, t = batch[:, 0], batch[:, 1], batch[:, 2]
    e_h, e_r, e_t = ent[h], rel[r], ent[t]
    diff_pos = e_h + e_r - e_t
    d_pos = np.linalg.norm(diff_pos, axis=1)

    neg_h = np.where(corrupt_head, neg_ids, h[:, None])
    neg_t = np.where(corrupt_head, t[:, None], neg_ids)
    diff_neg = ent[neg_h] + e_r[:, None, :] - ent[neg_t]
    d_neg = np.linalg.norm(diff_neg, axis=2)

    hinge = config.margin + d_pos[:, None] - d_neg
    active = hinge > 0
    loss = float(hinge[active].sum())
    if not active.any():
        return loss

    u_pos = diff_pos / np.maximum(d_pos, 1e-12)[:, None]
    u_neg = diff_neg / np.maximum(d_neg, 1e-12)[:, :, None]
    n_active = active.sum(axis=1).astype(np.float32)
    u_neg_act = np.where(active[:, :, None], u_neg, 0.0)

    grad_h = n_active[:, None] * u_pos
    grad_t = -grad_h
    grad_r = grad_h + u_neg_act.sum(axis=1) * -1.0
    grad_neg_h = -u_neg_act
    grad_neg_t = u_neg_act

    ent_ids = np.concatenate([h, t, neg_h[active], neg_t[active]])
    ent_grads = np.concatenate(
        [grad_h, grad_t, grad_neg_h[active], grad_neg_t[active]], axis=0
    ).astype(np.float32)
    _apply_adagrad(ent, acc_ent, ent_ids, ent_grads, config.learning_rate)
    _apply_adagrad(rel, acc_rel, r, grad_r.astype(np.float32), config.learning_rate)
    return loss


def _apply_adagrad(params, acc, ids, grads, lr):
    uniq, inv = np.unique(ids, return_inverse=True)
    summed = np.zeros((len(uniq), params.shape[1]), dtype=np.float32)
    np.add.at(summed, inv, grads)
    acc[uniq] += summed * summed
    params[uniq] -= lr * summed / (np.sqrt(acc[uniq]) + _ADA_EPS)


def score_triple(table: EmbeddingTable, h: int, r: int, t: int) -> float:
    """-||vec(h) + vec(r) - vec(t)||_2, always <= 0."""
    diff = table.entity(h).astype(np.float64) + table.relation(r) - table.entity(t)
    return float(-np.linalg.norm(diff))


def rank_eval(
    table: EmbeddingTable,
    triples: np.ndarray,
    corruptions_per_triple: int,
    seed: int,
) -> dict[str, float]:
    """Rank each true tail against sampled corrupted tails.

    Returns mean reciprocal rank and hits@10. The rank counts only strictly
    better-scoring corruptions, so ties never penalize the true tail.
    """
    triples = np.asarray(triples)
    if triples.size == 0:
        raise DataError("rank_eval requires a non-empty test set")
    if corruptions_per_triple < 1:
        raise ValueError("corruptions_per_triple must be >= 1")
    h, r, t = triples[:, 0], triples[:, 1], triples[:, 2]
    if h.max() >= table.num_entities or t.max() >= table.num_entities:
        raise EmbeddingLookupError("entity id out of range")
    if r.max() >= table.num_relations:
        raise EmbeddingLookupError("relation id out of range")

    rng = np.random.Generator(np.random.PCG64(seed))
    ent = table.entity_vecs.astype(np.float64)
    proj = ent[h] + table.relation_vecs.astype(np.float64)[r]
    s_true = -np.linalg.norm(proj - ent[t], axis=1)
    ranks = np.ones(len(triples), dtype=np.int64)
    for _ in range(corruptions_per_triple):
        cand = rng.integers(0, table.num_entities, size=len(triples))
        s_cand = -np.linalg.norm(proj - ent[cand], axis=1)
        ranks += s_cand > s_true
    return {
        "mrr": float(np.mean(1.0 / ranks)),
        "hits_at_10": float(np.mean(ranks <= 10)),
    }


def save_table(table: EmbeddingTable, path: str | Path) -> None:
    """Binary layout: header {magic, version, dim, entity count, relation count}
    then little-endian float32 vectors in id order (entities, then relations)."""
    path = Path(path)
    header = _HEADER.pack(
        MAGIC, FORMAT_VERSION, table.dim, table.num_entities, table.num_relations
    )
    with open(path, "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(table.entity_vecs, dtype="<f4").tobytes())
        f.write(np.ascontiguousarray(table.relation_vecs, dtype="<f4").tobytes())


def load_table(path: str | Path, expected_dim: int | None = None) -> EmbeddingTable:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, dim, n_ent, n_rel = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if expected_dim is not None and dim != expected_dim:
        raise FormatError(f"{path}: dimension {dim} != expected {expected_dim}")
    body = raw[_HEADER.size :]
    expected_bytes = 4 * dim * (n_ent + n_rel)
    if len(body) != expected_bytes:
        raise FormatError(f"{path}: expected {expected_bytes} payload bytes, got {len(body)}")
    flat = np.frombuffer(body, dtype="<f4")
    ent = flat[: n_ent * dim].reshape(n_ent, dim).copy()
    rel = flat[n_ent * dim :].reshape(n_rel, dim).copy()
    return EmbeddingTable(dim=dim, entity_vecs=ent, relation_vecs=rel)


def export_table_tsv(table: EmbeddingTable, path: str | Path) -> None:
    """Human-readable export: kind, id, then one column per component."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for kind, mat in (("entity", table.entity_vecs), ("relation", table.relation_vecs)):
            for i, row in enumerate(mat):
                vals = "\t".join(f"{float(x):.8e}" for x in row)
                f.write(f"{kind}\t{i}\t{vals}\n")
