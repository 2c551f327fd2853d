"""Synthetic graphs with planted sub-relations, used as recovery oracles.

Every planted sub-relation links a dedicated head pool to a dedicated tail
pool, all under one shared surface relation label. Noise triples connect
randomly chosen pools. The per-triple planted label (noise = -1) is emitted
alongside so downstream clustering can be scored against ground truth.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .graph import GraphSample, TripleRecord

NOISE_LABEL = -1


@dataclass(frozen=True)
class SyntheticSpec:
    """Defaults mirror coarse real-world relations: a few hub tails shared by
    many low-degree heads, with head pools oversized so noise triples mostly
    land on otherwise-unused heads."""

    sub_relations: int = 3
    triples_per_sub: int = 300
    head_pool_size: int = 600
    tail_pool_size: int = 1
    noise_rate: float = 0.0
    relation: str = "/r/synthetic"

    def validate(self) -> None:
        if self.sub_relations < 1 or self.triples_per_sub < 1:
            raise ValueError("sub_relations and triples_per_sub must be positive")
        if self.head_pool_size < 1 or self.tail_pool_size < 1:
            raise ValueError("pool sizes must be positive")
        if not 0.0 <= self.noise_rate < 1.0:
            raise ValueError("noise_rate must be in [0, 1)")
        if self.triples_per_sub > self.head_pool_size * self.tail_pool_size:
            raise ValueError("triples_per_sub exceeds distinct head/tail pairs in a pool")


def head_uri(sub: int, i: int) -> str:
    return f"/c/syn/h{sub}_{i}"


def tail_uri(sub: int, j: int) -> str:
    return f"/c/syn/t{sub}_{j}"


def generate_synthetic(spec: SyntheticSpec, seed: int) -> tuple[GraphSample, list[int]]:
    """Return (sample, labels) with labels[i] the planted sub-relation of triple i."""
    spec.validate()
    rng = random.Random(seed)
    triples: list[TripleRecord] = []
    labels: list[int] = []
    for sub in range(spec.sub_relations):
        pairs = rng.sample(range(spec.head_pool_size * spec.tail_pool_size), spec.triples_per_sub)
        for p in pairs:
            i, j = divmod(p, spec.tail_pool_size)
            triples.append(TripleRecord(head=head_uri(sub, i), relation=spec.relation, tail=tail_uri(sub, j)))
            labels.append(sub)

    n_noise = round(spec.noise_rate * len(triples))
    seen = {(t.head, t.tail) for t in triples}
    for _ in range(n_noise):
        while True:
            hs = rng.randrange(spec.sub_relations)
            ts = rng.randrange(spec.sub_relations)
            pair = (
                head_uri(hs, rng.randrange(spec.head_pool_size)),
                tail_uri(ts, rng.randrange(spec.tail_pool_size)),
            )
            if pair not in seen:
                seen.add(pair)
                break
        triples.append(TripleRecord(head=pair[0], relation=spec.relation, tail=pair[1]))
        labels.append(NOISE_LABEL)

    return GraphSample.from_triples(triples), labels


def pool_of(uri: str) -> int:
    """Recover the pool index encoded in a synthetic entity URI."""
    stem = uri.rsplit("/", 1)[-1]
    return int(stem[1:].split("_", 1)[0])
