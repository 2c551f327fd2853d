from pathlib import Path

import numpy as np
import pytest

from relsub.embedding import TrainConfig, train_embeddings
from relsub.synthetic import SyntheticSpec, generate_synthetic

FIXTURES = Path(__file__).parent / "fixtures"

# Planted-recovery setup shared by the embedding, validation and acceptance
# suites: hub-shaped pools plus strict negative rejection keep the per-pool
# translation geometry recoverable (see the trainer docs).
PLANTED_SPEC = SyntheticSpec(
    sub_relations=3, triples_per_sub=300, head_pool_size=600, tail_pool_size=1, noise_rate=0.05
)
PLANTED_TRAIN = TrainConfig(
    dim=16, epochs=50, learning_rate=0.1, margin=1.0, negatives=10,
    batch_size=1000, seed=101, strict_negatives=True,
)


# Balanced pools (many distinct tails) keep true tails exchangeable with
# random corruption candidates, which the rank-eval chance-level analysis
# needs; the hub-shaped graph above has only 3 distinct tails.
BALANCED_SPEC = SyntheticSpec(
    sub_relations=3, triples_per_sub=300, head_pool_size=30, tail_pool_size=30, noise_rate=0.0
)
BALANCED_TRAIN = TrainConfig(dim=16, epochs=50, seed=103)


@pytest.fixture(scope="session")
def planted():
    sample, labels = generate_synthetic(PLANTED_SPEC, seed=1)
    return sample, np.asarray(labels)


@pytest.fixture(scope="session")
def planted_trained(planted):
    sample, _ = planted
    return train_embeddings(sample, PLANTED_TRAIN)


@pytest.fixture(scope="session")
def balanced():
    sample, labels = generate_synthetic(BALANCED_SPEC, seed=2)
    return sample, np.asarray(labels)


@pytest.fixture(scope="session")
def balanced_trained(balanced):
    sample, _ = balanced
    return train_embeddings(sample, BALANCED_TRAIN)


@pytest.fixture()
def fixture_dump() -> Path:
    return FIXTURES / "conceptnet_fixture.tsv"
