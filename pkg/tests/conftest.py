"""Shared fixtures: small deterministic datasets and trained artifacts."""
import numpy as np
import pytest

from capd.data_model import EmbeddingTable, FeatureTable, SplitConfig, make_split
from capd.synthgen import SynthConfig, generate


@pytest.fixture(scope="session")
def tiny_dataset():
    """Separable 3-seen / 2-unseen toy problem (k=8, d=4, 20 samples/class)."""
    cfg = SynthConfig(S=3, U=2, d=4, k=8, samples_per_class=20, noise_sigma=0.01)
    return generate(cfg)


@pytest.fixture(scope="session")
def small_dataset():
    """The benchmark-sized dataset (S=20, U=5, d=10, k=30, n=50)."""
    return generate(SynthConfig())


@pytest.fixture
def simplex_embeddings():
    """Three orthonormal embeddings in R^3."""
    return EmbeddingTable(
        entries={1: np.array([1.0, 0, 0]),
                 2: np.array([0, 1.0, 0]),
                 3: np.array([0, 0, 1.0])}
    )


def make_feature_table(rng, class_ids, k):
    rows = rng.normal(size=(len(class_ids), k))
    return FeatureTable(
        instance_ids=tuple(f"i{j}" for j in range(len(class_ids))),
        class_ids=tuple(class_ids),
        x=rows,
    )


@pytest.fixture
def random_features():
    rng = np.random.default_rng(11)
    return make_feature_table(rng, [1, 1, 2, 2, 3, 3], k=8)


@pytest.fixture
def zsl_split():
    def build(features, embeddings, seen, unseen, mode="zsl", shots=3, seed=0):
        cfg = SplitConfig(seen=tuple(seen), unseen=tuple(unseen), mode=mode,
                          shots=shots, seed=seed)
        return make_split(features, embeddings, cfg)
    return build
