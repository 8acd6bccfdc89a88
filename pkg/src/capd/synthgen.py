"""Synthetic benchmark with a planted linear feature-from-semantics map.

Class embeddings are drawn uniformly on the unit sphere and pushed through
a fixed random matrix to produce feature means; samples add isotropic
Gaussian noise.  Under this generator the whole pipeline is well
specified, so accuracy thresholds in tests are principled.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .data_model import (
    EmbeddingTable,
    ExperimentSplit,
    FeatureTable,
    SplitConfig,
    make_split,
)
from .errors import ValidationError


@dataclass(frozen=True)
class SynthConfig:
    S: int = 20
    U: int = 5
    d: int = 10
    k: int = 30
    samples_per_class: int = 50
    noise_sigma: float = 0.01
    seed: int = 0
    mode: str = "zsl"
    shots: int = 3

    def __post_init__(self):
        if min(self.S, self.U, self.d, self.k, self.samples_per_class) < 1:
            raise ValidationError("all size parameters must be positive")
        if self.S + self.U < 3:
            raise ValidationError("need at least 3 classes in total")
        if self.noise_sigma < 0:
            raise ValidationError("noise_sigma must be nonnegative")
        if self.k < self.d:
            warnings.warn("k < d: the planted map is not injective", stacklevel=2)


# matches acceptance benchmarking defaults
PRESETS = {
    "small": SynthConfig(),
    "tiny": SynthConfig(S=6, U=3, d=4, k=8, samples_per_class=10),
}


def generate(cfg: SynthConfig) -> tuple[FeatureTable, EmbeddingTable, ExperimentSplit]:
    """Deterministic dataset; the last U class ids are the unseen ones."""
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0x5F9D]))
    C = cfg.S + cfg.U
    emb = rng.normal(size=(C, cfg.d))
    emb /= np.linalg.norm(emb, axis=1, keepdims=True)
    # entries N(0, 1/d), i.e. variance 1/d
    G = rng.normal(0.0, 1.0 / np.sqrt(cfg.d), size=(cfg.k, cfg.d))

    instance_ids = []
    class_ids = []
    rows = []
    n = cfg.samples_per_class
    for ci in range(C):
        class_id = ci + 1
        mean = G @ emb[ci]
        noise = rng.normal(0.0, 1.0, size=(n, cfg.k)) * cfg.noise_sigma
        for m in range(n):
            instance_ids.append(f"c{class_id:03d}_i{m:03d}")
            class_ids.append(class_id)
            rows.append(mean + noise[m])

    features = FeatureTable(
        instance_ids=tuple(instance_ids),
        class_ids=tuple(class_ids),
        x=np.array(rows),
    )
    embeddings = EmbeddingTable(
        entries={ci + 1: emb[ci].copy() for ci in range(C)}
    )
    split_cfg = SplitConfig(
        seen=tuple(range(1, cfg.S + 1)),
        unseen=tuple(range(cfg.S + 1, C + 1)),
        mode=cfg.mode,
        shots=cfg.shots,
        seed=cfg.seed,
    )
    split = make_split(features, embeddings, split_cfg)
    return features, embeddings, split
