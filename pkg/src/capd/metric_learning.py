"""Mahalanobis metric over the semantic space, learned from CAPD pairs.

The objective maximizes the smallest dissimilar-pair squared distance
subject to the similar-pair budget sum_A d^2_M <= 1.  We run ascent on a
soft-min surrogate with PSD projection and exact rescaling onto the
constraint, accepting an outer step only when the true hard-min objective
improves.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import numerics
from .data_model import EmbeddingTable, FeatureTable
from .errors import ValidationError
from .seen_classifier import ClassifierBank


@dataclass(frozen=True)
class PairSets:
    capds: np.ndarray  # (n, d)
    similar: tuple[tuple[int, int], ...]
    dissimilar: tuple[tuple[int, int], ...]

    def __post_init__(self):
        n = self.capds.shape[0]
        for i, j in list(self.similar) + list(self.dissimilar):
            if not (0 <= i < n and 0 <= j < n):
                raise ValidationError("pair index out of range")
        if set(self.similar) & set(self.dissimilar):
            raise ValidationError("a pair cannot be both similar and dissimilar")


@dataclass(frozen=True)
class MetricHyper:
    temperature_scale: float = 0.1  # tau = scale * median dissimilar d^2
    step_size: float = 0.1
    outer_iterations: int = 200
    pair_budget: int = 10_000


@dataclass(frozen=True)
class MetricModel:
    M: np.ndarray  # (d, d) PSD
    trace: tuple[float, ...] = ()  # hard-min objective per accepted iterate
    degenerate: bool = False  # similar budget was zero; trace-normalized instead

    def __post_init__(self):
        self.M.setflags(write=False)


def mahalanobis(m: MetricModel, a, b) -> float:
    """sqrt((a-b)^T M (a-b))."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.shape != (m.M.shape[0],):
        raise ValidationError(
            f"dimension mismatch: {a.shape} vs {b.shape} vs metric {m.M.shape}"
        )
    diff = a - b
    return float(np.sqrt(max(diff @ m.M @ diff, 0.0)))


def build_pairs(
    bank: ClassifierBank,
    features: FeatureTable,
    instance_ids,
    embeddings: EmbeddingTable,
    budget: int | None,
    seed: int,
) -> PairSets:
    """Assemble similar/dissimilar CAPD pairs from labeled training samples.

    Each sample is represented by its own-class CAPD p = W_c^T x.  Pair
    lists larger than the budget are subsampled uniformly with a seeded
    generator.
    """
    instance_ids = list(instance_ids)
    idx = [features.index_of(i) for i in instance_ids]
    labels = np.array([features.class_ids[i] for i in idx])
    if len(set(labels.tolist())) < 2:
        raise ValidationError("need samples from >= 2 classes to form pairs")
    capds = np.stack(
        [bank.projectors[c].W.T @ features.x[i] for i, c in zip(idx, labels)]
    )
    similar = [
        (i, j)
        for i in range(len(labels))
        for j in range(i + 1, len(labels))
        if labels[i] == labels[j]
    ]
    dissimilar = [
        (i, j)
        for i in range(len(labels))
        for j in range(i + 1, len(labels))
        if labels[i] != labels[j]
    ]
    if not dissimilar:
        raise ValidationError("no dissimilar pair available")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x9A17]))
    if budget is not None:
        if len(similar) > budget:
            keep = rng.choice(len(similar), size=budget, replace=False)
            similar = [similar[i] for i in sorted(keep)]
        if len(dissimilar) > budget:
            keep = rng.choice(len(dissimilar), size=budget, replace=False)
            dissimilar = [dissimilar[i] for i in sorted(keep)]
    return PairSets(
        capds=capds, similar=tuple(similar), dissimilar=tuple(dissimilar)
    )


def _pair_deltas(capds: np.ndarray, pairs) -> np.ndarray:
    i = np.array([p[0] for p in pairs])
    j = np.array([p[1] for p in pairs])
    return capds[i] - capds[j]


def _squared_dists(deltas: np.ndarray, M: np.ndarray) -> np.ndarray:
    return np.einsum("nd,de,ne->n", deltas, M, deltas)


def hard_min_objective(pairs: PairSets, M: np.ndarray) -> float:
    return float(np.min(_squared_dists(_pair_deltas(pairs.capds, pairs.dissimilar), M)))


def learn_metric(pairs: PairSets, hyper: MetricHyper = MetricHyper()) -> MetricModel:
    """Projected soft-min ascent with accept-only-improving outer steps.

    Starts from the identity scaled onto the similar-pair budget; every
    accepted iterate is PSD and rescaled so the similar sum is exactly 1.
    When the similar pairs are all coincident (budget sum 0) the constraint
    is degenerate and trace normalization trace(M) = d is used instead.
    """
    if not pairs.similar or not pairs.dissimilar:
        raise ValidationError("need nonempty similar and dissimilar pair sets")
    d = pairs.capds.shape[1]
    sim_deltas = _pair_deltas(pairs.capds, pairs.similar)
    dis_deltas = _pair_deltas(pairs.capds, pairs.dissimilar)

    sim_sum_identity = float(np.sum(sim_deltas * sim_deltas))
    degenerate = sim_sum_identity <= 0.0

    def normalize(M: np.ndarray) -> np.ndarray:
        if degenerate:
            return M * (d / np.trace(M))
        s = float(np.sum(_squared_dists(sim_deltas, M)))
        if s <= 0.0:
            return M * (d / np.trace(M))
        return M / s

    M = normalize(np.eye(d))
    tau = hyper.temperature_scale * float(np.median(_squared_dists(dis_deltas, M)))
    if tau <= 0.0:
        tau = hyper.temperature_scale

    def hard_min(M: np.ndarray) -> float:
        return float(np.min(_squared_dists(dis_deltas, M)))

    best = hard_min(M)
    trace = [best]
    step = hyper.step_size
    for _ in range(hyper.outer_iterations):
        dists = _squared_dists(dis_deltas, M)
        # Gradient of softmin: convex weights peaked on the closest pairs.
        w = np.exp(-(dists - dists.min()) / tau)
        w /= w.sum()
        grad = dis_deltas.T @ (w[:, None] * dis_deltas)
        candidate = numerics.psd_project(M + step * grad)
        candidate = normalize(candidate)
        value = hard_min(candidate)
        if value > best:
            M, best = candidate, value
            trace.append(best)
        else:
            step *= 0.5
            if step < 1e-12:
                break
    return MetricModel(M=M, trace=tuple(trace), degenerate=degenerate)
