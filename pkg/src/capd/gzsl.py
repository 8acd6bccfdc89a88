"""Seen-direction generalization for joint seen+unseen prediction.

Raw seen directions dominate joint scoring because each W_s was trained to
favor its own class.  The gamma coefficients re-express every seen
direction as a mixture of all seen directions, fitted purely in the
semantic space so the unseen pipeline is untouched: the mean elementwise
squared residual of the generalized seen reconstructions is driven toward
the (fixed) mean unseen reconstruction residual.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data_model import EmbeddingTable
from .errors import ValidationError
from .semantic_mixer import MixingCoefficients
from .zsl import CapdModel, argmax_label, seen_capds, zsl_scores


@dataclass(frozen=True)
class GzslHyper:
    step_size: float = 0.01
    iterations: int = 500
    lambda_gamma: float = 1e-3


@dataclass(frozen=True)
class GammaModel:
    seen_ids: tuple[int, ...]
    gammas: dict[int, np.ndarray]  # class id -> length-S vector over seen_ids
    lambda_gamma: float
    final_objective: float

    def __post_init__(self):
        for s in self.seen_ids:
            g = self.gammas.get(s)
            if g is None or g.shape != (len(self.seen_ids),):
                raise ValidationError(f"bad gamma vector for seen class {s}")
            if not np.all(np.isfinite(g)):
                raise ValidationError(f"gamma for class {s} is not finite")
            g.setflags(write=False)


def _gamma_matrix(seen_ids, gammas) -> np.ndarray:
    """Columns are gamma_s in seen_ids order: shape (S, S)."""
    return np.column_stack([gammas[s] for s in seen_ids])


def _unseen_residual_constant(
    embeddings: EmbeddingTable, seen_ids, unseen_ids, alphas: dict[int, MixingCoefficients]
) -> np.ndarray:
    E = embeddings.matrix(seen_ids)
    total = np.zeros(embeddings.d)
    for u in unseen_ids:
        mix = alphas.get(u)
        if mix is None:
            raise ValidationError(f"missing full-mode coefficients for unseen {u}")
        if mix.mode != "full" or tuple(mix.support) != tuple(seen_ids):
            raise ValidationError(
                f"unseen {u}: balancing needs full-mode coefficients over all seen ids"
            )
        r = E @ mix.weights - embeddings.entries[u]
        total += r * r
    return total / len(unseen_ids)


def gzsl_objective_and_grads(
    gammas: dict[int, np.ndarray],
    embeddings: EmbeddingTable,
    seen_ids,
    unseen_ids,
    alphas: dict[int, MixingCoefficients],
    lambda_gamma: float,
) -> tuple[float, dict[int, np.ndarray]]:
    """Value and per-class gradients of the balancing objective.

    With elementwise squares, r_s = (E g_s - e_s)^2 and c the mean unseen
    reconstruction residual, the value is ||mean_s r_s - c||^2 plus the l2
    term; grad_s = (4/S) E^T [(E g_s - e_s) * (mean_s r_s - c)] + lam * g_s.
    """
    seen_ids = tuple(seen_ids)
    S = len(seen_ids)
    E = embeddings.matrix(seen_ids)
    c = _unseen_residual_constant(embeddings, seen_ids, unseen_ids, alphas)

    residuals = {s: E @ gammas[s] - embeddings.entries[s] for s in seen_ids}
    mean_sq = sum(r * r for r in residuals.values()) / S
    gap = mean_sq - c
    value = float(gap @ gap)
    grads = {}
    for s in seen_ids:
        g = gammas[s]
        grads[s] = (4.0 / S) * (E.T @ (residuals[s] * gap)) + lambda_gamma * g
        value += 0.5 * lambda_gamma * float(g @ g)
    return value, grads


def identity_gamma(seen_ids) -> dict[int, np.ndarray]:
    seen_ids = tuple(seen_ids)
    return {
        s: np.eye(len(seen_ids))[i].copy() for i, s in enumerate(seen_ids)
    }


def train_gamma(
    embeddings: EmbeddingTable,
    seen_ids,
    unseen_ids,
    alphas: dict[int, MixingCoefficients],
    hyper: GzslHyper = GzslHyper(),
) -> GammaModel:
    """Gradient descent from the one-hot start, halving the step whenever a
    candidate fails to decrease the objective; deterministic."""
    seen_ids = tuple(seen_ids)
    gammas = identity_gamma(seen_ids)
    value, grads = gzsl_objective_and_grads(
        gammas, embeddings, seen_ids, unseen_ids, alphas, hyper.lambda_gamma
    )
    step = hyper.step_size
    for _ in range(hyper.iterations):
        candidate = {s: gammas[s] - step * grads[s] for s in seen_ids}
        cand_value, cand_grads = gzsl_objective_and_grads(
            candidate, embeddings, seen_ids, unseen_ids, alphas, hyper.lambda_gamma
        )
        if cand_value < value:
            gammas, value, grads = candidate, cand_value, cand_grads
        else:
            step *= 0.5
            if step < 1e-15:
                break
    return GammaModel(
        seen_ids=seen_ids,
        gammas=gammas,
        lambda_gamma=hyper.lambda_gamma,
        final_objective=value,
    )


def gzsl_scores(model: CapdModel, x) -> dict[int, float]:
    """Joint score map: generalized seen responses plus unseen responses."""
    if model.gzsl is None:
        raise ValidationError("model has no trained gamma coefficients")
    gm = model.gzsl
    p_seen = seen_capds(model, x)
    P = np.column_stack([p_seen[s] for s in gm.seen_ids])
    scores: dict[int, float] = {}
    for s in gm.seen_ids:
        generalized = P @ gm.gammas[s]
        scores[s] = float(generalized @ model.embeddings.entries[s])
    scores.update(zsl_scores(model, x))
    return scores


def predict_gzsl(model: CapdModel, x) -> tuple[int, dict[int, float]]:
    """Argmax over seen and unseen responses jointly; ties to the smaller id."""
    scores = gzsl_scores(model, x)
    return argmax_label(scores), scores
