"""Unseen-class directions from mixed seen directions, and ZSL prediction."""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

import numpy as np

from .data_model import EmbeddingTable
from .errors import ValidationError
from .metric_learning import MetricModel
from .seen_classifier import ClassifierBank
from .semantic_mixer import MixingCoefficients

if TYPE_CHECKING:  # pragma: no cover
    from .fsl import FslModel
    from .gzsl import GammaModel


@dataclass
class CapdModel:
    """Trained artifact: seen bank, metric, mixers and optional extensions."""

    bank: ClassifierBank
    metric: MetricModel
    mixers: dict[int, MixingCoefficients]
    embeddings: EmbeddingTable
    seen_ids: tuple[int, ...]
    unseen_ids: tuple[int, ...]
    gzsl: Optional["GammaModel"] = None
    fsl: Optional["FslModel"] = None

    def __post_init__(self):
        for u in self.unseen_ids:
            if u not in self.mixers:
                raise ValidationError(f"no mixing coefficients for unseen class {u}")
        if self.bank.d != self.embeddings.d:
            raise ValidationError("bank and embeddings disagree on d")


def seen_capds(model: CapdModel, x) -> dict[int, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    return {s: model.bank.projectors[s].W.T @ x for s in model.seen_ids}


def unseen_capd(model: CapdModel, x, unseen_id: int) -> np.ndarray:
    """Mix seen directions into the unseen one: p_u = sum_s w_s W_s^T x."""
    if unseen_id not in model.mixers:
        raise ValidationError(f"no mixing coefficients for unseen class {unseen_id}")
    x = np.asarray(x, dtype=np.float64)
    mix = model.mixers[unseen_id]
    p = np.zeros(model.bank.d)
    for s, w in zip(mix.support, mix.weights):
        p += w * (model.bank.projectors[s].W.T @ x)
    return p


def zsl_scores(model: CapdModel, x) -> dict[int, float]:
    """Projection response <p_u, e_u> for every unseen class."""
    return {
        u: float(unseen_capd(model, x, u) @ model.embeddings.entries[u])
        for u in model.unseen_ids
    }


def argmax_label(scores: dict[int, float]) -> int:
    """Highest score wins; exact ties go to the smaller class id."""
    if not scores:
        raise ValidationError("empty score map")
    return min(scores, key=lambda c: (-scores[c], c))


def predict_zsl(model: CapdModel, x) -> tuple[int, dict[int, float]]:
    """Assign the unseen class with the maximum projection response."""
    if not model.unseen_ids:
        raise ValidationError("model has no unseen classes")
    scores = zsl_scores(model, x)
    return argmax_label(scores), scores
