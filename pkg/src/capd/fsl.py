"""Few-shot updates: shot-trained unseen projectors fused with mixed ones.

Revealed shots train one projector per unseen class (negatives come from
the other unseen classes' shots).  A convex pair (delta, delta') weighs
the mixture-based direction against the shot-trained one, estimated from
the summed maximum projection responses over the seen training pool.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data_model import EmbeddingTable, ExperimentSplit, FeatureTable
from .errors import ValidationError
from .seen_classifier import ClassifierBank, TrainHyper, _train_bank
from .zsl import CapdModel, argmax_label, unseen_capd


@dataclass(frozen=True)
class FslModel:
    unseen_bank: ClassifierBank
    deltas: dict[int, tuple[float, float]]  # unseen id -> (delta, delta')
    degenerate: bool = False  # both response sums were zero; fell back to 0.5

    def __post_init__(self):
        for u, (d0, d1) in self.deltas.items():
            if not (0.0 <= d0 <= 1.0 and 0.0 <= d1 <= 1.0):
                raise ValidationError(f"deltas for class {u} outside [0, 1]")
            if d0 + d1 != 1.0:
                raise ValidationError(f"deltas for class {u} do not sum to 1")


def train_unseen_classifiers(
    split: ExperimentSplit,
    features: FeatureTable,
    embeddings: EmbeddingTable,
    hyper: TrainHyper,
    seed: int,
    threads: int = 1,
) -> ClassifierBank:
    """Train one projector per unseen class on the revealed shots."""
    if not split.fsl_shots:
        raise ValidationError("split carries no shots; use fsl or osl mode")
    if len(split.fsl_shots) < 2:
        raise ValidationError("need shots for >= 2 unseen classes (no negatives)")
    shot_pool = [iid for u in split.unseen_ids for iid in split.fsl_shots.get(u, ())]
    return _train_bank(
        split.unseen_ids, features, shot_pool, embeddings, split.unseen_ids,
        hyper, seed, threads,
    )


def shot_capd(bank: ClassifierBank, x, unseen_id: int) -> np.ndarray:
    return bank.projectors[unseen_id].W.T @ np.asarray(x, dtype=np.float64)


def compute_deltas(
    model: CapdModel,
    unseen_bank: ClassifierBank,
    features: FeatureTable,
    train_instance_ids,
    mode: str = "global",
) -> tuple[dict[int, tuple[float, float]], bool]:
    """Fusion weights from the seen training pool.

    global: A = sum_x max_u <p_u(x), e_u>, B likewise for the shot-trained
    directions; delta = A/(A+B) shared by every unseen class (the maxima
    range over u, so the sums carry no free class index).  per_class fixes
    u inside the sums instead.  Negative sums are clamped at zero; if both
    vanish the weights fall back to (0.5, 0.5) and the degenerate flag is
    set.
    """
    if mode not in ("global", "per_class"):
        raise ValidationError(f"unknown delta mode {mode!r}")
    unseen_ids = list(model.unseen_ids)
    emb = model.embeddings
    # fixed summation order by instance id keeps any parallel reduction
    # deterministic
    order = sorted(train_instance_ids)
    mixed = np.zeros(len(unseen_ids))
    shot = np.zeros(len(unseen_ids))
    per_x_mixed = []
    per_x_shot = []
    for iid in order:
        x = features.x[features.index_of(iid)]
        m = np.array(
            [unseen_capd(model, x, u) @ emb.entries[u] for u in unseen_ids]
        )
        s = np.array(
            [shot_capd(unseen_bank, x, u) @ emb.entries[u] for u in unseen_ids]
        )
        mixed += m
        shot += s
        per_x_mixed.append(m.max())
        per_x_shot.append(s.max())

    def convex(a: float, b: float) -> tuple[tuple[float, float], bool]:
        a = max(a, 0.0)
        b = max(b, 0.0)
        if a + b == 0.0:
            return (0.5, 0.5), True
        d0 = a / (a + b)
        return (d0, 1.0 - d0), False

    if mode == "global":
        pair, degen = convex(float(np.sum(per_x_mixed)), float(np.sum(per_x_shot)))
        return {u: pair for u in unseen_ids}, degen
    deltas = {}
    degenerate = False
    for i, u in enumerate(unseen_ids):
        pair, degen = convex(float(mixed[i]), float(shot[i]))
        deltas[u] = pair
        degenerate = degenerate or degen
    return deltas, degenerate


def fsl_scores(model: CapdModel, x) -> dict[int, float]:
    """Responses of the fused directions delta*p_u + delta'*p'_u."""
    if model.fsl is None:
        raise ValidationError("model has no few-shot component")
    fm = model.fsl
    scores = {}
    for u in model.unseen_ids:
        d0, d1 = fm.deltas[u]
        fused = d0 * unseen_capd(model, x, u) + d1 * shot_capd(fm.unseen_bank, x, u)
        scores[u] = float(fused @ model.embeddings.entries[u])
    return scores


def predict_fsl(model: CapdModel, x) -> tuple[int, dict[int, float]]:
    scores = fsl_scores(model, x)
    return argmax_label(scores), scores
