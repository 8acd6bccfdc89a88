"""End-to-end orchestration: train a full model, batch-predict, evaluate."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import evaluation, fsl as fsl_mod, gzsl as gzsl_mod, metric_learning, \
    semantic_mixer, zsl as zsl_mod
from .data_model import EmbeddingTable, ExperimentSplit, FeatureTable
from .errors import ValidationError
from .metric_learning import MetricHyper
from .seen_classifier import TrainHyper, train_all
from .zsl import CapdModel


@dataclass(frozen=True)
class PipelineConfig:
    hyper: TrainHyper = field(default_factory=TrainHyper)
    metric_hyper: MetricHyper = field(default_factory=MetricHyper)
    gzsl_hyper: gzsl_mod.GzslHyper = field(default_factory=gzsl_mod.GzslHyper)
    lambda_u: float = 1e-3
    support: str = "full"  # "full" | "reduced-auto"
    delta_mode: str = "global"  # "global" | "per_class"
    seed: int = 0
    threads: int = 1


def solve_mixers(
    embeddings: EmbeddingTable,
    seen_ids,
    metric,
    unseen_ids,
    lambda_u: float,
    support: str,
):
    mixers = {}
    for u in unseen_ids:
        if support == "reduced-auto":
            _, sup, _ = semantic_mixer.auto_select_support(
                embeddings, seen_ids, metric, u
            )
            mixers[u] = semantic_mixer.solve_beta(embeddings, sup, metric, u, lambda_u)
        elif support == "full":
            mixers[u] = semantic_mixer.solve_alpha(
                embeddings, seen_ids, metric, u, lambda_u
            )
        else:
            raise ValidationError(f"unknown support mode {support!r}")
    return mixers


def train_model(
    features: FeatureTable,
    embeddings: EmbeddingTable,
    split: ExperimentSplit,
    cfg: PipelineConfig = PipelineConfig(),
) -> CapdModel:
    """Run every training stage the split's mode requires."""
    bank = train_all(split, features, embeddings, cfg.hyper, cfg.seed, cfg.threads)
    pairs = metric_learning.build_pairs(
        bank, features, split.seen_train, embeddings,
        cfg.metric_hyper.pair_budget, cfg.seed,
    )
    metric = metric_learning.learn_metric(pairs, cfg.metric_hyper)
    mixers = solve_mixers(
        embeddings, split.seen_ids, metric, split.unseen_ids, cfg.lambda_u, cfg.support
    )
    model = CapdModel(
        bank=bank,
        metric=metric,
        mixers=mixers,
        embeddings=embeddings,
        seen_ids=split.seen_ids,
        unseen_ids=split.unseen_ids,
    )
    if split.mode == "gzsl":
        alphas = solve_mixers(
            embeddings, split.seen_ids, metric, split.unseen_ids, cfg.lambda_u, "full"
        )
        model.gzsl = gzsl_mod.train_gamma(
            embeddings, split.seen_ids, split.unseen_ids, alphas, cfg.gzsl_hyper
        )
    if split.mode in ("fsl", "osl"):
        unseen_bank = fsl_mod.train_unseen_classifiers(
            split, features, embeddings, cfg.hyper, cfg.seed, cfg.threads
        )
        deltas, degenerate = fsl_mod.compute_deltas(
            model, unseen_bank, features, split.seen_train, cfg.delta_mode
        )
        model.fsl = fsl_mod.FslModel(
            unseen_bank=unseen_bank, deltas=deltas, degenerate=degenerate
        )
    return model


def test_instances(features: FeatureTable, split: ExperimentSplit) -> list[str]:
    """Instances the configured mode is evaluated on.

    ZSL/FSL/OSL: all unseen instances (minus revealed shots).  GZSL: the
    held-out seen instances plus all unseen instances.
    """
    unseen_set = set(split.unseen_ids)
    shots = {iid for lst in split.fsl_shots.values() for iid in lst}
    out = []
    if split.mode == "gzsl":
        out.extend(split.seen_test)
    for iid, cid in zip(features.instance_ids, features.class_ids):
        if cid in unseen_set and iid not in shots:
            out.append(iid)
    return out


def predict_batch(
    model: CapdModel,
    features: FeatureTable,
    instance_ids,
    mode: str,
) -> tuple[list[int], dict[str, dict[int, float]]]:
    """Labels plus full score maps for each instance, order preserved."""
    if mode == "gzsl":
        predict = gzsl_mod.predict_gzsl
    elif mode in ("fsl", "osl"):
        predict = fsl_mod.predict_fsl
    elif mode == "zsl":
        predict = zsl_mod.predict_zsl
    else:
        raise ValidationError(f"unknown mode {mode!r}")
    labels = []
    score_maps = {}
    for iid in instance_ids:
        x = features.x[features.index_of(iid)]
        label, scores = predict(model, x)
        labels.append(label)
        score_maps[iid] = scores
    return labels, score_maps


def evaluate(
    features: FeatureTable,
    split: ExperimentSplit,
    instance_ids,
    labels,
    score_maps=None,
) -> evaluation.EvalReport:
    instance_ids = list(instance_ids)
    truth = [features.class_ids[features.index_of(i)] for i in instance_ids]
    score_table = None
    if score_maps is not None:
        scored_classes = sorted(next(iter(score_maps.values()))) if score_maps else []
        truth_set = set(truth)
        score_table = {
            c: np.array([score_maps[i][c] for i in instance_ids])
            for c in scored_classes
            if c in truth_set
        }
    if split.mode == "gzsl":
        return evaluation.gzsl_report(labels, truth, split, instance_ids, score_table)
    return evaluation.zsl_report(
        labels, truth, split.unseen_ids, instance_ids, score_table
    )
