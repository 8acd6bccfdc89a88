"""Recognition and retrieval metrics: top-1, per-class accuracy, harmonic
mean, mean average precision, confusion matrices and PR curves."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


@dataclass
class EvalReport:
    top1: float
    per_class: dict[int, float]
    confusion: np.ndarray  # (C, C) counts over `classes` order
    classes: tuple[int, ...]
    acc_s: float | None = None
    acc_u: float | None = None
    hm: float | None = None
    map_score: float | None = None
    pr_curves: dict[int, list[tuple[float, float]]] = field(default_factory=dict)


def top1_accuracy(predictions, truth) -> float:
    """Fraction of exact label matches."""
    predictions = list(predictions)
    truth = list(truth)
    if len(predictions) != len(truth):
        raise ValidationError("predictions and truth have different lengths")
    if not predictions:
        raise ValidationError("empty inputs")
    return sum(p == t for p, t in zip(predictions, truth)) / len(truth)


def harmonic_mean(acc_s: float, acc_u: float) -> float:
    """2 * acc_s * acc_u / (acc_s + acc_u); zero when both are zero."""
    if acc_s + acc_u == 0.0:
        return 0.0
    return 2.0 * acc_s * acc_u / (acc_s + acc_u)


def per_class_accuracy(predictions, truth) -> dict[int, float]:
    counts: dict[int, int] = {}
    hits: dict[int, int] = {}
    for p, t in zip(predictions, truth):
        counts[t] = counts.get(t, 0) + 1
        hits[t] = hits.get(t, 0) + (p == t)
    return {c: hits[c] / counts[c] for c in counts}


def confusion_matrix(predictions, truth, classes) -> np.ndarray:
    classes = list(classes)
    index = {c: i for i, c in enumerate(classes)}
    mat = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for p, t in zip(predictions, truth):
        if t in index and p in index:
            mat[index[t], index[p]] += 1
    return mat


def _average_precision(ranked_relevance) -> float:
    hits = 0
    precisions = []
    for rank, rel in enumerate(ranked_relevance, start=1):
        if rel:
            hits += 1
            precisions.append(hits / rank)
    return float(np.mean(precisions))


def _ranked_relevance(instance_ids, scores, truth, class_id):
    order = sorted(range(len(instance_ids)),
                   key=lambda i: (-scores[i], instance_ids[i]))
    return [truth[i] == class_id for i in order]


def mean_average_precision(
    instance_ids, score_table: dict[int, np.ndarray], truth
) -> float:
    """Exact (non-interpolated) AP per test class, averaged over classes.

    score_table maps each test class to a score per instance; instances are
    ranked per class by descending score, ties broken by ascending
    instance id.
    """
    truth = list(truth)
    instance_ids = list(instance_ids)
    aps = []
    for class_id in sorted(score_table):
        if class_id not in truth:
            raise ValidationError(f"class {class_id} has no positive instance")
        rel = _ranked_relevance(instance_ids, list(score_table[class_id]),
                                truth, class_id)
        aps.append(_average_precision(rel))
    if not aps:
        raise ValidationError("empty score table")
    return float(np.mean(aps))


def pr_curve(instance_ids, scores, truth, class_id) -> list[tuple[float, float]]:
    """(recall, precision) at each rank, same ordering rules as mAP."""
    rel = _ranked_relevance(instance_ids, list(scores), truth, class_id)
    total = sum(rel)
    if total == 0:
        raise ValidationError(f"class {class_id} has no positive instance")
    points = []
    hits = 0
    for rank, r in enumerate(rel, start=1):
        hits += r
        points.append((hits / total, hits / rank))
    return points


def zsl_report(predictions, truth, classes,
               instance_ids=None, score_table=None) -> EvalReport:
    """Recognition report, with retrieval metrics when scores are given."""
    classes = tuple(classes)
    report = EvalReport(
        top1=top1_accuracy(predictions, truth),
        per_class=per_class_accuracy(predictions, truth),
        confusion=confusion_matrix(predictions, truth, classes),
        classes=classes,
    )
    if score_table is not None and instance_ids is not None:
        report.map_score = mean_average_precision(instance_ids, score_table, truth)
        report.pr_curves = {
            c: pr_curve(instance_ids, list(score_table[c]), list(truth), c)
            for c in sorted(score_table)
        }
    return report


def gzsl_report(predictions, truth, split,
                instance_ids=None, score_table=None) -> EvalReport:
    """Joint seen+unseen report: group accuracies are mean per-class."""
    truth = list(truth)
    seen_set = set(split.seen_ids)
    unseen_set = set(split.unseen_ids)
    if not any(t in seen_set for t in truth) or not any(t in unseen_set for t in truth):
        raise ValidationError("GZSL test set must contain seen and unseen instances")
    classes = tuple(split.seen_ids) + tuple(split.unseen_ids)
    report = zsl_report(predictions, truth, classes, instance_ids, score_table)
    per_class = report.per_class
    report.acc_s = float(np.mean([per_class[c] for c in per_class if c in seen_set]))
    report.acc_u = float(np.mean([per_class[c] for c in per_class if c in unseen_set]))
    report.hm = harmonic_mean(report.acc_s, report.acc_u)
    return report
