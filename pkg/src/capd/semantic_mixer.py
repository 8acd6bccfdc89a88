"""Reconstruction of unseen class embeddings from seen embeddings.

The full-mode coefficients solve a metric-weighted ridge problem over all
seen embeddings; reduced mode restricts the solve to an automatically
sized set of nearest seen classes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics
from .data_model import EmbeddingTable
from .errors import ValidationError
from .metric_learning import MetricModel, mahalanobis


@dataclass(frozen=True)
class MixingCoefficients:
    unseen_id: int
    mode: str  # "full" | "reduced"
    support: tuple[int, ...]  # seen class ids, aligned with weights
    weights: np.ndarray
    reconstruction_error: float

    def __post_init__(self):
        if self.mode not in ("full", "reduced"):
            raise ValidationError(f"unknown mixing mode {self.mode!r}")
        if len(self.support) != self.weights.shape[0]:
            raise ValidationError("support and weights lengths differ")
        if self.reconstruction_error < 0:
            raise ValidationError("reconstruction error must be nonnegative")
        self.weights.setflags(write=False)


def _solve(
    embeddings: EmbeddingTable,
    support,
    metric: MetricModel,
    unseen_id: int,
    lambda_u: float,
    mode: str,
) -> MixingCoefficients:
    support = tuple(support)
    if not support:
        raise ValidationError("support set is empty")
    E = embeddings.matrix(support)  # (d, |support|)
    e_u = embeddings.entries[unseen_id]
    weights = numerics.ridge_solve_metric(E, metric.M, e_u, lambda_u)
    resid = E @ weights - e_u
    err = float(max(resid @ metric.M @ resid, 0.0))
    return MixingCoefficients(
        unseen_id=unseen_id,
        mode=mode,
        support=support,
        weights=weights,
        reconstruction_error=err,
    )


def solve_alpha(
    embeddings: EmbeddingTable,
    seen_ids,
    metric: MetricModel,
    unseen_id: int,
    lambda_u: float,
) -> MixingCoefficients:
    """Full-mode coefficients over all seen classes."""
    return _solve(embeddings, seen_ids, metric, unseen_id, lambda_u, "full")


def solve_beta(
    embeddings: EmbeddingTable,
    support,
    metric: MetricModel,
    unseen_id: int,
    lambda_u: float,
) -> MixingCoefficients:
    """Reduced-mode coefficients over a chosen support of seen classes."""
    return _solve(embeddings, support, metric, unseen_id, lambda_u, "reduced")


def auto_select_support(
    embeddings: EmbeddingTable,
    seen_ids,
    metric: MetricModel,
    unseen_id: int,
) -> tuple[int, tuple[int, ...], bool]:
    """Pick how many (and which) nearest seen classes describe an unseen one.

    Metric distances from the unseen embedding to every seen embedding are
    mean-normalized and smoothed by a unit-bandwidth standard-normal KDE;
    the classes whose density at their own normalized distance reaches the
    mean density are counted, and that many nearest classes (ties broken by
    ascending class id) form the support.  Returns (N, support, degenerate);
    degenerate is True when every distance is zero, in which case all seen
    classes are kept.
    """
    seen_ids = list(seen_ids)
    if len(seen_ids) < 2:
        raise ValidationError("need at least 2 seen classes")
    e_u = embeddings.entries[unseen_id]
    dists = np.array(
        [mahalanobis(metric, e_u, embeddings.entries[s]) for s in seen_ids]
    )
    mean = float(np.mean(dists))
    if mean <= 0.0:
        return len(seen_ids), tuple(sorted(seen_ids)), True
    norm = dists / mean
    density = numerics.gaussian_kde(norm, 1.0, norm)
    # tolerance keeps the all-equal-distances case at N = S despite rounding
    thresh = np.mean(density) * (1.0 - 1e-12)
    n = int(np.sum(density >= thresh))
    n = min(max(n, 1), len(seen_ids))
    order = sorted(range(len(seen_ids)), key=lambda i: (dists[i], seen_ids[i]))
    support = tuple(seen_ids[i] for i in order[:n])
    return n, support, False
