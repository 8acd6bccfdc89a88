"""Per-class discriminative projections learned by SGD.

Each class gets its own k x d matrix W mapping an image feature x to a
semantic-space direction p = W^T x.  W is trained so that <p, e_own> beats
<p, e_other> (for negatives) and the mean of the other embeddings (for
positives), through a logistic surrogate.  The same trainer is reused for
unseen classes under few-shot updates.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .data_model import EmbeddingTable, ExperimentSplit, FeatureTable
from .errors import ValidationError


@dataclass(frozen=True)
class TrainHyper:
    learning_rate: float = 0.005
    iterations: int = 100  # epochs over the training stream
    lambda_s: float = 1e-3


@dataclass(frozen=True)
class ClassProjector:
    class_id: int
    W: np.ndarray  # (k, d)
    hyper: TrainHyper = field(default_factory=TrainHyper)
    final_objective: float = float("nan")

    def __post_init__(self):
        if not np.all(np.isfinite(self.W)):
            raise ValidationError(f"projector for class {self.class_id} is not finite")
        self.W.setflags(write=False)


@dataclass(frozen=True)
class ClassifierBank:
    projectors: dict[int, ClassProjector]

    def __post_init__(self):
        shapes = {p.W.shape for p in self.projectors.values()}
        if len(shapes) > 1:
            raise ValidationError("projectors disagree on (k, d)")

    @property
    def k(self) -> int:
        return next(iter(self.projectors.values())).W.shape[0]

    @property
    def d(self) -> int:
        return next(iter(self.projectors.values())).W.shape[1]

    @property
    def class_ids(self) -> list[int]:
        return sorted(self.projectors)


def compute_capd(w: ClassProjector, x) -> np.ndarray:
    """Project a feature vector into the semantic space: p = W^T x."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (w.W.shape[0],):
        raise ValidationError(
            f"feature length {x.shape} does not match k = {w.W.shape[0]}"
        )
    return w.W.T @ x


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + np.exp(-z))
    e = np.exp(z)
    return e / (1.0 + e)


def _target_direction(
    sample_class: int, own_class: int, embeddings: EmbeddingTable, seen_ids
) -> np.ndarray:
    """The vector a - e_own entering both the margin and the gradient."""
    e_own = embeddings.entries[own_class]
    if sample_class != own_class:
        a = embeddings.entries[sample_class]
    else:
        others = [embeddings.entries[s] for s in seen_ids if s != own_class]
        a = np.mean(others, axis=0)
    return a - e_own


def loss_and_gradient(
    w: ClassProjector,
    x,
    sample_class: int,
    embeddings: EmbeddingTable,
    seen_ids,
) -> tuple[float, np.ndarray]:
    """Per-sample logistic loss and its gradient in W.

    The margin is L = <p, a> - <p, e_own> with a the sample's embedding
    for negatives and the mean of the other seen embeddings for positives.
    The l2 regularizer is applied at the update site, not here.
    """
    seen_ids = list(seen_ids)
    if sample_class not in embeddings.entries or sample_class not in seen_ids:
        raise ValidationError(f"unknown class id {sample_class}")
    if w.class_id not in seen_ids:
        raise ValidationError(f"projector class {w.class_id} not among training ids")
    x = np.asarray(x, dtype=np.float64)
    v = _target_direction(sample_class, w.class_id, embeddings, seen_ids)
    p = compute_capd(w, x)
    margin = float(p @ v)
    loss = float(np.logaddexp(0.0, margin))
    grad = _sigmoid(margin) * np.outer(x, v)
    return loss, grad


def objective(
    W: np.ndarray,
    own_class: int,
    X: np.ndarray,
    sample_classes,
    embeddings: EmbeddingTable,
    seen_ids,
    lambda_s: float,
) -> float:
    """Full regularized training objective evaluated at W."""
    seen_ids = list(seen_ids)
    V = np.stack(
        [_target_direction(c, own_class, embeddings, seen_ids) for c in sample_classes]
    )
    margins = np.einsum("nk,kd,nd->n", X, W, V)
    data = float(np.mean(np.logaddexp(0.0, margins)))
    return data + 0.5 * lambda_s * float(np.sum(W * W))


@njit(cache=True, nogil=True)
def _sgd_epochs(W, X, V, order, lr, lam):  # pragma: no cover - jitted
    k, d = W.shape
    for ep in range(order.shape[0]):
        for ii in range(order.shape[1]):
            i = order[ep, ii]
            margin = 0.0
            for a in range(k):
                acc = 0.0
                for b in range(d):
                    acc += W[a, b] * V[i, b]
                margin += X[i, a] * acc
            if margin >= 0.0:
                s = 1.0 / (1.0 + np.exp(-margin))
            else:
                e = np.exp(margin)
                s = e / (1.0 + e)
            for a in range(k):
                xa = X[i, a]
                for b in range(d):
                    W[a, b] -= lr * (s * xa * V[i, b] + lam * W[a, b])


def _training_stream(
    features: FeatureTable, instance_ids, embeddings: EmbeddingTable, own_class, seen_ids
):
    idx = [features.index_of(iid) for iid in instance_ids]
    X = features.x[idx]
    classes = [features.class_ids[i] for i in idx]
    V = np.stack(
        [_target_direction(c, own_class, embeddings, seen_ids) for c in classes]
    )
    return X, classes, V


def train_classifier(
    class_id: int,
    features: FeatureTable,
    instance_ids,
    embeddings: EmbeddingTable,
    seen_ids,
    hyper: TrainHyper,
    seed: int,
) -> ClassProjector:
    """SGD on the per-class objective over the given training instances.

    W starts from N(0, 1/k) entries and the sample order reshuffles every
    epoch, both driven by a generator keyed by (seed, class_id); the result
    is a pure function of the inputs and seed.
    """
    seen_ids = list(seen_ids)
    classes_present = {features.class_ids[features.index_of(i)] for i in instance_ids}
    if len(classes_present) < 2:
        raise ValidationError(
            f"training class {class_id}: need >= 2 classes in the training set"
        )
    if len(seen_ids) < 2:
        raise ValidationError("need >= 2 training class ids")
    X, sample_classes, V = _training_stream(
        features, list(instance_ids), embeddings, class_id, seen_ids
    )
    k = X.shape[1]
    rng = np.random.default_rng(np.random.SeedSequence([seed, class_id]))
    W = rng.normal(0.0, 1.0 / np.sqrt(k), size=(k, embeddings.d))
    order = np.stack(
        [rng.permutation(X.shape[0]) for _ in range(hyper.iterations)]
    ).astype(np.int64) if hyper.iterations else np.zeros((0, X.shape[0]), np.int64)
    if hyper.learning_rate != 0.0 and hyper.iterations > 0:
        _sgd_epochs(
            W,
            np.ascontiguousarray(X),
            np.ascontiguousarray(V),
            order,
            hyper.learning_rate,
            hyper.lambda_s,
        )
    final = objective(
        W, class_id, X, sample_classes, embeddings, seen_ids, hyper.lambda_s
    )
    return ClassProjector(class_id=class_id, W=W, hyper=hyper, final_objective=final)


def train_all(
    split: ExperimentSplit,
    features: FeatureTable,
    embeddings: EmbeddingTable,
    hyper: TrainHyper,
    seed: int,
    threads: int = 1,
) -> ClassifierBank:
    """Train one projector per seen class.

    Classes are independent, so the bank is identical whatever the thread
    count; per-class RNG streams are keyed by class id.
    """
    return _train_bank(
        split.seen_ids, features, split.seen_train, embeddings, split.seen_ids,
        hyper, seed, threads,
    )


def _train_bank(
    class_ids, features, instance_ids, embeddings, training_ids, hyper, seed, threads=1
) -> ClassifierBank:
    def one(cid):
        try:
            return train_classifier(
                cid, features, instance_ids, embeddings, training_ids, hyper, seed
            )
        except ValidationError as exc:
            raise ValidationError(f"class {cid}: {exc}") from exc

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            projectors = list(pool.map(one, class_ids))
    else:
        projectors = [one(cid) for cid in class_ids]
    return ClassifierBank(projectors={p.class_id: p for p in projectors})
