"""Unseen-direction mixing and prediction tests."""
import numpy as np
import pytest

from capd.data_model import EmbeddingTable
from capd.errors import ValidationError
from capd.metric_learning import MetricModel
from capd.seen_classifier import ClassifierBank, ClassProjector
from capd.semantic_mixer import MixingCoefficients
from capd.zsl import (CapdModel, argmax_label, predict_zsl, seen_capds,
                      unseen_capd, zsl_scores)


def _projector(cid, W):
    W = np.asarray(W, dtype=np.float64)
    return ClassProjector(class_id=cid, W=W, final_objective=0.0)


def _model(projectors, embeddings, mixers, seen_ids, unseen_ids):
    bank = ClassifierBank(projectors=projectors)
    return CapdModel(
        bank=bank,
        metric=MetricModel(M=np.eye(embeddings.d)),
        mixers=mixers,
        embeddings=embeddings,
        seen_ids=tuple(seen_ids),
        unseen_ids=tuple(unseen_ids),
    )


def _mix(uid, support, weights):
    return MixingCoefficients(
        unseen_id=uid, mode="reduced", support=tuple(support),
        weights=np.asarray(weights, dtype=np.float64),
        reconstruction_error=0.0,
    )


@pytest.fixture
def toy_model():
    # two seen classes with hand-picked projectors in k=3, d=2
    W1 = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    W2 = np.array([[0.0, 2.0], [1.0, 0.0], [3.0, -1.0]])
    emb = EmbeddingTable(entries={
        1: np.array([1.0, 0.0]),
        2: np.array([0.0, 1.0]),
        9: np.array([0.6, 0.8]),
        10: np.array([-0.8, 0.6]),
    })
    mixers = {
        9: _mix(9, (1, 2), [0.5, 0.25]),
        10: _mix(10, (1,), [1.0]),
    }
    return _model({1: _projector(1, W1), 2: _projector(2, W2)},
                  emb, mixers, [1, 2], [9, 10])


def test_unseen_capd_one_hot_mix_equals_seen(toy_model):
    x = np.array([0.3, -0.7, 2.0])
    p10 = unseen_capd(toy_model, x, 10)
    p1 = seen_capds(toy_model, x)[1]
    np.testing.assert_array_equal(p10, p1)


def test_unseen_capd_loop_oracle(toy_model):
    rng = np.random.default_rng(5)
    x = rng.normal(size=3)
    p = unseen_capd(toy_model, x, 9)
    oracle = (0.5 * toy_model.bank.projectors[1].W.T @ x
              + 0.25 * toy_model.bank.projectors[2].W.T @ x)
    np.testing.assert_allclose(p, oracle, atol=1e-15)


def test_unseen_capd_zero_weights_zero(toy_model):
    toy_mix = _mix(9, (1, 2), [0.0, 0.0])
    toy_model.mixers[9] = toy_mix
    p = unseen_capd(toy_model, np.ones(3), 9)
    assert np.array_equal(p, np.zeros(2))


def test_unseen_capd_linear_in_input(toy_model):
    rng = np.random.default_rng(6)
    x, y = rng.normal(size=3), rng.normal(size=3)
    lhs = unseen_capd(toy_model, 2.0 * x + y, 9)
    rhs = 2.0 * unseen_capd(toy_model, x, 9) + unseen_capd(toy_model, y, 9)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_unseen_capd_unknown_class_rejected(toy_model):
    with pytest.raises(ValidationError):
        unseen_capd(toy_model, np.ones(3), 42)


def test_zsl_scores_inner_product_oracle(toy_model):
    x = np.array([1.0, 2.0, 3.0])
    scores = zsl_scores(toy_model, x)
    for u in (9, 10):
        expect = float(unseen_capd(toy_model, x, u)
                       @ toy_model.embeddings.entries[u])
        assert scores[u] == expect


def test_argmax_picks_highest():
    assert argmax_label({3: 0.1, 7: 2.0, 5: -1.0}) == 7


def test_argmax_tie_goes_to_smaller_id():
    assert argmax_label({8: 1.5, 2: 1.5, 5: 1.5}) == 2


def test_argmax_empty_rejected():
    with pytest.raises(ValidationError):
        argmax_label({})


def test_prediction_invariant_to_positive_score_scaling(toy_model):
    rng = np.random.default_rng(7)
    for _ in range(10):
        x = rng.normal(size=3)
        label, scores = predict_zsl(toy_model, x)
        scaled = {c: 3.7 * v for c, v in scores.items()}
        assert argmax_label(scaled) == label


def test_predict_no_unseen_rejected(toy_model):
    toy_model.unseen_ids = ()
    with pytest.raises(ValidationError):
        predict_zsl(toy_model, np.ones(3))


def test_missing_mixer_rejected_at_construction(toy_model):
    with pytest.raises(ValidationError):
        _model(toy_model.bank.projectors, toy_model.embeddings,
               {9: toy_model.mixers[9]}, [1, 2], [9, 10])
