"""Round-trip and format-validation tests for the model container."""
import json

import numpy as np
import pytest

from capd.data_model import SplitConfig, make_split
from capd.errors import FormatError
from capd.model_io import FORMAT_VERSION, load_model, save_model
from capd.pipeline import PipelineConfig, train_model


@pytest.fixture(scope="module")
def trained(tiny_dataset):
    features, embeddings, split = tiny_dataset
    model = train_model(features, embeddings, split, PipelineConfig())
    return features, embeddings, split, model


@pytest.fixture(scope="module")
def trained_fsl(tiny_dataset):
    features, embeddings, base = tiny_dataset
    cfg = SplitConfig(seen=base.seen_ids, unseen=base.unseen_ids,
                      mode="fsl", shots=3, seed=0)
    split = make_split(features, embeddings, cfg)
    return features, train_model(features, embeddings, split, PipelineConfig())


def test_round_trip_bitwise(tmp_path, trained):
    _, _, _, model = trained
    p = tmp_path / "m.npz"
    save_model(p, model)
    back = load_model(p)
    assert back.seen_ids == model.seen_ids
    assert back.unseen_ids == model.unseen_ids
    for s in model.seen_ids:
        np.testing.assert_array_equal(back.bank.projectors[s].W,
                                      model.bank.projectors[s].W)
        assert back.bank.projectors[s].hyper == model.bank.projectors[s].hyper
    np.testing.assert_array_equal(back.metric.M, model.metric.M)
    assert back.metric.trace == model.metric.trace
    for u in model.unseen_ids:
        a, b = back.mixers[u], model.mixers[u]
        assert (a.mode, a.support) == (b.mode, b.support)
        np.testing.assert_array_equal(a.weights, b.weights)
        assert a.reconstruction_error == b.reconstruction_error
    for c in model.embeddings.entries:
        np.testing.assert_array_equal(back.embeddings.entries[c],
                                      model.embeddings.entries[c])


def test_round_trip_preserves_predictions(tmp_path, trained):
    from capd.zsl import predict_zsl
    features, _, _, model = trained
    p = tmp_path / "m.npz"
    save_model(p, model)
    back = load_model(p)
    for x in features.x[:10]:
        la, sa = predict_zsl(model, x)
        lb, sb = predict_zsl(back, x)
        assert la == lb and sa == sb


def test_round_trip_gzsl_and_fsl_components(tmp_path, trained_fsl):
    _, model = trained_fsl
    assert model.fsl is not None  # precondition
    p = tmp_path / "m.npz"
    save_model(p, model)
    back = load_model(p)
    assert back.fsl.deltas == model.fsl.deltas
    assert back.fsl.degenerate == model.fsl.degenerate
    for u in model.unseen_ids:
        np.testing.assert_array_equal(back.fsl.unseen_bank.projectors[u].W,
                                      model.fsl.unseen_bank.projectors[u].W)
    if model.gzsl is not None:
        for s in model.seen_ids:
            np.testing.assert_array_equal(back.gzsl.gammas[s],
                                          model.gzsl.gammas[s])


def test_garbage_file_rejected(tmp_path):
    p = tmp_path / "bad.npz"
    p.write_bytes(b"not an archive at all")
    with pytest.raises(FormatError):
        load_model(p)


def test_missing_meta_rejected(tmp_path):
    p = tmp_path / "m.npz"
    np.savez(p, W=np.eye(2))
    with pytest.raises(FormatError, match="meta"):
        load_model(p)


def test_wrong_version_rejected(tmp_path, trained):
    _, _, _, model = trained
    p = tmp_path / "m.npz"
    save_model(p, model)
    data = dict(np.load(p))
    meta = json.loads(bytes(data["meta"]).decode())
    meta["format_version"] = FORMAT_VERSION + 1
    data["meta"] = np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)
    np.savez(p, **data)
    with pytest.raises(FormatError, match="version"):
        load_model(p)


def test_missing_file_rejected(tmp_path):
    with pytest.raises(FormatError):
        load_model(tmp_path / "nope.npz")
