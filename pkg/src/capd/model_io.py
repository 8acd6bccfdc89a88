"""Versioned on-disk container for trained models.

The container is a numpy ``.npz`` archive: one ``meta`` entry holding a
JSON document (format version, class ids, hyperparameters, mixer supports,
fusion weights) and one float64 array entry per matrix.  The exact layout
is documented in docs/model_format.md.
"""
from __future__ import annotations

import json

import numpy as np

from .data_model import EmbeddingTable
from .errors import FormatError
from .fsl import FslModel
from .gzsl import GammaModel
from .metric_learning import MetricModel
from .seen_classifier import ClassifierBank, ClassProjector, TrainHyper
from .semantic_mixer import MixingCoefficients
from .zsl import CapdModel

FORMAT_VERSION = 1


def save_model(path, model: CapdModel) -> None:
    arrays: dict[str, np.ndarray] = {"metric_M": model.metric.M}
    meta = {
        "format_version": FORMAT_VERSION,
        "k": model.bank.k,
        "d": model.bank.d,
        "seen_ids": list(model.seen_ids),
        "unseen_ids": list(model.unseen_ids),
        "metric_trace": list(model.metric.trace),
        "metric_degenerate": model.metric.degenerate,
        "mixers": {},
        "hyper": {},
    }
    for s, proj in model.bank.projectors.items():
        arrays[f"W_seen_{s}"] = np.ascontiguousarray(proj.W)
        meta["hyper"][str(s)] = {
            "learning_rate": proj.hyper.learning_rate,
            "iterations": proj.hyper.iterations,
            "lambda_s": proj.hyper.lambda_s,
        }
    for cid, e in model.embeddings.entries.items():
        arrays[f"emb_{cid}"] = e
    for u, mix in model.mixers.items():
        arrays[f"mixer_w_{u}"] = mix.weights
        meta["mixers"][str(u)] = {
            "mode": mix.mode,
            "support": list(mix.support),
            "reconstruction_error": mix.reconstruction_error,
        }
    if model.gzsl is not None:
        meta["gzsl"] = {
            "lambda_gamma": model.gzsl.lambda_gamma,
            "final_objective": model.gzsl.final_objective,
        }
        for s in model.gzsl.seen_ids:
            arrays[f"gamma_{s}"] = model.gzsl.gammas[s]
    if model.fsl is not None:
        meta["fsl"] = {
            "deltas": {str(u): list(d) for u, d in model.fsl.deltas.items()},
            "degenerate": model.fsl.degenerate,
        }
        for u, proj in model.fsl.unseen_bank.projectors.items():
            arrays[f"W_unseen_{u}"] = np.ascontiguousarray(proj.W)
    np.savez(path, meta=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8),
             **arrays)


def load_model(path) -> CapdModel:
    try:
        data = np.load(path)
    except (OSError, ValueError) as exc:
        raise FormatError(f"{path}: not a readable model container: {exc}") from exc
    if "meta" not in data:
        raise FormatError(f"{path}: missing meta entry")
    meta = json.loads(bytes(data["meta"]).decode())
    if meta.get("format_version") != FORMAT_VERSION:
        raise FormatError(
            f"{path}: unsupported format version {meta.get('format_version')!r}"
        )
    seen_ids = tuple(meta["seen_ids"])
    unseen_ids = tuple(meta["unseen_ids"])
    bank = ClassifierBank(
        projectors={
            s: ClassProjector(
                class_id=s,
                W=data[f"W_seen_{s}"],
                hyper=TrainHyper(**meta["hyper"][str(s)]),
            )
            for s in seen_ids
        }
    )
    embeddings = EmbeddingTable(
        entries={
            int(k.split("_", 1)[1]): data[k] for k in data.files if k.startswith("emb_")
        }
    )
    metric = MetricModel(
        M=data["metric_M"],
        trace=tuple(meta["metric_trace"]),
        degenerate=meta["metric_degenerate"],
    )
    mixers = {}
    for key, info in meta["mixers"].items():
        u = int(key)
        mixers[u] = MixingCoefficients(
            unseen_id=u,
            mode=info["mode"],
            support=tuple(info["support"]),
            weights=data[f"mixer_w_{u}"],
            reconstruction_error=info["reconstruction_error"],
        )
    gzsl = None
    if "gzsl" in meta:
        gzsl = GammaModel(
            seen_ids=seen_ids,
            gammas={s: data[f"gamma_{s}"] for s in seen_ids},
            lambda_gamma=meta["gzsl"]["lambda_gamma"],
            final_objective=meta["gzsl"]["final_objective"],
        )
    fsl = None
    if "fsl" in meta:
        fsl = FslModel(
            unseen_bank=ClassifierBank(
                projectors={
                    u: ClassProjector(class_id=u, W=data[f"W_unseen_{u}"])
                    for u in unseen_ids
                }
            ),
            deltas={int(k): tuple(v) for k, v in meta["fsl"]["deltas"].items()},
            degenerate=meta["fsl"]["degenerate"],
        )
    return CapdModel(
        bank=bank,
        metric=metric,
        mixers=mixers,
        embeddings=embeddings,
        seen_ids=seen_ids,
        unseen_ids=unseen_ids,
        gzsl=gzsl,
        fsl=fsl,
    )
