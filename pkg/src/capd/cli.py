"""Command-line entry point.

Subcommands mirror the pipeline stages so intermediate artifacts stay
inspectable: ``synth`` writes a dataset, ``train`` a model container,
``predict`` a prediction CSV, ``eval`` an evaluation report.

Exit codes: 0 success, 2 usage, 3 validation/format failure, 4 numerical
failure.  ``CAPD_LOG=debug|info|warn`` controls logging verbosity.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

from . import data_model, model_io, pipeline, synthgen
from .errors import CapdError, SolverError, ValidationError
from .gzsl import GzslHyper
from .metric_learning import MetricHyper
from .seen_classifier import TrainHyper

log = logging.getLogger("capd")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_NUMERICAL = 4


def _setup_logging() -> None:
    level = {"debug": logging.DEBUG, "info": logging.INFO, "warn": logging.WARNING}.get(
        os.environ.get("CAPD_LOG", "warn").lower(), logging.WARNING
    )
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--features", type=Path)
    parser.add_argument("--embeddings", type=Path)
    parser.add_argument("--split", type=Path)
    parser.add_argument("--model", type=Path)
    parser.add_argument("--out", type=Path)
    parser.add_argument("--mode", choices=data_model.MODES)
    parser.add_argument("--support", choices=["full", "reduced-auto"], default="full")
    parser.add_argument("--lambda-s", type=float, default=1e-3)
    parser.add_argument("--lambda-u", type=float, default=1e-3)
    parser.add_argument("--lambda-gamma", type=float, default=1e-3)
    parser.add_argument("--lr", type=float, default=0.005)
    parser.add_argument("--iters", type=int, default=100)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument(
        "--delta-mode", choices=["global", "per_class"], default="global"
    )
    parser.add_argument("--normalize-embeddings", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="capd")
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="write a synthetic benchmark dataset")
    p_synth.add_argument("--preset", choices=sorted(synthgen.PRESETS), default="small")
    p_synth.add_argument("--sigma", type=float, default=None)
    p_synth.add_argument("--shots", type=int, default=3)
    _add_common(p_synth)

    for name, help_text in [
        ("train", "train a model container from a dataset"),
        ("predict", "write batch predictions from a trained model"),
        ("eval", "evaluate a prediction CSV against ground truth"),
    ]:
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        if name == "eval":
            p.add_argument("--predictions", type=Path)
    return parser


def _require(args, names) -> None:
    for name in names:
        if getattr(args, name, None) is None:
            raise ValidationError(f"--{name.replace('_', '-')} is required")
        if name in ("features", "embeddings", "split", "predictions") and not getattr(
            args, name
        ).exists():
            raise ValidationError(f"{getattr(args, name)}: file not found")


def _load_inputs(args):
    features = data_model.load_features(args.features)
    embeddings = data_model.load_embeddings(
        args.embeddings, normalize=args.normalize_embeddings
    )
    cfg = data_model.load_split_config(args.split)
    if args.mode:
        cfg = data_model.SplitConfig(
            seen=cfg.seen, unseen=cfg.unseen, mode=args.mode,
            shots=cfg.shots, seed=cfg.seed,
        )
    seed = args.seed if args.seed is not None else cfg.seed
    split = data_model.make_split(features, embeddings, cfg, seed=seed)
    return features, embeddings, split, seed


def _pipeline_config(args, seed: int) -> pipeline.PipelineConfig:
    return pipeline.PipelineConfig(
        hyper=TrainHyper(
            learning_rate=args.lr, iterations=args.iters, lambda_s=args.lambda_s
        ),
        metric_hyper=MetricHyper(),
        gzsl_hyper=GzslHyper(lambda_gamma=args.lambda_gamma),
        lambda_u=args.lambda_u,
        support=args.support,
        delta_mode=args.delta_mode,
        seed=seed,
        threads=args.threads,
    )


def cmd_synth(args) -> int:
    _require(args, ["out"])
    cfg = synthgen.PRESETS[args.preset]
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.sigma is not None:
        overrides["noise_sigma"] = args.sigma
    if args.mode is not None:
        overrides["mode"] = args.mode
    overrides["shots"] = args.shots
    cfg = synthgen.SynthConfig(
        **{**cfg.__dict__, **overrides}
    )
    features, embeddings, split = synthgen.generate(cfg)
    args.out.mkdir(parents=True, exist_ok=True)
    data_model.write_features(args.out / "features.csv", features)
    data_model.write_embeddings(args.out / "embeddings.csv", embeddings)
    data_model.write_split_config(
        args.out / "split.txt",
        data_model.SplitConfig(
            seen=split.seen_ids, unseen=split.unseen_ids, mode=cfg.mode,
            shots=cfg.shots, seed=cfg.seed,
        ),
    )
    log.info("wrote dataset to %s", args.out)
    return EXIT_OK


def cmd_train(args) -> int:
    _require(args, ["features", "embeddings", "split", "model"])
    features, embeddings, split, seed = _load_inputs(args)
    model = pipeline.train_model(
        features, embeddings, split, _pipeline_config(args, seed)
    )
    args.model.parent.mkdir(parents=True, exist_ok=True)
    model_io.save_model(args.model, model)
    log.info("wrote model to %s", args.model)
    return EXIT_OK


def write_predictions(path, instance_ids, labels, score_maps) -> None:
    scored = sorted(next(iter(score_maps.values()))) if score_maps else []
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["instance_id", "predicted_class"] + [f"score_{c}" for c in scored]
        )
        for iid, label in zip(instance_ids, labels):
            writer.writerow(
                [iid, label] + [repr(float(score_maps[iid][c])) for c in scored]
            )


def read_predictions(path):
    instance_ids = []
    labels = []
    score_maps = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        scored = [int(h.removeprefix("score_")) for h in header[2:]]
        for row in reader:
            instance_ids.append(row[0])
            labels.append(int(row[1]))
            score_maps[row[0]] = {
                c: float(v) for c, v in zip(scored, row[2:])
            }
    return instance_ids, labels, score_maps


def cmd_predict(args) -> int:
    _require(args, ["features", "embeddings", "split", "model", "out"])
    if not args.model.exists():
        raise ValidationError(f"{args.model}: model file not found")
    features, embeddings, split, _ = _load_inputs(args)
    model = model_io.load_model(args.model)
    ids = pipeline.test_instances(features, split)
    labels, score_maps = pipeline.predict_batch(model, features, ids, split.mode)
    args.out.mkdir(parents=True, exist_ok=True)
    write_predictions(args.out / "predictions.csv", ids, labels, score_maps)
    log.info("wrote predictions for %d instances", len(ids))
    return EXIT_OK


def cmd_eval(args) -> int:
    _require(args, ["features", "embeddings", "split", "predictions", "out"])
    features, embeddings, split, _ = _load_inputs(args)
    ids, labels, score_maps = read_predictions(args.predictions)
    report = pipeline.evaluate(features, split, ids, labels, score_maps)
    args.out.mkdir(parents=True, exist_ok=True)
    lines = [f"top1 = {report.top1!r}"]
    if report.acc_s is not None:
        lines += [
            f"acc_s = {report.acc_s!r}",
            f"acc_u = {report.acc_u!r}",
            f"hm = {report.hm!r}",
        ]
    if report.map_score is not None:
        lines.append(f"map = {report.map_score!r}")
    (args.out / "report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    with open(args.out / "per_class.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class_id", "accuracy"])
        for c in sorted(report.per_class):
            writer.writerow([c, repr(float(report.per_class[c]))])
    for c, curve in report.pr_curves.items():
        with open(args.out / f"pr_{c}.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["recall", "precision"])
            for recall, precision in curve:
                writer.writerow([repr(float(recall)), repr(float(precision))])
    log.info("wrote report to %s", args.out)
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "predict": cmd_predict,
    "eval": cmd_eval,
}


def run(argv) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except SolverError as exc:
        print(f"error: numerical: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except FloatingPointError as exc:
        print(f"error: numerical: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except CapdError as exc:
        print(f"error: validation: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
