"""Dataset types, CSV ingestion and experiment split construction.

File schemas
------------
features CSV:   header ``instance_id,class_id,f0,...,f{k-1}``
embeddings CSV: header ``class_id,e0,...,e{d-1}``
split config:   ``key = value`` lines with keys ``seen``, ``unseen``
                (bracketed integer lists), ``mode`` (zsl|gzsl|fsl|osl),
                ``shots`` and ``seed`` (integers).

All types are immutable after construction and safe to share across
threads.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, ParseError, ValidationError

MODES = ("zsl", "gzsl", "fsl", "osl")


@dataclass(frozen=True)
class FeatureTable:
    """Labeled visual feature vectors, one row per instance."""

    instance_ids: tuple[str, ...]
    class_ids: tuple[int, ...]
    x: np.ndarray  # (n, k) float64

    def __post_init__(self):
        if self.x.ndim != 2 or self.x.shape[0] != len(self.instance_ids):
            raise ValidationError("feature matrix shape does not match instance list")
        if len(self.class_ids) != len(self.instance_ids):
            raise ValidationError("class_ids length does not match instance list")
        if self.x.shape[1] < 1:
            raise ValidationError("feature dimension k must be >= 1")
        if len(set(self.instance_ids)) != len(self.instance_ids):
            raise ValidationError("duplicate instance_id")
        if any(c < 1 for c in self.class_ids):
            raise ValidationError("class ids must be positive integers")
        self.x.setflags(write=False)

    @property
    def k(self) -> int:
        return self.x.shape[1]

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def index_of(self, instance_id: str) -> int:
        try:
            return self._index[instance_id]
        except AttributeError:
            object.__setattr__(
                self, "_index", {iid: i for i, iid in enumerate(self.instance_ids)}
            )
            return self._index[instance_id]

    def instances_of_class(self, class_id: int) -> list[str]:
        return [
            iid
            for iid, cid in zip(self.instance_ids, self.class_ids)
            if cid == class_id
        ]


@dataclass(frozen=True)
class EmbeddingTable:
    """Per-class semantic embedding vectors, keyed by class id."""

    entries: dict[int, np.ndarray]

    def __post_init__(self):
        if not self.entries:
            raise ValidationError("embedding table is empty")
        dims = {v.shape for v in self.entries.values()}
        if len(dims) != 1 or next(iter(dims))[0] < 1:
            raise ValidationError("all embeddings must share one dimension d >= 1")
        for cid, v in self.entries.items():
            if cid < 1:
                raise ValidationError("class ids must be positive integers")
            if not np.any(v):
                raise ValidationError(f"class {cid} has an all-zero embedding")
            v.setflags(write=False)

    @property
    def d(self) -> int:
        return next(iter(self.entries.values())).shape[0]

    def matrix(self, class_ids) -> np.ndarray:
        """Stack embeddings as columns: shape (d, len(class_ids))."""
        return np.column_stack([self.entries[c] for c in class_ids])


@dataclass(frozen=True)
class SplitConfig:
    seen: tuple[int, ...]
    unseen: tuple[int, ...]
    mode: str = "zsl"
    shots: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"unknown mode {self.mode!r}")
        if set(self.seen) & set(self.unseen):
            raise ValidationError("seen and unseen class lists overlap")
        if self.shots < 1:
            raise ValidationError("shots must be >= 1")


@dataclass(frozen=True)
class ExperimentSplit:
    """Seen/unseen class partition plus train/test instance assignments."""

    seen_ids: tuple[int, ...]
    unseen_ids: tuple[int, ...]
    seen_train: tuple[str, ...]
    seen_test: tuple[str, ...]
    fsl_shots: dict[int, tuple[str, ...]] = field(default_factory=dict)
    seed: int = 0
    mode: str = "zsl"

    def __post_init__(self):
        if set(self.seen_ids) & set(self.unseen_ids):
            raise ValidationError("seen_ids and unseen_ids overlap")
        if set(self.seen_train) & set(self.seen_test):
            raise ValidationError("seen_train and seen_test overlap")
        for u in self.fsl_shots:
            if u not in self.unseen_ids:
                raise ValidationError(f"fsl_shots keyed by non-unseen class {u}")


def _parse_float(cell: str, path, line_no: int) -> float:
    try:
        return float(cell)
    except ValueError:
        raise ParseError(
            f"{path}: non-numeric cell {cell!r} at line {line_no}"
        ) from None


def _parse_class_id(cell: str, path, line_no: int) -> int:
    try:
        cid = int(cell)
    except ValueError:
        raise ParseError(
            f"{path}: non-integer class id {cell!r} at line {line_no}"
        ) from None
    return cid


def load_features(path) -> FeatureTable:
    """Read a features CSV; row order is preserved."""
    instance_ids: list[str] = []
    seen_ids: set[str] = set()
    class_ids: list[int] = []
    rows: list[list[float]] = []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            next(reader)  # header
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 3:
                raise FormatError(f"{path}: row too short at line {line_no}")
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise FormatError(
                    f"{path}: ragged row at line {line_no} "
                    f"(expected {width} fields, got {len(row)})"
                )
            iid = row[0]
            if iid in seen_ids:
                raise ValidationError(
                    f"{path}: duplicate instance_id {iid!r} at line {line_no}"
                )
            seen_ids.add(iid)
            instance_ids.append(iid)
            class_ids.append(_parse_class_id(row[1], path, line_no))
            rows.append([_parse_float(c, path, line_no) for c in row[2:]])
    if not rows:
        raise FormatError(f"{path}: no data rows")
    return FeatureTable(
        instance_ids=tuple(instance_ids),
        class_ids=tuple(class_ids),
        x=np.array(rows, dtype=np.float64),
    )


def load_embeddings(path, normalize: bool = False) -> EmbeddingTable:
    """Read an embeddings CSV, optionally l2-normalizing each vector.

    Normalization is off by default (attribute vectors); turn it on for
    corpus-derived word vectors.
    """
    entries: dict[int, np.ndarray] = {}
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 2:
                raise FormatError(f"{path}: row too short at line {line_no}")
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise FormatError(
                    f"{path}: ragged row at line {line_no} "
                    f"(expected {width} fields, got {len(row)})"
                )
            cid = _parse_class_id(row[0], path, line_no)
            if cid in entries:
                raise ValidationError(
                    f"{path}: duplicate class_id {cid} at line {line_no}"
                )
            vec = np.array(
                [_parse_float(c, path, line_no) for c in row[1:]], dtype=np.float64
            )
            if not np.any(vec):
                raise ValidationError(f"{path}: zero embedding at line {line_no}")
            if normalize:
                vec = vec / np.linalg.norm(vec)
            entries[cid] = vec
    if not entries:
        raise FormatError(f"{path}: no data rows")
    return EmbeddingTable(entries=entries)


def write_features(path, table: FeatureTable) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["instance_id", "class_id"] + [f"f{i}" for i in range(table.k)]
        )
        for iid, cid, row in zip(table.instance_ids, table.class_ids, table.x):
            writer.writerow([iid, cid] + [repr(float(v)) for v in row])


def write_embeddings(path, table: EmbeddingTable) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class_id"] + [f"e{i}" for i in range(table.d)])
        for cid in sorted(table.entries):
            writer.writerow([cid] + [repr(float(v)) for v in table.entries[cid]])


def load_split_config(path) -> SplitConfig:
    """Parse the key-value split config file."""
    kv: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise FormatError(f"{path}: expected 'key = value' at line {line_no}")
            key, value = line.split("=", 1)
            kv[key.strip()] = value.strip()

    def parse_id_list(text: str) -> tuple[int, ...]:
        text = text.strip()
        if not (text.startswith("[") and text.endswith("]")):
            raise FormatError(f"{path}: expected a bracketed list, got {text!r}")
        body = text[1:-1].strip()
        if not body:
            return ()
        try:
            return tuple(int(tok.strip()) for tok in body.split(","))
        except ValueError:
            raise ParseError(f"{path}: non-integer id in {text!r}") from None

    missing = {"seen", "unseen"} - kv.keys()
    if missing:
        raise FormatError(f"{path}: missing keys {sorted(missing)}")
    try:
        shots = int(kv.get("shots", "3"))
        seed = int(kv.get("seed", "0"))
    except ValueError:
        raise ParseError(f"{path}: shots and seed must be integers") from None
    return SplitConfig(
        seen=parse_id_list(kv["seen"]),
        unseen=parse_id_list(kv["unseen"]),
        mode=kv.get("mode", "zsl"),
        shots=shots,
        seed=seed,
    )


def write_split_config(path, cfg: SplitConfig) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"seen = [{', '.join(str(c) for c in cfg.seen)}]\n")
        fh.write(f"unseen = [{', '.join(str(c) for c in cfg.unseen)}]\n")
        fh.write(f"mode = {cfg.mode}\n")
        fh.write(f"shots = {cfg.shots}\n")
        fh.write(f"seed = {cfg.seed}\n")


def _rng_for(seed: int, class_id: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, class_id]))


def make_split(
    features: FeatureTable,
    embeddings: EmbeddingTable,
    cfg: SplitConfig,
    seed: int | None = None,
) -> ExperimentSplit:
    """Build the train/test partition for the configured mode.

    GZSL holds out ceil(0.8 * n) instances of each seen class for training
    (stratified per class) and the rest for testing.  FSL/OSL draw the shot
    lists uniformly without replacement with a generator keyed by
    (seed, class_id), so identical inputs and seed give identical splits.
    """
    if seed is None:
        seed = cfg.seed
    present = set(features.class_ids)
    for cid in list(cfg.seen) + list(cfg.unseen):
        if cid not in present:
            raise ValidationError(f"class {cid} has no instances in the feature table")
        if cid not in embeddings.entries:
            raise ValidationError(f"class {cid} has no embedding")

    seen_train: list[str] = []
    seen_test: list[str] = []
    for cid in cfg.seen:
        inst = features.instances_of_class(cid)
        if cfg.mode == "gzsl":
            if len(inst) < 2:
                raise ValidationError(
                    f"seen class {cid} has fewer than 2 instances in GZSL mode"
                )
            order = _rng_for(seed, cid).permutation(len(inst))
            n_train = math.ceil(0.8 * len(inst))
            seen_train.extend(inst[i] for i in sorted(order[:n_train]))
            seen_test.extend(inst[i] for i in sorted(order[n_train:]))
        else:
            seen_train.extend(inst)

    fsl_shots: dict[int, tuple[str, ...]] = {}
    if cfg.mode in ("fsl", "osl"):
        n_shots = 1 if cfg.mode == "osl" else cfg.shots
        for cid in cfg.unseen:
            inst = features.instances_of_class(cid)
            if n_shots > len(inst):
                raise ValidationError(
                    f"shot count {n_shots} exceeds the {len(inst)} instances "
                    f"of unseen class {cid}"
                )
            chosen = _rng_for(seed, cid).choice(len(inst), size=n_shots, replace=False)
            fsl_shots[cid] = tuple(inst[i] for i in sorted(chosen))

    return ExperimentSplit(
        seen_ids=tuple(cfg.seen),
        unseen_ids=tuple(cfg.unseen),
        seen_train=tuple(seen_train),
        seen_test=tuple(seen_test),
        fsl_shots=fsl_shots,
        seed=seed,
        mode=cfg.mode,
    )
