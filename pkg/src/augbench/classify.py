"""Hashed bag-of-ngrams logistic regression baseline and prediction tables."""
from __future__ import annotations

import csv
import hashlib
import json
import random
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Callable, Iterable, Optional

import numpy as np

from .augment import tokenize
from .corpus import Corpus

_DATA_DIR = Path(__file__).parent / "data"


class ClassifyError(Exception):
    pass


def _hash_ngram(ngram: str, bits: int) -> int:
    digest = hashlib.blake2b(ngram.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % (1 << bits)


def featurize(text: str, bits: int = 18) -> dict[int, int]:
    """Hashed counts of lowercased 1-grams and 2-grams of the token sequence."""
    tokens = [t.lower() for t in tokenize(text)]
    counts: dict[int, int] = {}
    for i, tok in enumerate(tokens):
        idx = _hash_ngram(tok, bits)
        counts[idx] = counts.get(idx, 0) + 1
        if i + 1 < len(tokens):
            idx = _hash_ngram(tok + " " + tokens[i + 1], bits)
            counts[idx] = counts.get(idx, 0) + 1
    return counts


@dataclass
class TrainConfig:
    bits: int = 18
    epochs: int = 5
    learning_rate: float = 0.1
    lr_decay: str = "linear"  # "linear" | "constant"
    l2: float = 1e-6
    seed: int = 0

    @classmethod
    def from_json(cls, path: str | Path) -> "TrainConfig":
        with open(path, encoding="utf-8") as fh:
            return cls(**json.load(fh))

    @classmethod
    def default(cls) -> "TrainConfig":
        return cls.from_json(_DATA_DIR / "classifier_default.json")


@dataclass
class LinearModel:
    weights: np.ndarray  # dense, length 2**bits
    bias: float
    config: TrainConfig

    def save(self, path: str | Path) -> None:
        np.savez_compressed(
            path,
            weights=self.weights,
            bias=np.float64(self.bias),
            config=json.dumps(asdict(self.config)),
        )

    @classmethod
    def load(cls, path: str | Path) -> "LinearModel":
        data = np.load(path, allow_pickle=False)
        return cls(
            weights=data["weights"],
            bias=float(data["bias"]),
            config=TrainConfig(**json.loads(str(data["config"]))),
        )


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + np.exp(-z))
    e = np.exp(z)
    return e / (1.0 + e)


def train(corpus: Corpus, config: Optional[TrainConfig] = None,
          features: Optional[dict[str, dict[int, int]]] = None) -> LinearModel:
    """Fit logistic regression by seeded single-threaded SGD with lazy L2 decay.

    Byte-identical weights for identical (corpus, config).  `features` may
    carry precomputed featurize() output keyed by doc id.
    """
    config = config or TrainConfig()
    docs = [d for d in corpus.split_docs("train") if d.label in ("pos", "neg")]
    labels = {d.label for d in docs}
    if len(docs) < 2 or labels != {"pos", "neg"}:
        raise ClassifyError("training needs at least 2 documents covering both labels")

    feats = []
    ys = []
    for d in docs:
        f = features.get(d.id) if features else None
        if f is None:
            f = featurize(d.text, config.bits)
        feats.append((np.fromiter(f.keys(), dtype=np.int64, count=len(f)),
                      np.fromiter(f.values(), dtype=np.float64, count=len(f))))
        ys.append(1.0 if d.label == "pos" else 0.0)

    dim = 1 << config.bits
    w = np.zeros(dim, dtype=np.float64)
    bias = 0.0
    scale = 1.0  # lazy L2: effective weights are scale * w
    rng = random.Random(config.seed)
    order = list(range(len(docs)))
    total_steps = config.epochs * len(docs)
    step = 0
    for _ in range(config.epochs):
        rng.shuffle(order)
        for i in order:
            lr = config.learning_rate
            if config.lr_decay == "linear":
                lr *= 1.0 - step / total_steps
            step += 1
            idx, vals = feats[i]
            z = scale * float(w[idx] @ vals) + bias
            g = _sigmoid(z) - ys[i]
            if config.l2 > 0.0 and lr > 0.0:
                scale *= 1.0 - lr * config.l2
                if scale < 1e-9:
                    w *= scale
                    scale = 1.0
            if lr > 0.0:
                w[idx] -= lr * g * vals / scale
                bias -= lr * g
    return LinearModel(weights=w * scale, bias=bias, config=config)


def predict(model: LinearModel, text: str) -> float:
    """P(positive) for a single text: sigmoid of the linear score."""
    f = featurize(text, model.config.bits)
    score = model.bias
    for idx, cnt in f.items():
        score += model.weights[idx] * cnt
    return _sigmoid(score)


def predictor(model: LinearModel) -> Callable[[str], float]:
    return lambda text: predict(model, text)


def evaluate(model: LinearModel, corpus: Corpus, split: str = "test") -> float:
    """Accuracy at threshold 0.5 on a labeled split."""
    docs = [d for d in corpus.split_docs(split) if d.label in ("pos", "neg")]
    if not docs:
        raise ClassifyError(f"no labeled documents in split {split!r}")
    correct = sum(
        1 for d in docs
        if (predict(model, d.text) >= 0.5) == (d.label == "pos")
    )
    return correct / len(docs)


class PredictionTable:
    """Per-document, per-source probabilities of the positive class."""

    def __init__(self):
        self._rows: dict[tuple[str, str], float] = {}
        self._sources: list[str] = []

    def add(self, doc_id: str, source_id: str, p_positive: float) -> None:
        if not 0.0 <= p_positive <= 1.0:
            raise ClassifyError(
                f"probability out of range for ({doc_id!r}, {source_id!r}): {p_positive}"
            )
        if source_id not in self._sources:
            self._sources.append(source_id)
        self._rows[(doc_id, source_id)] = p_positive

    @property
    def sources(self) -> list[str]:
        return list(self._sources)

    def get(self, doc_id: str, source_id: str) -> Optional[float]:
        return self._rows.get((doc_id, source_id))

    def doc_ids(self, source_id: Optional[str] = None) -> list[str]:
        seen: dict[str, None] = {}
        for (d, s) in self._rows:
            if source_id is None or s == source_id:
                seen.setdefault(d)
        return list(seen)

    def merge(self, other: "PredictionTable") -> None:
        for (d, s), p in other._rows.items():
            self.add(d, s, p)

    def __len__(self) -> int:
        return len(self._rows)

    def to_csv(self, path: str | Path, source_id: str) -> None:
        """One source to `doc_id,p_positive` CSV; full-precision probabilities."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("doc_id,p_positive\n")
            for d in self.doc_ids(source_id):
                fh.write(f"{d},{self._rows[(d, source_id)]!r}\n")


def predict_corpus(model: LinearModel, corpus: Corpus, source_id: str,
                   splits: Iterable[str] = ("test",),
                   table: Optional[PredictionTable] = None) -> PredictionTable:
    table = table if table is not None else PredictionTable()
    wanted = set(splits)
    for d in corpus:
        if d.split in wanted:
            table.add(d.id, source_id, predict(model, d.text))
    return table


def import_predictions(path: str | Path, source_id: str) -> PredictionTable:
    """Read a `doc_id,p_positive` CSV produced by an external model."""
    table = PredictionTable()
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["doc_id", "p_positive"]:
            raise ClassifyError(f"{path}: expected header 'doc_id,p_positive'")
        for rownum, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 2:
                raise ClassifyError(f"{path}: malformed row {rownum}")
            try:
                p = float(row[1])
            except ValueError as e:
                raise ClassifyError(f"{path}: bad probability at row {rownum}: {row[1]!r}") from e
            if not 0.0 <= p <= 1.0:
                raise ClassifyError(f"{path}: probability out of range at row {rownum}: {p}")
            table.add(row[0], source_id, p)
    return table
