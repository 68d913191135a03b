"""Test-time augmentation, simplex-constrained weight fitting, calibration diagnostics."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .classify import PredictionTable
from .corpus import Corpus, Document, Origin
from . import translate as _translate

log = logging.getLogger(__name__)

_EPS = 1e-12
_SIMPLEX_TOL = 1e-9
_TIE_TOL = 1e-12
_MAX_SWEEPS = 500
_SWEEP_TOL = 1e-10


class EnsembleError(Exception):
    pass


@dataclass(frozen=True)
class SimplexWeights:
    weights: Mapping[str, float]

    def __post_init__(self):
        for s, w in self.weights.items():
            if w < 0:
                raise EnsembleError(f"negative weight for source {s!r}: {w}")
        total = sum(self.weights.values())
        if abs(total - 1.0) > _SIMPLEX_TOL:
            raise EnsembleError(f"weights sum to {total}, expected 1")

    def to_json(self, path: str | Path, fitting_set: str = "", loss: float = float("nan")):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(
                {"weights": dict(self.weights), "objective": "logloss",
                 "fitting_set": fitting_set, "loss": loss},
                fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_json(cls, path: str | Path) -> "SimplexWeights":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh)["weights"])


@dataclass
class CalibrationReport:
    frac_confident: float  # share of p outside [0.1, 0.9]
    pred_std: float        # population std of p
    accuracy: Optional[float] = None


def tta_generate(
    corpus: Corpus,
    languages: Sequence[str],
    provider,
    cache: Optional[_translate.TranslationCache] = None,
    splits: Sequence[str] = ("test", "valid"),
) -> Corpus:
    """Append one backtranslated variant per (Test/Valid document, language)."""
    if not languages:
        raise EnsembleError("tta_generate needs a nonempty language list")
    wanted = set(splits)
    variants: list[Document] = []
    skipped = 0
    for doc in corpus:
        if doc.split not in wanted or not doc.is_original:
            continue
        for lang in languages:
            try:
                rec = _translate.backtranslate(doc.text, lang, provider, cache,
                                               parent_id=doc.id)
            except _translate.TranslationError as e:
                skipped += 1
                log.warning("tta: skipped %s via %s: %s", doc.id, lang, e)
                continue
            variants.append(Document(
                id=f"{doc.id}#tta[{lang}]",
                text=rec.final_text,
                label=doc.label,
                split=doc.split,
                origin=Origin(kind="synthetic", technique="bt", lang=lang, parent=doc.id),
            ))
    if skipped:
        log.warning("tta: %d variants skipped", skipped)
    return corpus.with_documents(variants)


def _pred_matrix(preds: PredictionTable, sources: Sequence[str],
                 doc_ids: Sequence[str]) -> np.ndarray:
    gaps = [(d, s) for d in doc_ids for s in sources if preds.get(d, s) is None]
    if gaps:
        shown = ", ".join(f"({d!r}, {s!r})" for d, s in gaps[:10])
        raise EnsembleError(f"missing predictions for {len(gaps)} (doc, source) pairs: {shown}")
    return np.array([[preds.get(d, s) for s in sources] for d in doc_ids], dtype=np.float64)


def combine(preds: PredictionTable, weights: SimplexWeights,
            doc_ids: Sequence[str]) -> PredictionTable:
    """Weighted average of sources per document; output source is "ensemble"."""
    sources = list(weights.weights.keys())
    mat = _pred_matrix(preds, sources, doc_ids)
    wvec = np.array([weights.weights[s] for s in sources])
    combined = mat @ wvec
    out = PredictionTable()
    for d, p in zip(doc_ids, combined):
        out.add(d, "ensemble", min(1.0, max(0.0, float(p))))
    return out


def log_loss(p: np.ndarray, y: np.ndarray) -> float:
    p = np.clip(p, _EPS, 1.0 - _EPS)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def fit_weights(preds: PredictionTable, labels: Mapping[str, str],
                sources: Optional[Sequence[str]] = None) -> SimplexWeights:
    """Simplex weights minimizing mean binary log-loss on the labeled documents.

    Pairwise coordinate descent from the uniform point, with every vertex
    (single-source) solution also evaluated; the returned candidate therefore
    never fits worse than the best single source.  Ties within 1e-12 prefer
    fewer nonzero weights, then earlier source order.  Deterministic.
    """
    sources = list(sources if sources is not None else preds.sources)
    if len(sources) < 2:
        raise EnsembleError("weight fitting needs at least 2 sources")
    doc_ids = [d for d in preds.doc_ids(sources[0]) if d in labels]
    doc_ids = [d for d in doc_ids
               if all(preds.get(d, s) is not None for s in sources)]
    if not doc_ids:
        raise EnsembleError("no labeled documents covered by all sources")
    mat = _pred_matrix(preds, sources, doc_ids)
    y = np.array([1.0 if labels[d] == "pos" else 0.0 for d in doc_ids])

    def loss(w: np.ndarray) -> float:
        return log_loss(mat @ w, y)

    k = len(sources)
    candidates: list[np.ndarray] = []
    for i in range(k):  # vertices, in source order
        v = np.zeros(k)
        v[i] = 1.0
        candidates.append(v)

    w = np.full(k, 1.0 / k)
    current = loss(w)
    for _ in range(_MAX_SWEEPS):
        best_sweep = current
        for i in range(k):
            for j in range(i + 1, k):
                # move mass t from j to i; simplex preserved for t in [-w_i, w_j]
                if w[i] + w[j] <= 0:
                    continue

                def pair_loss(t):
                    trial = w.copy()
                    trial[i] += t
                    trial[j] -= t
                    return loss(trial)

                res = minimize_scalar(pair_loss, bounds=(-w[i], w[j]), method="bounded",
                                      options={"xatol": 1e-12})
                if res.fun < current - _EPS:
                    w[i] += res.x
                    w[j] -= res.x
                    np.clip(w, 0.0, None, out=w)
                    w /= w.sum()
                    current = loss(w)
        if best_sweep - current < _SWEEP_TOL:
            break
    candidates.append(w)

    losses = [loss(c) for c in candidates]
    best = min(losses)
    tied = [c for c, l in zip(candidates, losses) if l <= best + _TIE_TOL]
    tied.sort(key=lambda c: int(np.count_nonzero(c > _EPS)))
    fewest = int(np.count_nonzero(tied[0] > _EPS))
    tied = [c for c in tied if int(np.count_nonzero(c > _EPS)) == fewest]
    chosen = tied[0]  # vertex candidates were generated in source order
    return SimplexWeights({s: float(chosen[i]) for i, s in enumerate(sources)})


def calibration_report(preds: PredictionTable, source: str,
                       labels: Optional[Mapping[str, str]] = None) -> CalibrationReport:
    """Overconfidence fraction, prediction std, and optional accuracy for one source."""
    doc_ids = preds.doc_ids(source)
    if not doc_ids:
        raise EnsembleError(f"no predictions for source {source!r}")
    p = np.array([preds.get(d, source) for d in doc_ids], dtype=np.float64)
    frac_confident = float(np.mean((p < 0.1) | (p > 0.9)))
    pred_std = float(np.std(p))
    accuracy = None
    if labels is not None:
        labeled = [(pp, labels[d]) for pp, d in zip(p, doc_ids) if d in labels]
        if labeled:
            accuracy = float(np.mean([
                (pp >= 0.5) == (lab == "pos") for pp, lab in labeled
            ]))
    return CalibrationReport(frac_confident=frac_confident, pred_std=pred_std,
                             accuracy=accuracy)


def variance_accuracy_table(preds: PredictionTable,
                            labels: Mapping[str, str]) -> list[tuple[str, float, float]]:
    """(source_id, pred_std, accuracy) rows sorted by source_id, for scatter plotting."""
    rows = []
    for source in sorted(preds.sources):
        rep = calibration_report(preds, source, labels)
        if rep.accuracy is None:
            continue
        rows.append((source, rep.pred_std, rep.accuracy))
    if not rows:
        raise EnsembleError("no labeled sources")
    return rows
