"""Sentence-level sentiment regressions and the rating-string numeracy probe."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

FEATURE_NAMES = ("last", "first", "avg", "max", "min", "len")

_ABBREVIATIONS = frozenset({
    "mr", "mrs", "ms", "dr", "st", "jr", "sr", "prof", "vs", "etc", "e.g", "i.e",
    "inc", "ltd", "co", "dept", "approx", "no",
})

_BOUNDARY = re.compile(r"[.!?]+(?=\s)")


class AnalyzeError(Exception):
    pass


def split_sentences(text: str) -> list[str]:
    """Split at sentence-final punctuation followed by whitespace.

    A short abbreviation guard suppresses splits after e.g. "Mr." or "vs.".
    The whole text is one sentence when no boundary is found.  Concatenating
    the sentences preserves the text's non-whitespace characters in order.
    """
    sentences = []
    start = 0
    for m in _BOUNDARY.finditer(text):
        prev = text[start:m.start()]
        last_word = prev.split()[-1].lower() if prev.split() else ""
        last_word = last_word.rstrip(".").lstrip("(\"'")
        if last_word in _ABBREVIATIONS:
            continue
        sentences.append(text[start:m.end()].strip())
        start = m.end()
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    if not sentences:
        return [text]
    return sentences


@dataclass
class SentenceFeatures:
    """Raw (pre-standardization) summary stats of per-sentence sentiment scores."""
    last: float
    first: float
    avg: float
    max: float
    min: float
    len: float

    def as_array(self) -> np.ndarray:
        return np.array([self.last, self.first, self.avg, self.max, self.min, self.len])


def sentence_features(text: str, predict_fn: Callable[[str], float]) -> SentenceFeatures:
    """Score each sentence with predict_fn and summarize the resulting vector."""
    if not text.strip():
        raise AnalyzeError("cannot extract sentence features from empty text")
    scores = [predict_fn(s) for s in split_sentences(text)]
    return SentenceFeatures(
        last=scores[-1],
        first=scores[0],
        avg=float(np.mean(scores)),
        max=float(np.max(scores)),
        min=float(np.min(scores)),
        len=float(len(scores)),
    )


def standardize(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Zero-mean unit-variance columns; constant columns become all-zero."""
    rows = np.asarray(rows, dtype=np.float64)
    means = rows.mean(axis=0)
    stds = rows.std(axis=0)
    safe = np.where(stds > 0, stds, 1.0)
    return (rows - means) / safe, means, stds


@dataclass
class RegressionFit:
    coefficients: np.ndarray
    intercept: float
    l1_strength: float
    target_kind: str  # "true_label" | "model_prediction"
    feature_names: tuple[str, ...] = FEATURE_NAMES

    def as_dict(self) -> dict:
        return {
            "coefficients": {n: float(c) for n, c in zip(self.feature_names,
                                                         self.coefficients)},
            "intercept": float(self.intercept),
            "l1_strength": float(self.l1_strength),
            "target_kind": self.target_kind,
        }


def _soft_threshold(x: float, t: float) -> float:
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


def fit_l1_logistic(
    X: np.ndarray,
    y: np.ndarray,
    l1_strength: float,
    target_kind: str = "true_label",
    max_sweeps: int = 1000,
    tol: float = 1e-10,
) -> RegressionFit:
    """L1-penalized logistic regression by proximal coordinate descent.

    Minimizes mean logistic loss + l1_strength * sum(|w|) (intercept
    unpenalized) with soft-thresholding updates, so irrelevant coefficients
    land on literal zeros.  Deterministic: fixed coordinate order, fixed
    sweep cap.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if set(np.unique(y)) != {0.0, 1.0}:
        raise AnalyzeError("targets must contain both classes (0 and 1)")
    n, d = X.shape
    # curvature bound for logistic loss: 0.25 * mean(x_j^2)
    lips = 0.25 * np.mean(X ** 2, axis=0)
    lips = np.where(lips > 0, lips, 0.25)

    w = np.zeros(d)
    b = 0.0
    z = np.zeros(n)
    for _ in range(max_sweeps):
        p = 1.0 / (1.0 + np.exp(-z))
        delta_b = -float(np.mean(p - y)) / 0.25
        b += delta_b
        z += delta_b
        max_change = abs(delta_b)
        for j in range(d):
            p = 1.0 / (1.0 + np.exp(-z))
            grad = float(np.mean(X[:, j] * (p - y)))
            new_wj = _soft_threshold(w[j] - grad / lips[j], l1_strength / lips[j])
            delta = new_wj - w[j]
            if delta != 0.0:
                z += delta * X[:, j]
                w[j] = new_wj
                max_change = max(max_change, abs(delta))
        if max_change < tol:
            break
    return RegressionFit(coefficients=w, intercept=b, l1_strength=l1_strength,
                         target_kind=target_kind)


def cross_validate_l1(
    X: np.ndarray,
    y: np.ndarray,
    grid: Sequence[float] = (0.0001, 0.001, 0.01, 0.1, 1.0),
    folds: int = 5,
    se_multiplier: float = 0.0,
) -> float:
    """Pick l1_strength by k-fold cross-validated log-loss; deterministic folds.

    With se_multiplier == 0 the minimizer of the mean held-out loss wins.
    With se_multiplier = k > 0 this applies the k-standard-error rule: among
    penalties whose mean loss is within k standard errors of the minimum,
    take the largest, trading a little fit for a sparser model.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = len(y)
    rng = np.random.RandomState(0)
    order = rng.permutation(n)
    assignment = np.empty(n, dtype=np.int64)
    assignment[order] = np.arange(n) % folds

    stats = {}
    for lam in grid:
        losses = []
        for f in range(folds):
            tr, te = assignment != f, assignment == f
            if len(np.unique(y[tr])) < 2 or te.sum() == 0:
                continue
            fit = fit_l1_logistic(X[tr], y[tr], lam, max_sweeps=300)
            z = X[te] @ fit.coefficients + fit.intercept
            p = np.clip(1.0 / (1.0 + np.exp(-z)), 1e-12, 1 - 1e-12)
            losses.append(float(-np.mean(y[te] * np.log(p) + (1 - y[te]) * np.log(1 - p))))
        if losses:
            stats[lam] = (float(np.mean(losses)), float(np.std(losses) / np.sqrt(len(losses))))
    if not stats:
        raise AnalyzeError("cross-validation found no usable fold split")
    best = min(stats, key=lambda lam: stats[lam][0])
    if se_multiplier <= 0:
        return best
    threshold = stats[best][0] + se_multiplier * stats[best][1]
    return max(lam for lam in stats if stats[lam][0] <= threshold)


def build_feature_matrix(
    texts: Sequence[str], predict_fn: Callable[[str], float]
) -> np.ndarray:
    return np.array([sentence_features(t, predict_fn).as_array() for t in texts])


RATING_POINTS = (0, 1, 2, 3, 4, 5, 6, 6.5, 7, 8, 9, 10)


def numeracy_probe(
    predict_fn: Callable[[str], float],
    template: str = "Rating {}/10",
) -> list[tuple[str, float]]:
    """Evaluate the model on "Rating x/10" strings for x in 0..10 plus 6.5."""
    if template.count("{}") != 1:
        raise AnalyzeError("template must contain exactly one {} slot")
    rows = []
    for x in RATING_POINTS:
        label = str(int(x)) if float(x).is_integer() else str(x)
        rows.append((label, float(predict_fn(template.format(label)))))
    return rows
