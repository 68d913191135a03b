"""Low-resource sweep protocol, language studies, TTA pipeline, and report emission."""
from __future__ import annotations

import dataclasses
import hashlib
import logging
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import yaml

from .augment import AugmentSpec, AugTechnique, Thesaurus, bundled_thesaurus, derive_seed
from .classify import (LinearModel, PredictionTable, TrainConfig, predict,
                       predict_corpus, train)
from .corpus import Corpus, CorpusError, carve_validation, subsample_balanced
from .ensemble import (CalibrationReport, SimplexWeights, calibration_report,
                       combine, fit_weights, log_loss, tta_generate,
                       variance_accuracy_table)
from . import translate as _translate

log = logging.getLogger(__name__)

REPORT_COLUMNS = (
    "n", "technique", "languages", "k", "seed", "subsample",
    "accuracy", "error", "frac_confident", "pred_std",
)


class ExperimentError(Exception):
    pass


@dataclass
class ExperimentConfig:
    train_sizes: list[int] = field(default_factory=lambda: [50, 500, 1000, 2000, 5000, 10000])
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2])
    augment: Optional[AugmentSpec] = None
    classifier: TrainConfig = field(default_factory=TrainConfig)
    valid_frac: float = 0.1

    def __post_init__(self):
        if not self.seeds:
            raise ExperimentError("config needs at least one seed")
        if any(n <= 0 for n in self.train_sizes):
            raise ExperimentError("train sizes must be positive")

    @classmethod
    def from_yaml(cls, path: str | Path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
        aug = None
        if raw.get("augment"):
            a = dict(raw["augment"])
            aug = AugmentSpec(
                technique=AugTechnique(a["technique"]),
                alpha=a.get("alpha", 0.1),
                copies_per_original=a.get("copies", 1),
                languages=tuple(a.get("languages", ())),
                language_strategy=a.get("language_strategy", "all"),
                seed=a.get("seed", 0),
            )
        clf = TrainConfig(**raw["classifier"]) if raw.get("classifier") else TrainConfig()
        return cls(
            train_sizes=list(raw.get("train_sizes", [50, 500, 1000, 2000, 5000, 10000])),
            seeds=list(raw.get("seeds", [0, 1, 2])),
            augment=aug,
            classifier=clf,
            valid_frac=raw.get("valid_frac", 0.1),
        )


@dataclass
class ReportRow:
    n: int
    technique: str        # "none" or the technique code
    languages: str        # "-" or "+"-joined codes
    k: int
    seed: str             # run seed as str, or "median"
    subsample: str        # short hash of the sampled train ids
    accuracy: float
    error: float
    frac_confident: float
    pred_std: float

    def as_csv(self) -> str:
        return ",".join([
            str(self.n), self.technique, self.languages, str(self.k), self.seed,
            self.subsample, repr(self.accuracy), repr(self.error),
            repr(self.frac_confident), repr(self.pred_std),
        ])


@dataclass
class ExperimentReport:
    rows: list[ReportRow] = field(default_factory=list)
    timings: list[tuple[str, float]] = field(default_factory=list)  # (run tag, seconds)
    failures: list[tuple[str, str]] = field(default_factory=list)   # (run tag, reason)

    def aggregate(self) -> list[ReportRow]:
        """One median row per (n, technique, languages, k), over the per-seed rows."""
        groups: dict[tuple, list[ReportRow]] = {}
        for r in self.rows:
            if r.seed == "median":
                continue
            groups.setdefault((r.n, r.technique, r.languages, r.k), []).append(r)
        agg = []
        for key in groups:
            rs = groups[key]
            agg.append(ReportRow(
                n=key[0], technique=key[1], languages=key[2], k=key[3],
                seed="median", subsample="-",
                accuracy=statistics.median(r.accuracy for r in rs),
                error=statistics.median(r.error for r in rs),
                frac_confident=statistics.median(r.frac_confident for r in rs),
                pred_std=statistics.median(r.pred_std for r in rs),
            ))
        return agg

    def all_rows(self) -> list[ReportRow]:
        return self.rows + self.aggregate()

    def write_csv(self, path: str | Path) -> None:
        """Deterministic report CSV.  Wall times go to a sidecar timings file."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(REPORT_COLUMNS) + "\n")
            for r in self.all_rows():
                fh.write(r.as_csv() + "\n")

    def write_timings(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("run,wall_time_s\n")
            for tag, secs in self.timings:
                fh.write(f"{tag},{secs:.3f}\n")


def _subsample_hash(corpus: Corpus) -> str:
    h = hashlib.sha256()
    for doc_id in sorted(d.id for d in corpus.split_docs("train") if d.is_original):
        h.update(doc_id.encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()[:12]


def _arm_fields(spec: Optional[AugmentSpec]) -> tuple[str, str, int]:
    if spec is None:
        return "none", "-", 0
    langs = "+".join(spec.languages) if spec.languages else "-"
    if spec.technique is AugTechnique.BACKTRANSLATE and spec.language_strategy.value == "all":
        k = len(spec.languages)
    else:
        k = spec.copies_per_original
    return spec.technique.value, langs, k


def run_single(
    subsampled: Corpus,
    n: int,
    seed: int,
    aug_spec: Optional[AugmentSpec],
    config: ExperimentConfig,
    thesaurus: Optional[Thesaurus] = None,
    provider=None,
    cache=None,
) -> ReportRow:
    """Train and evaluate one (N, augmentation arm, seed) run on a prepared subsample."""
    from .augment import augment_dataset

    sub_hash = _subsample_hash(subsampled)
    prepared = carve_validation(subsampled, config.valid_frac, seed)
    if aug_spec is not None:
        run_spec = dataclasses.replace(aug_spec, seed=derive_seed(aug_spec.seed, "run", seed))
        bt = run_spec.technique is AugTechnique.BACKTRANSLATE
        result = augment_dataset(
            prepared, run_spec,
            thesaurus=None if bt else (thesaurus or bundled_thesaurus()),
            translator=provider if bt else None,
            cache=cache if bt else None,
        )
        prepared = result.corpus
        for doc_id, reason in result.skipped:
            log.warning("augment skipped %s: %s", doc_id, reason)

    clf_config = dataclasses.replace(config.classifier, seed=derive_seed(config.classifier.seed, "train", seed))
    model = train(prepared, clf_config)
    preds = predict_corpus(model, prepared, "baseline", splits=("test",))
    labels = {d.id: d.label for d in prepared.split_docs("test")}
    rep = calibration_report(preds, "baseline", labels)
    technique, langs, k = _arm_fields(aug_spec)
    return ReportRow(
        n=n, technique=technique, languages=langs, k=k, seed=str(seed),
        subsample=sub_hash,
        accuracy=rep.accuracy, error=1.0 - rep.accuracy,
        frac_confident=rep.frac_confident, pred_std=rep.pred_std,
    )


def run_low_resource_sweep(
    config: ExperimentConfig,
    corpus: Corpus,
    thesaurus: Optional[Thesaurus] = None,
    provider=None,
    cache=None,
) -> ExperimentReport:
    """The paper protocol: subsample, optionally augment, train, test; median over seeds."""
    report = ExperimentReport()
    for n in config.train_sizes:
        for seed in config.seeds:
            tag = f"n={n},seed={seed}"
            t0 = time.monotonic()
            try:
                sub = subsample_balanced(corpus, n, seed)
                row = run_single(sub, n, seed, config.augment, config,
                                 thesaurus=thesaurus, provider=provider, cache=cache)
                report.rows.append(row)
            except (CorpusError, ExperimentError, _translate.TranslationError) as e:
                log.error("run %s failed: %s", tag, e)
                report.failures.append((tag, str(e)))
            report.timings.append((tag, time.monotonic() - t0))
    return report


def run_language_study(
    base_n: int,
    language_sets: Sequence[Sequence[str]],
    config: ExperimentConfig,
    corpus: Corpus,
    provider,
    cache=None,
) -> ExperimentReport:
    """Backtranslation arms over several language sets, sharing subsamples per seed."""
    if config.augment is None or config.augment.technique is not AugTechnique.BACKTRANSLATE:
        base_aug = AugmentSpec(technique=AugTechnique.BACKTRANSLATE, languages=("es",))
    else:
        base_aug = config.augment
    report = ExperimentReport()
    for seed in config.seeds:
        sub = subsample_balanced(corpus, base_n, seed)
        for langs in language_sets:
            tag = f"n={base_n},seed={seed},langs={'+'.join(langs)}"
            t0 = time.monotonic()
            try:
                arm = dataclasses.replace(base_aug, languages=tuple(langs))
                row = run_single(sub, base_n, seed, arm, config,
                                 provider=provider, cache=cache)
                report.rows.append(row)
            except (CorpusError, ExperimentError, _translate.TranslationError) as e:
                log.error("run %s failed: %s", tag, e)
                report.failures.append((tag, str(e)))
            report.timings.append((tag, time.monotonic() - t0))
    return report


@dataclass
class TtaResult:
    predictions: PredictionTable
    weights: SimplexWeights
    combined: PredictionTable
    calibration: dict[str, CalibrationReport]
    variance_rows: list[tuple[str, float, float]]
    valid_losses: dict[str, float]


def run_tta_pipeline(
    corpus: Corpus,
    languages: Sequence[str],
    provider,
    cache=None,
    model: Optional[LinearModel] = None,
    base_preds: Optional[PredictionTable] = None,
    base_source: str = "baseline",
) -> TtaResult:
    """Backtranslate test/valid docs, predict per variant, fit weights on valid,
    combine on test, and emit calibration/variance diagnostics.

    Predictions come either from the built-in `model` or an imported
    `base_preds` table that already covers originals (variants then reuse the
    parent's prediction only if the model is absent).
    """
    if model is None and base_preds is None:
        raise ExperimentError("run_tta_pipeline needs a model or imported predictions")
    augmented = tta_generate(corpus, languages, provider, cache)

    preds = PredictionTable()
    originals = [d for d in augmented
                 if d.is_original and d.split in ("test", "valid")]
    for d in originals:
        if base_preds is not None:
            p = base_preds.get(d.id, base_source)
            if p is None:
                raise ExperimentError(f"imported predictions missing document {d.id!r}")
        else:
            p = predict(model, d.text)
        preds.add(d.id, base_source, p)

    variant_text: dict[tuple[str, str], str] = {}
    for d in augmented:
        if d.origin.kind == "synthetic" and d.origin.technique == "bt" and "#tta[" in d.id:
            variant_text[(d.origin.parent, d.origin.lang)] = d.text

    for lang in languages:
        source = f"tta:{lang}"
        for d in originals:
            imported = base_preds.get(d.id, source) if base_preds is not None else None
            text = variant_text.get((d.id, lang))
            if imported is not None:
                preds.add(d.id, source, imported)
            elif text is not None and model is not None:
                preds.add(d.id, source, predict(model, text))
            else:
                # skipped translation or no per-variant source: fall back to
                # the parent's own prediction
                log.warning("tta: no %s prediction for %s; using parent prediction",
                            lang, d.id)
                preds.add(d.id, source, preds.get(d.id, base_source))

    labels = {d.id: d.label for d in originals}
    valid_ids = [d.id for d in originals if d.split == "valid"]
    test_ids = [d.id for d in originals if d.split == "test"]
    if not valid_ids:
        raise ExperimentError("TTA weight fitting needs a valid split")
    weights = fit_weights(preds, {i: labels[i] for i in valid_ids}, preds.sources)
    combined = combine(preds, weights, test_ids)

    valid_losses = {}
    for s in preds.sources:
        p = np.array([preds.get(i, s) for i in valid_ids])
        y = np.array([1.0 if labels[i] == "pos" else 0.0 for i in valid_ids])
        valid_losses[s] = log_loss(p, y)
    wvec = np.array([[preds.get(i, s) for s in preds.sources] for i in valid_ids])
    warr = np.array([weights.weights[s] for s in preds.sources])
    valid_losses["ensemble"] = log_loss(
        wvec @ warr,
        np.array([1.0 if labels[i] == "pos" else 0.0 for i in valid_ids]),
    )

    all_preds = PredictionTable()
    all_preds.merge(preds)
    all_preds.merge(combined)
    calibration = {
        s: calibration_report(all_preds, s, labels) for s in all_preds.sources
    }
    variance_rows = variance_accuracy_table(all_preds, labels)
    return TtaResult(
        predictions=all_preds,
        weights=weights,
        combined=combined,
        calibration=calibration,
        variance_rows=variance_rows,
        valid_losses=valid_losses,
    )
