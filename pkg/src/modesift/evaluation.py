"""Corpus evaluation: folds, metrics, reference classifier, experiment runs.

A corpus is a CSV manifest (sample_id, subject_id, label, path). Protocols:
leave-one-subject-out (one fold per subject, subjects in sorted order) and
leave-one-video-out (one fold per sample, manifest order). Per-class recall,
precision and F1 follow the usual confusion-count definitions with zero
denominators scoring zero; accuracy is total hits over total samples and
macro scores are unweighted class means.

The reference classifier is one-vs-rest kernel ridge regression with the
Gaussian kernel k(x, y) = exp(-0.5 ||x - y||^2) and ridge 1e-4, predicting
the class of the largest score (ties to the lexicographically smallest
label). It is deterministic and dependency-free; any object with the same
fit/predict surface can replace it.

run_experiment chains sampling -> optional resize -> descriptor -> folds ->
classifier -> scoring. Per-sample failures are reported, not fatal. Given
one config and seed the report is byte-identical at any thread count.
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import (
    EmptyClassError,
    InsufficientSamplesError,
    InsufficientSubjectsError,
    LabelOutsideClassSetError,
    ModesiftError,
)
from .features import LbptopConfig, lbptop
from .sampling import SamplingConfig, apply_strategy, derive_seed
from .seqio import load_sequence, resize

logger = logging.getLogger(__name__)

MANIFEST_HEADER = "sample_id,subject_id,label,path"

PROTOCOLS = ("loso", "lovo")


@dataclass(frozen=True)
class ManifestEntry:
    sample_id: str
    subject_id: str
    label: str
    path: str


@dataclass(frozen=True)
class CorpusManifest:
    entries: tuple[ManifestEntry, ...]

    def __post_init__(self):
        entries = tuple(self.entries)
        seen = set()
        for e in entries:
            if e.sample_id in seen:
                raise ValueError(f"duplicate sample_id {e.sample_id!r}")
            seen.add(e.sample_id)
        object.__setattr__(self, "entries", entries)

    @property
    def class_set(self) -> tuple[str, ...]:
        return tuple(sorted({e.label for e in self.entries}))

    @property
    def subjects(self) -> tuple[str, ...]:
        return tuple(sorted({e.subject_id for e in self.entries}))

    def __len__(self) -> int:
        return len(self.entries)


def read_manifest(path) -> CorpusManifest:
    """Parse a manifest CSV; the header line must match exactly."""
    text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != MANIFEST_HEADER:
        raise ValueError(f"{path}: first line must be {MANIFEST_HEADER!r}")
    entries = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 4:
            raise ValueError(f"{path}: malformed row {ln!r}")
        entries.append(ManifestEntry(*[p.strip() for p in parts]))
    return CorpusManifest(entries=tuple(entries))


def write_manifest(manifest: CorpusManifest, path) -> None:
    lines = [MANIFEST_HEADER]
    for e in manifest.entries:
        lines.append(f"{e.sample_id},{e.subject_id},{e.label},{e.path}")
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass(frozen=True)
class Fold:
    name: str
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]


def make_folds(manifest: CorpusManifest, protocol: str) -> list[Fold]:
    """Cross-validation folds; together the test sets partition the corpus.

    loso: one fold per subject in sorted subject order (needs >= 2 subjects).
    lovo: one fold per sample in manifest order (needs >= 2 samples).
    """
    if protocol == "loso":
        subjects = manifest.subjects
        if len(subjects) < 2:
            raise InsufficientSubjectsError(
                f"leave-one-subject-out needs >= 2 subjects, got {len(subjects)}"
            )
        folds = []
        for subject in subjects:
            test = tuple(e.sample_id for e in manifest.entries if e.subject_id == subject)
            train = tuple(e.sample_id for e in manifest.entries if e.subject_id != subject)
            folds.append(Fold(name=subject, train_ids=train, test_ids=test))
        return folds
    if protocol == "lovo":
        if len(manifest) < 2:
            raise InsufficientSamplesError(
                f"leave-one-video-out needs >= 2 samples, got {len(manifest)}"
            )
        return [
            Fold(
                name=e.sample_id,
                train_ids=tuple(x.sample_id for x in manifest.entries if x.sample_id != e.sample_id),
                test_ids=(e.sample_id,),
            )
            for e in manifest.entries
        ]
    raise ValueError(f"unknown protocol {protocol!r}, expected one of {PROTOCOLS}")


@dataclass(frozen=True)
class ClassMetrics:
    tp: int
    fp: int
    fn: int
    recall: float
    precision: float
    f1: float


@dataclass(frozen=True)
class MetricsReport:
    per_class: tuple[tuple[str, ClassMetrics], ...]
    macro_recall: float
    macro_precision: float
    macro_f1: float
    accuracy: float
    n_samples: int

    def to_dict(self) -> dict:
        return {
            "per_class": {
                label: {
                    "tp": m.tp, "fp": m.fp, "fn": m.fn,
                    "recall": m.recall, "precision": m.precision, "f1": m.f1,
                }
                for label, m in self.per_class
            },
            "macro_recall": self.macro_recall,
            "macro_precision": self.macro_precision,
            "macro_f1": self.macro_f1,
            "accuracy": self.accuracy,
            "n_samples": self.n_samples,
        }


def score(true_labels, predicted_labels, class_set) -> MetricsReport:
    """Confusion-count metrics over parallel label lists.

    Per class: recall tp/(tp+fn), precision tp/(tp+fp), F1 their harmonic
    mean; each is 0 when its denominator is 0. Accuracy is total tp over
    total samples; macro scores average classes unweighted.
    """
    true_labels = list(true_labels)
    predicted_labels = list(predicted_labels)
    if len(true_labels) != len(predicted_labels):
        raise ValueError(
            f"{len(true_labels)} true vs {len(predicted_labels)} predicted labels"
        )
    class_set = tuple(class_set)
    known = set(class_set)
    for lab in true_labels:
        if lab not in known:
            raise LabelOutsideClassSetError(f"true label {lab!r} not in class set")
    for lab in predicted_labels:
        if lab not in known:
            raise LabelOutsideClassSetError(f"predicted label {lab!r} not in class set")
    per_class = []
    for cls in class_set:
        tp = sum(1 for t, p in zip(true_labels, predicted_labels) if t == cls and p == cls)
        fp = sum(1 for t, p in zip(true_labels, predicted_labels) if t != cls and p == cls)
        fn = sum(1 for t, p in zip(true_labels, predicted_labels) if t == cls and p != cls)
        recall = tp / (tp + fn) if tp + fn else 0.0
        precision = tp / (tp + fp) if tp + fp else 0.0
        f1 = 2 * recall * precision / (recall + precision) if recall + precision else 0.0
        per_class.append((cls, ClassMetrics(tp, fp, fn, recall, precision, f1)))
    n = len(true_labels)
    total_tp = sum(m.tp for _, m in per_class)
    return MetricsReport(
        per_class=tuple(per_class),
        macro_recall=float(np.mean([m.recall for _, m in per_class])) if per_class else 0.0,
        macro_precision=float(np.mean([m.precision for _, m in per_class])) if per_class else 0.0,
        macro_f1=float(np.mean([m.f1 for _, m in per_class])) if per_class else 0.0,
        accuracy=total_tp / n if n else 0.0,
        n_samples=n,
    )


def _sqdist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = (a * a).sum(axis=1)[:, None] + (b * b).sum(axis=1)[None, :] - 2.0 * a @ b.T
    return np.maximum(d, 0.0)


class KernelRidgeClassifier:
    """One-vs-rest Gaussian kernel ridge; deterministic reference model.

    Scores s_c(x) = k(x, X) dual_c with dual solving (K + lam I) dual = T,
    T in {-1, +1}. Prediction is the argmax class; exact ties go to the
    lexicographically smallest label (classes are kept sorted).
    """

    def __init__(self, kernel_gamma: float = 0.5, ridge: float = 1e-4):
        self.kernel_gamma = kernel_gamma
        self.ridge = ridge
        self.classes: tuple[str, ...] = ()
        self._train: np.ndarray | None = None
        self._dual: np.ndarray | None = None

    def fit(self, features: np.ndarray, labels) -> "KernelRidgeClassifier":
        features = np.asarray(features, dtype=np.float64)
        labels = list(labels)
        if features.ndim != 2 or len(labels) != features.shape[0]:
            raise ValueError("features must be (n, d) with one label per row")
        if not labels:
            raise EmptyClassError("classifier received no training samples")
        self.classes = tuple(sorted(set(labels)))
        targets = np.full((len(labels), len(self.classes)), -1.0)
        index = {c: i for i, c in enumerate(self.classes)}
        for row, lab in enumerate(labels):
            targets[row, index[lab]] = 1.0
        kernel = np.exp(-self.kernel_gamma * _sqdist(features, features))
        kernel[np.diag_indices_from(kernel)] += self.ridge
        self._dual = np.linalg.solve(kernel, targets)
        self._train = features
        return self

    def predict(self, features: np.ndarray) -> list[str]:
        if self._train is None:
            raise ValueError("classifier is not fitted")
        features = np.asarray(features, dtype=np.float64)
        scores = np.exp(-self.kernel_gamma * _sqdist(features, self._train)) @ self._dual
        return [self.classes[i] for i in np.argmax(scores, axis=1)]


@dataclass(frozen=True)
class ExperimentReport:
    protocol: str
    pooled: MetricsReport
    per_fold: tuple[tuple[str, MetricsReport], ...]
    fold_mean: dict
    predictions: tuple[tuple[str, str, str], ...]  # (sample_id, true, predicted)
    failures: tuple[tuple[str, str], ...]  # (sample_id or fold name, message)
    metadata: dict

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "aggregation": "pooled confusion counts across folds; fold_mean averages per-fold scores",
            "pooled": self.pooled.to_dict(),
            "per_fold": {name: rep.to_dict() for name, rep in self.per_fold},
            "fold_mean": self.fold_mean,
            "predictions": [list(p) for p in self.predictions],
            "failures": [list(f) for f in self.failures],
            "metadata": self.metadata,
        }


def resolve_threads(threads: int | None) -> int:
    """Worker count: explicit arg, else MODESIFT_THREADS, else cpu count."""
    env = os.environ.get("MODESIFT_THREADS")
    if env:
        return max(1, int(env))
    if threads and threads > 0:
        return threads
    return max(1, os.cpu_count() or 1)


def run_experiment(
    manifest: CorpusManifest,
    sampling_cfg: SamplingConfig,
    lbptop_cfg: LbptopConfig,
    protocol: str = "loso",
    *,
    classifier_factory=KernelRidgeClassifier,
    resize_to: tuple[int, int] | None = None,
    seed: int = 0,
    threads: int | None = None,
) -> ExperimentReport:
    """Sample, describe, cross-validate and score a whole corpus.

    Per-sample pipeline failures (and per-fold training failures) are
    collected into the report; surviving samples are still evaluated. The
    report depends only on the manifest, configs and seed.
    """
    n_workers = resolve_threads(threads)
    entries = list(manifest.entries)

    def extract(entry: ManifestEntry) -> np.ndarray:
        seq = load_sequence(entry.path, source_id=entry.sample_id)
        cfg = replace(sampling_cfg, seed=derive_seed(seed, entry.sample_id))
        sampled, _info = apply_strategy(cfg, seq)
        if resize_to is not None:
            sampled = resize(sampled, resize_to[0], resize_to[1])
        return lbptop(sampled, lbptop_cfg)

    features: dict[str, np.ndarray] = {}
    failures: list[tuple[str, str]] = []
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        outcomes = list(pool.map(lambda e: _try(extract, e), entries))
    for entry, (vec, err) in zip(entries, outcomes):
        if err is not None:
            failures.append((entry.sample_id, err))
            logger.warning("sample %s failed: %s", entry.sample_id, err)
        else:
            features[entry.sample_id] = vec

    usable = CorpusManifest(
        entries=tuple(e for e in entries if e.sample_id in features)
    )
    labels = {e.sample_id: e.label for e in entries}
    folds = make_folds(usable, protocol)

    def run_fold(fold: Fold):
        train_x = np.stack([features[s] for s in fold.train_ids])
        train_y = [labels[s] for s in fold.train_ids]
        model = classifier_factory()
        model.fit(train_x, train_y)
        test_x = np.stack([features[s] for s in fold.test_ids])
        predicted = model.predict(test_x)
        return [(s, labels[s], p) for s, p in zip(fold.test_ids, predicted)]

    fold_results: list[list[tuple[str, str, str]] | None] = [None] * len(folds)
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        fold_outcomes = list(pool.map(lambda f: _try(run_fold, f), folds))
    for i, (res, err) in enumerate(fold_outcomes):
        if err is not None:
            failures.append((f"fold:{folds[i].name}", err))
            logger.warning("fold %s failed: %s", folds[i].name, err)
        else:
            fold_results[i] = res

    class_set = manifest.class_set
    predictions: list[tuple[str, str, str]] = []
    per_fold: list[tuple[str, MetricsReport]] = []
    for fold, res in zip(folds, fold_results):
        if res is None:
            continue
        predictions.extend(res)
        per_fold.append((fold.name, score([r[1] for r in res], [r[2] for r in res], class_set)))
    pooled = score(
        [p[1] for p in predictions], [p[2] for p in predictions], class_set
    )
    fold_mean = {
        "macro_recall": float(np.mean([m.macro_recall for _, m in per_fold])) if per_fold else 0.0,
        "macro_precision": float(np.mean([m.macro_precision for _, m in per_fold])) if per_fold else 0.0,
        "macro_f1": float(np.mean([m.macro_f1 for _, m in per_fold])) if per_fold else 0.0,
        "accuracy": float(np.mean([m.accuracy for _, m in per_fold])) if per_fold else 0.0,
        "n_folds": len(per_fold),
    }
    metadata = {
        "sampling": sampling_cfg.to_dict(),
        "lbptop": lbptop_cfg.to_dict(),
        "protocol": protocol,
        "seed": seed,
        "resize_to": list(resize_to) if resize_to else None,
        "classifier": classifier_factory.__name__
        if hasattr(classifier_factory, "__name__")
        else str(classifier_factory),
        "n_samples": len(manifest),
        "n_failures": len(failures),
        "class_set": list(class_set),
    }
    return ExperimentReport(
        protocol=protocol,
        pooled=pooled,
        per_fold=tuple(per_fold),
        fold_mean=fold_mean,
        predictions=tuple(predictions),
        failures=tuple(failures),
        metadata=metadata,
    )


def _try(fn, arg):
    try:
        return fn(arg), None
    except (ModesiftError, ValueError, OSError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def score_predictions(manifest: CorpusManifest, predicted: dict[str, str]) -> MetricsReport:
    """Pooled metrics for externally produced predictions.

    Every manifest sample must be predicted; labels must stay inside the
    manifest's class set.
    """
    missing = [e.sample_id for e in manifest.entries if e.sample_id not in predicted]
    if missing:
        raise ValueError(f"missing predictions for {len(missing)} sample(s), first: {missing[0]}")
    true_labels = [e.label for e in manifest.entries]
    predicted_labels = [predicted[e.sample_id] for e in manifest.entries]
    return score(true_labels, predicted_labels, manifest.class_set)


def read_predictions(path) -> dict[str, str]:
    """CSV (sample_id, predicted_label) -> dict."""
    text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "sample_id,predicted_label":
        raise ValueError(f"{path}: first line must be 'sample_id,predicted_label'")
    out = {}
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 2:
            raise ValueError(f"{path}: malformed row {ln!r}")
        out[parts[0].strip()] = parts[1].strip()
    return out


def write_predictions(predictions, path) -> None:
    """Write (sample_id, true, predicted) or (sample_id, predicted) rows."""
    lines = ["sample_id,predicted_label"]
    for row in predictions:
        lines.append(f"{row[0]},{row[-1]}")
    Path(path).write_text("\n".join(lines) + "\n")


def report_to_json(report: ExperimentReport) -> str:
    """Deterministic JSON rendering (sorted keys, no timestamps)."""
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def report_to_markdown(report: ExperimentReport) -> str:
    """Compact human-readable table of the pooled scores."""
    lines = [
        f"# Evaluation report ({report.protocol})",
        "",
        "| class | tp | fp | fn | recall | precision | f1 |",
        "|---|---|---|---|---|---|---|",
    ]
    for label, m in report.pooled.per_class:
        lines.append(
            f"| {label} | {m.tp} | {m.fp} | {m.fn} "
            f"| {m.recall:.4f} | {m.precision:.4f} | {m.f1:.4f} |"
        )
    pooled = report.pooled
    lines += [
        "",
        f"- samples scored: {pooled.n_samples}",
        f"- accuracy: {pooled.accuracy:.4f}",
        f"- macro recall / precision / f1: "
        f"{pooled.macro_recall:.4f} / {pooled.macro_precision:.4f} / {pooled.macro_f1:.4f}",
        f"- fold-mean macro f1: {report.fold_mean['macro_f1']:.4f} over {report.fold_mean['n_folds']} folds",
        f"- failures: {len(report.failures)}",
        "",
    ]
    return "\n".join(lines)
