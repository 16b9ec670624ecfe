"""Multi-label and single-label evaluation metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ClassCounts:
    tp: int
    fp: int
    fn: int
    tn: int


@dataclass(frozen=True)
class MultiLabelMetrics:
    """Micro/macro F1, sample-averaged Jaccard, and per-class confusion counts."""

    micro_f1: float
    macro_f1: float
    jaccard: float
    per_class: tuple[ClassCounts, ...]
    precision: tuple[float, ...]
    recall: tuple[float, ...]


def _f1(tp: int, fp: int, fn: int) -> float:
    denom = 2 * tp + fp + fn
    return 1.0 if denom == 0 else 2.0 * tp / denom


def multilabel_metrics(pred: np.ndarray, truth: np.ndarray) -> MultiLabelMetrics:
    """Score binary label matrices of shape (n_samples, n_classes).

    Micro-F1 pools true/false positives over all (sample, class) pairs;
    the Jaccard index is |pred & truth| / |pred | truth| per sample,
    averaged, with the empty/empty case scored 1. Per-class F1 terms with
    no positives on either side also count as 1 (vacuously perfect) in the
    macro average.
    """
    pred = np.asarray(pred).astype(bool)
    truth = np.asarray(truth).astype(bool)
    if pred.shape != truth.shape or pred.ndim != 2:
        raise ValueError("pred and truth must both be (n_samples, n_classes)")

    tp = (pred & truth).sum(axis=0)
    fp = (pred & ~truth).sum(axis=0)
    fn = (~pred & truth).sum(axis=0)
    tn = (~pred & ~truth).sum(axis=0)

    micro = _f1(int(tp.sum()), int(fp.sum()), int(fn.sum()))
    macro = float(np.mean([_f1(int(t), int(f), int(n)) for t, f, n in zip(tp, fp, fn)]))

    inter = (pred & truth).sum(axis=1)
    union = (pred | truth).sum(axis=1)
    jaccard = float(np.mean(np.where(union == 0, 1.0, inter / np.maximum(union, 1))))

    per_class = tuple(ClassCounts(int(t), int(f), int(n), int(v)) for t, f, n, v in zip(tp, fp, fn, tn))
    precision = tuple(1.0 if t + f == 0 else t / (t + f) for t, f in zip(tp, fp))
    recall = tuple(1.0 if t + n == 0 else t / (t + n) for t, n in zip(tp, fn))
    return MultiLabelMetrics(micro, macro, jaccard, per_class, precision, recall)


def single_label_accuracy(pred: np.ndarray, truth: np.ndarray) -> float:
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError("pred and truth must have the same shape")
    return float(np.mean(pred == truth))


def confusion_matrix(pred: np.ndarray, truth: np.ndarray, n_classes: int) -> np.ndarray:
    """Single-label confusion counts, rows = true class, columns = predicted."""
    out = np.zeros((n_classes, n_classes), dtype=int)
    for t, p in zip(np.asarray(truth).ravel(), np.asarray(pred).ravel()):
        out[int(t), int(p)] += 1
    return out
