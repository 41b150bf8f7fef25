"""Metric suite: retrieval top-k accuracy at two granularities, final
prediction accuracy, per-class precision/recall, confusion matrix, and
deterministic report emission.

Top-k uses "contains" semantics: a query counts when any of its first
min(k, hits) retrieved labels equals the truth; duplicates count once.
Unresolved predictions (None) occupy a dedicated predicted-axis column and
never inflate a real class's precision. Classes never predicted get a null
precision marker rather than a silent zero.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence

from .core import Taxonomy
from .errors import EmptyQuerySet, IoError, LengthMismatch

UNRESOLVED = "Unresolved"
REPORT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ClassMetrics:
    precision: Optional[float]  # None when the class was never predicted
    recall: Optional[float]  # None when the class has zero support
    support: int
    predicted: int


@dataclass(frozen=True)
class EvalReport:
    topk_category: Dict[int, float] = field(default_factory=dict)
    topk_species: Dict[int, float] = field(default_factory=dict)
    final_top1: Optional[float] = None
    per_class: Dict[str, ClassMetrics] = field(default_factory=dict)
    confusion_labels_true: List[str] = field(default_factory=list)
    confusion_labels_pred: List[str] = field(default_factory=list)
    confusion: List[List[int]] = field(default_factory=list)
    n_samples: int = 0
    run_metadata: Dict[str, object] = field(default_factory=dict)


def topk_retrieval_accuracy(
    ranked_labels_per_query: Sequence[Sequence[str]],
    truths: Sequence[str],
    k: int,
) -> float:
    """Fraction of queries whose first min(k, available) retrieved labels
    contain the truth."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(ranked_labels_per_query) == 0:
        raise EmptyQuerySet("no queries to score")
    if len(ranked_labels_per_query) != len(truths):
        raise LengthMismatch(
            f"{len(ranked_labels_per_query)} hit lists vs {len(truths)} truths"
        )
    correct = 0
    for labels, truth in zip(ranked_labels_per_query, truths):
        if truth in list(labels)[:k]:
            correct += 1
    return correct / len(truths)


def hits_to_labels(hits, entries_by_id: Mapping[str, object], granularity: str) -> List[str]:
    """Resolve a ranked hit list to labels at the requested granularity."""
    if granularity not in ("category", "species"):
        raise ValueError(f"unknown granularity {granularity!r}")
    out = []
    for h in hits:
        entry = entries_by_id[h.entry_id]
        out.append(entry.category if granularity == "category" else entry.species)
    return out


def retrieval_topk_curves(
    hits_per_query,
    truth_categories: Sequence[str],
    truth_species: Sequence[Optional[str]],
    entries_by_id: Mapping[str, object],
    ks: Sequence[int],
):
    """Top-k accuracy curves at both granularities over one hit set.

    Species curve is computed over queries that carry a species truth.
    Returns (topk_category, topk_species) dicts keyed by k.
    """
    cat_labels = [hits_to_labels(h, entries_by_id, "category") for h in hits_per_query]
    topk_category = {
        int(k): topk_retrieval_accuracy(cat_labels, truth_categories, k) for k in ks
    }
    sp_pairs = [
        (hits_to_labels(h, entries_by_id, "species"), t)
        for h, t in zip(hits_per_query, truth_species)
        if t is not None
    ]
    topk_species = {}
    if sp_pairs:
        sp_labels = [p[0] for p in sp_pairs]
        sp_truths = [p[1] for p in sp_pairs]
        topk_species = {
            int(k): topk_retrieval_accuracy(sp_labels, sp_truths, k) for k in ks
        }
    return topk_category, topk_species


def prediction_metrics(
    predictions: Sequence[Optional[str]],
    truths: Sequence[str],
    taxonomy: Taxonomy,
) -> EvalReport:
    """Confusion matrix, per-class precision/recall, and final accuracy.

    predictions holds category names or None (Unresolved); truths holds
    category names. Returns a report fragment with empty top-k curves.
    """
    if len(predictions) != len(truths):
        raise LengthMismatch(f"{len(predictions)} predictions vs {len(truths)} truths")
    if len(truths) == 0:
        raise EmptyQuerySet("no predictions to score")

    classes = sorted(taxonomy.categories)
    pred_labels = classes + [UNRESOLVED]
    row_of = {c: i for i, c in enumerate(classes)}
    col_of = {c: i for i, c in enumerate(pred_labels)}
    matrix = [[0] * len(pred_labels) for _ in classes]
    for pred, truth in zip(predictions, truths):
        if truth not in row_of:
            raise LengthMismatch(f"truth label {truth!r} not in taxonomy")
        col = col_of[UNRESOLVED] if pred is None else col_of.get(pred)
        if col is None:
            raise LengthMismatch(f"predicted label {pred!r} not in taxonomy")
        matrix[row_of[truth]][col] += 1

    per_class = {}
    correct_total = 0
    for c in classes:
        r = row_of[c]
        support = sum(matrix[r])
        predicted = sum(matrix[i][col_of[c]] for i in range(len(classes)))
        tp = matrix[r][col_of[c]]
        correct_total += tp
        precision = tp / predicted if predicted > 0 else None
        recall = tp / support if support > 0 else None
        per_class[c] = ClassMetrics(
            precision=precision, recall=recall, support=support, predicted=predicted
        )

    return EvalReport(
        final_top1=correct_total / len(truths),
        per_class=per_class,
        confusion_labels_true=classes,
        confusion_labels_pred=pred_labels,
        confusion=matrix,
        n_samples=len(truths),
    )


def merge_report(base: EvalReport, **updates) -> EvalReport:
    return replace(base, **updates)


def report_to_dict(report: EvalReport) -> dict:
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "n_samples": report.n_samples,
        "final_top1": report.final_top1,
        "topk_category": {str(k): v for k, v in sorted(report.topk_category.items())},
        "topk_species": {str(k): v for k, v in sorted(report.topk_species.items())},
        "per_class": {
            c: {
                "precision": m.precision,
                "recall": m.recall,
                "support": m.support,
                "predicted": m.predicted,
            }
            for c, m in sorted(report.per_class.items())
        },
        "confusion": {
            "labels_true": report.confusion_labels_true,
            "labels_pred": report.confusion_labels_pred,
            "matrix": report.confusion,
        },
        "run_metadata": report.run_metadata,
    }


def report_from_dict(data: dict) -> EvalReport:
    per_class = {
        c: ClassMetrics(
            precision=m["precision"],
            recall=m["recall"],
            support=m["support"],
            predicted=m["predicted"],
        )
        for c, m in data.get("per_class", {}).items()
    }
    return EvalReport(
        topk_category={int(k): v for k, v in data.get("topk_category", {}).items()},
        topk_species={int(k): v for k, v in data.get("topk_species", {}).items()},
        final_top1=data.get("final_top1"),
        per_class=per_class,
        confusion_labels_true=data.get("confusion", {}).get("labels_true", []),
        confusion_labels_pred=data.get("confusion", {}).get("labels_pred", []),
        confusion=data.get("confusion", {}).get("matrix", []),
        n_samples=data.get("n_samples", 0),
        run_metadata=data.get("run_metadata", {}),
    )


def report_emit(report: EvalReport, out_dir, basename: str = "report") -> dict:
    """Write <basename>.json and per_class.csv; identical inputs yield
    byte-identical files."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        json_path = out_dir / f"{basename}.json"
        csv_path = out_dir / "per_class.csv"
        payload = json.dumps(report_to_dict(report), indent=2, sort_keys=True, ensure_ascii=False)
        json_path.write_bytes((payload + "\n").encode("utf-8"))

        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["class", "precision", "recall", "support"])
        for c in sorted(report.per_class):
            m = report.per_class[c]
            writer.writerow(
                [
                    c,
                    "" if m.precision is None else repr(m.precision),
                    "" if m.recall is None else repr(m.recall),
                    m.support,
                ]
            )
        csv_path.write_bytes(buf.getvalue().encode("utf-8"))
    except OSError as exc:
        raise IoError(f"cannot write report to {out_dir}: {exc}") from exc
    return {"json": json_path, "csv": csv_path}
