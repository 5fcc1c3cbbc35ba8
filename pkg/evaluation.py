"""
Evaluation
ROC / precision-recall curves and Brier calibration of regulation probabilities
"""
import logging
from pathlib import Path
from typing import Optional, Sequence, Set, Tuple, Union

import numpy as np
import pandas as pd
from sklearn import metrics

from errors import DegenerateLabelsError, LabelMismatchError
from models import Curve, GrnSpec, MetricSummary, RegulationMatrix, ScoredEdges
from utils.tables import write_frame

logger = logging.getLogger(__name__)


# ============================================================================
# Building scored pairs
# ============================================================================

def scored_edges_from_matrix(m: RegulationMatrix, spec: GrnSpec) -> ScoredEdges:
    """Pairs of an in-memory scan against the network it was simulated from"""
    if m.n_traits != spec.n_genes:
        raise LabelMismatchError(f"{m.n_traits} traits scanned but the network has {spec.n_genes} genes")
    truth = set(spec.edge_set)
    pairs = [(i, j) for i in range(m.n_traits) for j in range(m.n_traits) if i != j]
    return ScoredEdges(
        pairs=tuple(pairs),
        prob=np.array([m.prob[i, j] for i, j in pairs], dtype=float),
        label=np.array([int((i, j) in truth) for i, j in pairs], dtype=int),
    )


def scored_edges_from_tables(
    predictions: pd.DataFrame,
    truth: Set[Tuple[str, str]],
    traits: Optional[Sequence[str]] = None,
) -> Tuple[ScoredEdges, Tuple[str, ...]]:
    """
    Join a long regulation table (regulator, target, probability) with a set
    of true (source, target) edges. Every ordered pair of distinct traits
    must have exactly one prediction.
    """
    if traits is None:
        seen = dict.fromkeys(list(predictions["regulator"].astype(str)) + list(predictions["target"].astype(str)))
        for source, target in truth:
            seen.setdefault(source)
            seen.setdefault(target)
        traits = tuple(seen)
    traits = tuple(traits)
    index = {name: i for i, name in enumerate(traits)}

    for source, target in truth:
        if source not in index or target not in index:
            raise LabelMismatchError(f"True edge {source} -> {target} involves an unscored trait")
        if source == target:
            raise LabelMismatchError(f"True edge {source} -> {target} is a self-loop")

    predicted = {}
    for regulator, target, prob in zip(
        predictions["regulator"].astype(str), predictions["target"].astype(str), predictions["probability"]
    ):
        if regulator == target:
            continue
        if (regulator, target) in predicted:
            raise LabelMismatchError(f"Pair {regulator} -> {target} predicted twice")
        if not np.isfinite(prob):
            raise LabelMismatchError(f"Pair {regulator} -> {target} has no probability")
        predicted[(regulator, target)] = float(prob)

    pairs, prob, label = [], [], []
    for a in traits:
        for b in traits:
            if a == b:
                continue
            if (a, b) not in predicted:
                raise LabelMismatchError(f"No prediction for pair {a} -> {b}")
            pairs.append((index[a], index[b]))
            prob.append(predicted[(a, b)])
            label.append(int((a, b) in truth))

    extra = set(predicted) - {(traits[i], traits[j]) for i, j in pairs}
    if extra:
        a, b = sorted(extra)[0]
        raise LabelMismatchError(f"Prediction for unknown pair {a} -> {b}")

    scored = ScoredEdges(
        pairs=tuple(pairs),
        prob=np.asarray(prob, dtype=float),
        label=np.asarray(label, dtype=int),
    )
    return scored, traits


# ============================================================================
# Curves
# ============================================================================

def roc_curve(s: ScoredEdges) -> Curve:
    """False/true positive rates at every distinct score; area by the trapezoid rule"""
    positives = int(s.label.sum())
    negatives = int(s.label.size - positives)
    if positives == 0 or negatives == 0:
        raise DegenerateLabelsError(
            f"ROC needs both classes ({positives} positive, {negatives} negative)"
        )
    fpr, tpr, thresholds = metrics.roc_curve(s.label, s.prob, drop_intermediate=False)
    # first point is (0, 0) above every score
    thresholds = np.r_[np.inf, thresholds[1:]]
    return Curve(kind="roc", thresholds=thresholds, x=fpr, y=tpr, area=float(metrics.auc(fpr, tpr)))


def pr_curve(s: ScoredEdges) -> Curve:
    """
    Precision against recall at every distinct score, highest first. Area is
    the step-wise sum over achievable points, sum_k (R_k - R_{k-1}) P_k.
    """
    if int(s.label.sum()) == 0:
        raise DegenerateLabelsError("Precision-recall needs at least one positive label")
    precision, recall, thresholds = metrics.precision_recall_curve(s.label, s.prob)
    # drop the (recall 0, precision 1) anchor and order by descending threshold
    precision, recall = precision[:-1][::-1], recall[:-1][::-1]
    area = float(metrics.average_precision_score(s.label, s.prob))
    return Curve(kind="pr", thresholds=thresholds[::-1], x=recall, y=precision, area=area)


def brier_score(s: ScoredEdges) -> float:
    if s.prob.size == 0:
        return float("nan")
    return float(metrics.brier_score_loss(s.label, s.prob, pos_label=1))


def evaluate(s: ScoredEdges) -> MetricSummary:
    summary = MetricSummary(
        auc_roc=roc_curve(s).area,
        auprc=pr_curve(s).area,
        brier=brier_score(s),
        prevalence=float(s.label.mean()),
        n_pairs=int(s.label.size),
    )
    logger.info(
        f"AUC-ROC {summary.auc_roc:.4f}, AUPRC {summary.auprc:.4f}, Brier {summary.brier:.4f} "
        f"over {summary.n_pairs} pairs"
    )
    return summary


# ============================================================================
# Output
# ============================================================================

def write_curve(curve: Curve, path: Union[str, Path]) -> None:
    write_frame(pd.DataFrame({"threshold": curve.thresholds, "x": curve.x, "y": curve.y}), path)


def write_summary(summary: MetricSummary, path: Union[str, Path]) -> None:
    write_frame(pd.DataFrame([summary.model_dump()]), path)


def summary_line(summary: MetricSummary) -> str:
    return f"auc_roc={summary.auc_roc:.6g}\tauprc={summary.auprc:.6g}\tbrier={summary.brier:.6g}"
