"""
Evaluation Measures

Compares an estimated precision matrix against the true colored model:
normalized MSE, F1 on the edge support, the zero-pattern accuracy d0, the
per-class identification accuracies d_V and d_E, and their average Acc_all.

An off-diagonal entry counts as zero when |value| < eps_zero. Two estimated
values count as equal when they differ by at most eps_merge; in d_E two
zero slots are equal and a zero slot never equals a nonzero one.
"""

from typing import Iterable, Sequence, Tuple

import numpy as np

from ..config import settings
from ..errors import InputError
from .models import ColoredGraph, MetricsReport, PrecisionParams, pair_index


def mse(est: np.ndarray, true: np.ndarray) -> float:
    """||est - true||_F^2 / ||true||_F^2."""
    est, true = np.asarray(est, dtype=float), np.asarray(true, dtype=float)
    if est.shape != true.shape:
        raise InputError(f"dimension mismatch: {est.shape} vs {true.shape}")
    return float(np.sum((est - true) ** 2) / np.sum(true ** 2))


def f1_score(est_pattern: np.ndarray, true_pattern: np.ndarray) -> Tuple[int, int, int, float]:
    """TP, FP, FN and 2TP / (2TP + FP + FN) over the off-diagonal slots; 1 when both are empty."""
    est_pattern = np.asarray(est_pattern, dtype=bool)
    true_pattern = np.asarray(true_pattern, dtype=bool)
    if est_pattern.shape != true_pattern.shape:
        raise InputError("patterns cover different slot counts")
    tp = int(np.sum(est_pattern & true_pattern))
    fp = int(np.sum(est_pattern & ~true_pattern))
    fn = int(np.sum(~est_pattern & true_pattern))
    if tp + fp + fn == 0:
        return tp, fp, fn, 1.0
    return tp, fp, fn, 2.0 * tp / (2.0 * tp + fp + fn)


def support(beta: np.ndarray, eps_zero: float = settings.eps_zero) -> np.ndarray:
    """Slots whose entry survives zero thresholding."""
    return np.abs(np.asarray(beta, dtype=float)) >= eps_zero


def d0(est_beta: np.ndarray, truth: ColoredGraph, eps_zero: float = settings.eps_zero) -> float:
    """Fraction of off-diagonal slots whose zero/nonzero status matches the truth."""
    est_pattern = support(est_beta, eps_zero)
    true_pattern = truth.support()
    if est_pattern.shape != true_pattern.shape:
        raise InputError("estimate and truth have different dimensions")
    return float(np.mean(est_pattern == true_pattern))


def _class_accuracy(same: np.ndarray, members: np.ndarray) -> float:
    """
    Ordered pairs (j, j') with j in the class: ties inside the class and
    separations across it are correct. same is the full equality matrix.
    """
    inside = np.zeros(same.shape[0], dtype=bool)
    inside[members] = True
    rows = same[members]
    correct = np.sum(rows[:, inside]) - len(members) + np.sum(~rows[:, ~inside])
    return float(correct) / (len(members) * (same.shape[0] - 1))


def d_vertex_class(est_diag: np.ndarray, members: Sequence[int], eps_merge: float = settings.eps_merge) -> float:
    """Accuracy in identifying one true vertex color class; denominator |V|(p-1)."""
    values = np.asarray(est_diag, dtype=float)
    members = np.asarray(members, dtype=int)
    if members.size == 0:
        raise InputError("vertex class must be nonempty")
    same = np.abs(values[:, None] - values[None, :]) <= eps_merge
    return _class_accuracy(same, members)


def d_edge_class(
    est_beta: np.ndarray,
    members: Sequence[int],
    eps_zero: float = settings.eps_zero,
    eps_merge: float = settings.eps_merge,
) -> float:
    """Accuracy in identifying one true edge color class (slot indices); denominator |E|(p(p-1)/2 - 1)."""
    members = np.asarray(members, dtype=int)
    if members.size == 0:
        raise InputError("edge class must be nonempty")
    nonzero = support(est_beta, eps_zero)
    values = np.where(nonzero, est_beta, 0.0)
    close = np.abs(values[:, None] - values[None, :]) <= eps_merge
    same = np.where(nonzero[:, None] & nonzero[None, :], close, ~nonzero[:, None] & ~nonzero[None, :])
    return _class_accuracy(same, members)


def acc_all(d0_value: float, d_vertex: Iterable[float], d_edge: Iterable[float]) -> float:
    """Mean of d0 and every class accuracy."""
    components = [d0_value, *d_vertex, *d_edge]
    return float(np.mean(components))


def evaluate(
    estimate: PrecisionParams,
    true_theta: np.ndarray,
    truth: ColoredGraph,
    eps_zero: float = settings.eps_zero,
    eps_merge: float = settings.eps_merge,
) -> MetricsReport:
    """All measures of one (merged) estimate against the true model."""
    if estimate.p != truth.p:
        raise InputError(f"estimate has p={estimate.p}, truth has p={truth.p}")
    est_pattern = support(estimate.beta, eps_zero)
    tp, fp, fn, f1 = f1_score(est_pattern, truth.support())
    zero_accuracy = d0(estimate.beta, truth, eps_zero)
    d_vertex = tuple(d_vertex_class(estimate.diag, block, eps_merge) for block in truth.vertex_classes)
    d_edge = tuple(
        d_edge_class(estimate.beta, [pair_index(q, l, truth.p) for q, l in block], eps_zero, eps_merge)
        for block in truth.edge_classes
    )
    return MetricsReport(
        mse=mse(estimate.to_matrix(), true_theta),
        tp=tp, fp=fp, fn=fn, f1=f1,
        d0=zero_accuracy,
        d_vertex=d_vertex,
        d_edge=d_edge,
        acc_all=acc_all(zero_accuracy, d_vertex, d_edge),
    )


def mean_sd(values: Iterable[float]) -> Tuple[float, float]:
    """Mean and sample standard deviation (ddof 1, 0 for a single value)."""
    values = np.asarray(list(values), dtype=float)
    if values.size == 0:
        return float("nan"), float("nan")
    sd = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    return float(np.mean(values)), sd


def summarize(values: Iterable[float], digits: int = 4) -> str:
    """'mean(sd)' as printed in simulation tables, e.g. 0.0206(0.0051)."""
    mean, sd = mean_sd(values)
    if np.isnan(mean):
        return "NA"
    return f"{mean:.{digits}f}({sd:.{digits}f})"
