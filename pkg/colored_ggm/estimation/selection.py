"""
BIC Tuning and Colored Estimate Extraction

Turns raw solver output into a colored model and picks hyperparameters by
the composite-likelihood BIC, BIC_c = -2 l_c(merged) + df log n.

Key Features:
    - extract_colored_estimate: zero thresholding, then single-linkage merging
      of diagonal and off-diagonal values into color classes
    - grid_search: every tuple of the four candidate lists
    - sequential_search: four line searches (lambda1, lambda2, lambda3, tau),
      so the number of fits is the sum of the list lengths
    - Fits run in a process pool when more than one worker is allowed;
      results are collected in grid order so the outcome never depends on
      scheduling

Ties in BIC are broken by smaller df, then by the lexicographically smaller
(lambda1, lambda2, lambda3, tau) tuple.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import product
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage

from ..errors import InputError, TuningError
from ..models import Hyperparams, SearchMode, TuneGrid, TuneTrialRecord
from .likelihood import composite_loglik
from .models import (
    ColoredGraph,
    ColoredGraphEstimate,
    DataMatrix,
    FitReport,
    GramCache,
    PrecisionParams,
    gram,
    pair_arrays,
)
from .optimizer import fit

logger = logging.getLogger(__name__)

Tuning = Tuple[float, float, float, float]


def single_linkage_classes(values: np.ndarray, gap: float) -> List[np.ndarray]:
    """
    Group indices whose values chain together with consecutive gaps <= gap.

    Classes are returned ordered by their smallest member index.
    """
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        return []
    if values.size == 1:
        return [np.array([0])]
    labels = fcluster(linkage(values.reshape(-1, 1), method="single"), t=gap, criterion="distance")
    classes = [np.flatnonzero(labels == label) for label in np.unique(labels)]
    return sorted(classes, key=lambda members: members[0])


def _class_value(values: np.ndarray) -> float:
    # Already-merged classes keep their exact value so re-extraction is a no-op.
    if np.all(values == values[0]):
        return float(values[0])
    return float(values.mean())


def extract_colored_estimate(params: PrecisionParams, eps_zero: float, eps_merge: float) -> ColoredGraphEstimate:
    """
    Threshold, merge and average the fitted parameters.

    Off-diagonal entries with |beta| < eps_zero become zero; the remaining
    values are merged by single linkage with gap eps_merge, separately for
    diagonals and off-diagonals, and every class takes its mean. An edge
    class whose mean falls below eps_zero is dropped, so applying the
    extraction twice gives the same result.
    """
    p = params.p
    diag = params.diag.copy()
    vertex_classes = single_linkage_classes(diag, eps_merge)
    for members in vertex_classes:
        diag[members] = _class_value(diag[members])

    beta = np.where(np.abs(params.beta) < eps_zero, 0.0, params.beta)
    nonzero = np.flatnonzero(beta)
    rows, cols = pair_arrays(p)
    edge_classes = []
    for members in single_linkage_classes(beta[nonzero], eps_merge):
        slots = nonzero[members]
        value = _class_value(beta[slots])
        if abs(value) < eps_zero:
            beta[slots] = 0.0
            continue
        beta[slots] = value
        edge_classes.append(tuple((int(rows[j]), int(cols[j])) for j in slots))

    graph = ColoredGraph(
        p=p,
        vertex_classes=tuple(tuple(int(v) for v in members) for members in vertex_classes),
        edge_classes=tuple(edge_classes),
    )
    return ColoredGraphEstimate(
        params=PrecisionParams(diag=diag, beta=beta),
        graph=graph,
        df=len(vertex_classes) + len(edge_classes),
    )


def bic_value(loglik: float, df: int, n: int) -> float:
    """-2 l_c + df log n."""
    return -2.0 * loglik + df * np.log(n)


def bic_c(report: FitReport, g: GramCache, hyper: Hyperparams) -> ColoredGraphEstimate:
    """
    Score a fit: extract its colored estimate and evaluate l_c and BIC_c at
    the merged parameters.
    """
    estimate = extract_colored_estimate(report.params, hyper.eps_zero, hyper.eps_merge)
    loglik = composite_loglik(estimate.params, g)
    return ColoredGraphEstimate(
        params=estimate.params,
        graph=estimate.graph,
        df=estimate.df,
        loglik=loglik,
        bic=bic_value(loglik, estimate.df, g.n),
    )


@dataclass
class Trial:
    """One evaluated hyperparameter tuple."""
    tuning: Tuning
    report: Optional[FitReport] = None
    estimate: Optional[ColoredGraphEstimate] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def key(self) -> Tuple[float, int, Tuning]:
        return (self.estimate.bic, self.estimate.df, self.tuning)

    def record(self, selected: bool = False) -> TuneTrialRecord:
        lambda1, lambda2, lambda3, tau = self.tuning
        if not self.ok:
            return TuneTrialRecord(lambda1=lambda1, lambda2=lambda2, lambda3=lambda3, tau=tau, error=self.error)
        return TuneTrialRecord(
            lambda1=lambda1, lambda2=lambda2, lambda3=lambda3, tau=tau,
            loglik=self.estimate.loglik, df=self.estimate.df, bic=self.estimate.bic,
            converged=self.report.converged, selected=selected,
        )


@dataclass
class TuneResult:
    """
    Outcome of a search.

    Attributes:
        hyper: Winning hyperparameters (solver controls of the base kept)
        report: Raw fit at the winning tuple
        estimate: Colored estimate with loglik and bic set
        trace: One record per fit, in evaluation order
    """
    hyper: Hyperparams
    report: FitReport
    estimate: ColoredGraphEstimate
    trace: List[TuneTrialRecord]


def _run_trial(data: DataMatrix, base: Hyperparams, tuning: Tuning) -> Trial:
    """Fit and score one tuple; failures are captured, never raised."""
    hyper = base.with_tuning(*tuning)
    try:
        report = fit(data, hyper)
        estimate = bic_c(report, gram(data), hyper)
    except Exception as e:
        logger.warning(f"Excluding tuple {tuning}: {e}")
        return Trial(tuning=tuning, error=str(e) or type(e).__name__)
    return Trial(tuning=tuning, report=report, estimate=estimate)


def run_trials(data: DataMatrix, base: Hyperparams, tunings: Sequence[Tuning], workers: int = 1) -> List[Trial]:
    """Evaluate tuples, in a process pool when workers > 1; results keep the input order."""
    if workers <= 1 or len(tunings) <= 1:
        return [_run_trial(data, base, tuning) for tuning in tunings]
    with ProcessPoolExecutor(max_workers=min(workers, len(tunings))) as executor:
        return list(executor.map(_run_trial, [data] * len(tunings), [base] * len(tunings), tunings))


def _best(trials: Sequence[Trial]) -> Trial:
    candidates = [trial for trial in trials if trial.ok]
    if not candidates:
        raise TuningError(f"all {len(trials)} hyperparameter tuples failed")
    return min(candidates, key=Trial.key)


def _check_data(data: DataMatrix):
    # Input problems would fail every tuple alike; report them as input errors.
    PrecisionParams.initial(gram(data))


def _result(winner: Trial, base: Hyperparams, trace: List[TuneTrialRecord]) -> TuneResult:
    logger.info(f"Selected tuple {winner.tuning} with BIC {winner.estimate.bic:.6g}, df {winner.estimate.df}")
    return TuneResult(
        hyper=base.with_tuning(*winner.tuning),
        report=winner.report,
        estimate=winner.estimate,
        trace=trace,
    )


def grid_search(data: DataMatrix, grid: TuneGrid, base: Optional[Hyperparams] = None, workers: int = 1) -> TuneResult:
    """
    Fit every (lambda1, lambda2, lambda3, tau) tuple and return the BIC_c minimizer.

    Duplicate tuples are fitted once.

    Raises:
        InputError: If the data cannot be fitted at all
        TuningError: If every tuple failed
    """
    base = base or Hyperparams()
    _check_data(data)
    tunings = list(dict.fromkeys(
        (float(l1), float(l2), float(l3), float(tau))
        for l1, l2, l3, tau in product(grid.lambda1, grid.lambda2, grid.lambda3, grid.tau)
    ))
    logger.info(f"Grid search over {len(tunings)} tuples with {workers} worker(s)")
    trials = run_trials(data, base, tunings, workers)
    winner = _best(trials)
    trace = [trial.record(selected=trial is winner) for trial in trials]
    return _result(winner, base, trace)


def sequential_search(data: DataMatrix, grid: TuneGrid, base: Optional[Hyperparams] = None, workers: int = 1) -> TuneResult:
    """
    Line searches over lambda1, lambda2, lambda3 and tau in that order.

    Each stage keeps the values already tuned and holds the remaining ones at
    their anchors.

    Raises:
        InputError: If the data cannot be fitted at all
        TuningError: If every tuple of a stage failed
    """
    base = base or Hyperparams()
    _check_data(data)
    anchor2, anchor3, anchor_tau = grid.anchors
    current = [float(min(grid.lambda1)), float(anchor2), float(anchor3), float(anchor_tau)]
    stages = (grid.lambda1, grid.lambda2, grid.lambda3, grid.tau)
    trace: List[TuneTrialRecord] = []
    winner: Optional[Trial] = None
    for position, candidates in enumerate(stages):
        tunings = []
        for value in candidates:
            tuning = list(current)
            tuning[position] = float(value)
            tunings.append(tuple(tuning))
        trials = run_trials(data, base, tunings, workers)
        winner = _best(trials)
        current = list(winner.tuning)
        last = position == len(stages) - 1
        trace.extend(trial.record(selected=last and trial is winner) for trial in trials)
        logger.info(f"Line search {position + 1}/4 picked {winner.tuning}")
    return _result(winner, base, trace)


def tune(data: DataMatrix, grid: TuneGrid, base: Optional[Hyperparams] = None, workers: int = 1) -> TuneResult:
    """Dispatch on the grid's search mode."""
    if grid.mode == SearchMode.SEQUENTIAL:
        return sequential_search(data, grid, base, workers)
    if grid.mode == SearchMode.FULL:
        return grid_search(data, grid, base, workers)
    raise InputError(f"unknown search mode {grid.mode}")
