"""
Monte Carlo Replicate Runner

Runs a simulation study: for r = 1..R it simulates a data set with seed
base_seed + r, tunes the hyperparameters by BIC, and scores the winning
colored estimate against the true model.

Key Features:
    - Per-replicate status tracking (completed / failed) with error messages
    - Replicates fan out over a process pool bounded by the worker budget
    - Outcomes are ordered by replicate index, so summaries do not depend on
      the worker count or completion order
    - Failed replicates are excluded from the summary and counted
"""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

from ..errors import InputError
from ..models import Hyperparams, SimSpec, TuneGrid
from .metrics import evaluate, mean_sd, summarize
from .models import MetricsReport
from .selection import tune
from .simulate import simulate

logger = logging.getLogger(__name__)

SUMMARY_MEASURES = ("mse", "f1", "d0", "acc_all")


class ReplicateStatus(str, Enum):
    """
    Replicate states.

    States:
        PENDING: Not run yet
        COMPLETED: Simulated, tuned and evaluated
        FAILED: Any step raised; excluded from the summary
    """
    PENDING = "pending"
    COMPLETED = "completed"
    FAILED = "failed"


@dataclass
class ReplicateOutcome:
    """
    Result of one replicate.

    Attributes:
        index: Replicate number r (1-based)
        seed: Seed used for the simulated data (base_seed + r)
        status: Current replicate status
        metrics: Evaluation of the tuned estimate, if completed
        tuning: Selected (lambda1, lambda2, lambda3, tau)
        df / bic: Size and score of the selected model
        converged: Whether the selected fit converged
        error: Error message if the replicate failed
        execution_time: Wall time in seconds (not part of any written output)
    """
    index: int
    seed: int
    status: ReplicateStatus = ReplicateStatus.PENDING
    metrics: Optional[MetricsReport] = None
    tuning: Optional[tuple] = None
    df: Optional[int] = None
    bic: Optional[float] = None
    converged: Optional[bool] = None
    error: Optional[str] = None
    execution_time: Optional[float] = None

    def mark_completed(self, metrics: MetricsReport, execution_time: float):
        self.status = ReplicateStatus.COMPLETED
        self.metrics = metrics
        self.execution_time = execution_time

    def mark_failed(self, error: str, execution_time: float):
        self.status = ReplicateStatus.FAILED
        self.error = error
        self.execution_time = execution_time

    def to_row(self) -> Dict[str, Any]:
        """Flat per-replicate record for the replicate CSV."""
        row: Dict[str, Any] = {"replicate": self.index, "seed": self.seed, "status": self.status.value}
        lambda1, lambda2, lambda3, tau = self.tuning or (None,) * 4
        row.update(lambda1=lambda1, lambda2=lambda2, lambda3=lambda3, tau=tau,
                   df=self.df, bic=self.bic, converged=self.converged)
        for name in ("mse", "f1", "d0", "acc_all", "tp", "fp", "fn"):
            row[name] = getattr(self.metrics, name) if self.metrics else None
        row["error"] = self.error
        return row


def run_replicate(spec: SimSpec, grid: TuneGrid, base: Hyperparams, index: int) -> ReplicateOutcome:
    """Simulate, tune and evaluate replicate `index`; failures are recorded, never raised."""
    design = spec.for_replicate(index)
    outcome = ReplicateOutcome(index=index, seed=design.seed)
    start_time = time.time()
    try:
        sim = simulate(design)
        result = tune(sim.data, grid, base, workers=1)
        outcome.tuning = result.hyper.tuning
        outcome.df = result.estimate.df
        outcome.bic = result.estimate.bic
        outcome.converged = result.report.converged
        metrics = evaluate(result.estimate.params, sim.theta, sim.graph, base.eps_zero, base.eps_merge)
        outcome.mark_completed(metrics, time.time() - start_time)
    except Exception as e:
        logger.warning(f"Replicate {index} failed: {e}")
        outcome.mark_failed(str(e) or type(e).__name__, time.time() - start_time)
    return outcome


@dataclass
class ReplicateStudy:
    """All outcomes of a study, ordered by replicate index."""
    spec: SimSpec
    outcomes: List[ReplicateOutcome] = field(default_factory=list)

    @property
    def completed(self) -> List[ReplicateOutcome]:
        return [o for o in self.outcomes if o.status == ReplicateStatus.COMPLETED]

    @property
    def failed(self) -> int:
        return sum(1 for o in self.outcomes if o.status == ReplicateStatus.FAILED)

    def means(self) -> Dict[str, float]:
        """Mean of each summary measure over completed replicates."""
        return {name: mean_sd(getattr(o.metrics, name) for o in self.completed)[0] for name in SUMMARY_MEASURES}

    def summary_row(self) -> Dict[str, Any]:
        """One table row: design, then 'mean(sd)' per measure and the failure count."""
        row: Dict[str, Any] = {
            "family": self.spec.family.value,
            "p": self.spec.dimension,
            "n": self.spec.n,
            "reps": len(self.outcomes),
        }
        for name in SUMMARY_MEASURES:
            row[name] = summarize(getattr(o.metrics, name) for o in self.completed)
        row["failed"] = self.failed
        return row


class ReplicateRunner:
    """Runs replicates 1..R of one design with a fixed tuning grid."""

    def __init__(self, spec: SimSpec, grid: TuneGrid, base: Optional[Hyperparams] = None, workers: int = 1):
        self.spec = spec
        self.grid = grid
        self.base = base or Hyperparams()
        self.workers = max(1, workers)

    def run(self, reps: int) -> ReplicateStudy:
        """
        Run every replicate.

        Args:
            reps: Number of replicates R (>= 1)

        Returns:
            ReplicateStudy with outcomes ordered 1..R
        """
        if reps < 1:
            raise InputError("replicate count must be at least 1")
        indices = list(range(1, reps + 1))
        logger.info(f"Running {reps} replicate(s) of {self.spec.family.value} with {self.workers} worker(s)")
        if self.workers == 1 or reps == 1:
            outcomes = [run_replicate(self.spec, self.grid, self.base, r) for r in indices]
        else:
            with ProcessPoolExecutor(max_workers=min(self.workers, reps)) as executor:
                outcomes = list(executor.map(
                    run_replicate,
                    [self.spec] * reps, [self.grid] * reps, [self.base] * reps, indices,
                ))
        outcomes.sort(key=lambda o: o.index)
        study = ReplicateStudy(spec=self.spec, outcomes=outcomes)
        logger.info(f"Study finished: {len(study.completed)} completed, {study.failed} failed")
        return study
