"""
Pydantic Models for Configuration, File and API Schemas

This module defines the validated value types that cross a boundary: the
hyperparameters of a fit, tuning grids, simulation designs, CLI run
configurations, the truth/estimate JSON documents and the HTTP request and
response bodies.

Key Models:
    - Hyperparams: tuning weights, truncation threshold and solver controls
    - TuneGrid: candidate lists and search mode for BIC tuning
    - SimSpec: simulation design (family, size, sample count, seed)
    - RunConfig: everything a CLI subcommand needs
    - TruthDocument / EstimateDocument: versioned JSON file schemas
    - Request/response models for the HTTP service

Features:
    - Pydantic v2 validation with Field constraints and descriptions
    - Frozen value types, safe to share across concurrent fits
    - Enum-based family and search-mode selection
"""

import math
from enum import Enum
from pathlib import Path
from typing import Annotated, Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .config import settings

SCHEMA_VERSION = 1

NonNegative = Annotated[float, Field(ge=0)]
Positive = Annotated[float, Field(gt=0)]


class Hyperparams(BaseModel):
    """
    Tuning weights, truncation threshold and solver controls of one fit.

    lambda1 fuses diagonal entries, lambda2 shrinks off-diagonal entries to
    zero, lambda3 fuses off-diagonal entries; tau is the truncation point of
    the truncated L1 penalty.
    """
    model_config = ConfigDict(frozen=True)

    lambda1: float = Field(0.0, ge=0, description="Weight of the diagonal fusion penalty")
    lambda2: float = Field(0.0, ge=0, description="Weight of the sparsity penalty")
    lambda3: float = Field(0.0, ge=0, description="Weight of the off-diagonal fusion penalty")
    tau: float = Field(0.1, gt=0, description="Truncation threshold of J_tau")
    rho: float = Field(settings.rho, gt=1, description="Multiplier growth factor")
    penalty_init: float = Field(settings.penalty_init, gt=0, description="Initial b and d multipliers")
    eps_cd: float = Field(settings.eps_cd, gt=0, description="Coordinate descent tolerance")
    eps_alm: float = Field(settings.eps_alm, gt=0, description="Constraint residual tolerance")
    eps_dc: float = Field(settings.eps_dc, gt=0, description="DC parameter change tolerance")
    max_cd: int = Field(settings.max_cd, ge=1, description="Maximum coordinate descent sweeps")
    max_alm: int = Field(settings.max_alm, ge=1, description="Maximum multiplier iterations")
    max_dc: int = Field(settings.max_dc, ge=1, description="Maximum DC iterations")
    eps_zero: float = Field(settings.eps_zero, gt=0, description="Zero threshold for off-diagonals")
    eps_merge: float = Field(settings.eps_merge, gt=0, description="Gap for merging values into a class")
    stall_limit: int = Field(5, ge=1, description="Non-decreasing residual iterations before flagging")
    balance_ratio: float = Field(10.0, gt=1, description="Primal/dual residual ratio that triggers rescaling b and d")

    @property
    def tuning(self) -> Tuple[float, float, float, float]:
        """The (lambda1, lambda2, lambda3, tau) tuple."""
        return (self.lambda1, self.lambda2, self.lambda3, self.tau)

    def with_tuning(self, lambda1: float, lambda2: float, lambda3: float, tau: float) -> "Hyperparams":
        """Return a copy with new tuning values and unchanged solver controls."""
        return self.model_copy(update={
            "lambda1": float(lambda1),
            "lambda2": float(lambda2),
            "lambda3": float(lambda3),
            "tau": float(tau),
        })


class SearchMode(str, Enum):
    """
    Hyperparameter search strategies.

    States:
        FULL: Every tuple of the four-dimensional grid
        SEQUENTIAL: Four successive line searches (lambda1, lambda2, lambda3, tau)
    """
    FULL = "full"
    SEQUENTIAL = "sequential"


class TuneGrid(BaseModel):
    """
    Candidate lists for BIC tuning.

    In sequential mode the not-yet-tuned parameters sit at their anchors,
    which default to the smallest candidate of each list.
    """
    model_config = ConfigDict(frozen=True)

    lambda1: List[NonNegative] = Field(..., min_length=1, description="Candidates for lambda1")
    lambda2: List[NonNegative] = Field(..., min_length=1, description="Candidates for lambda2")
    lambda3: List[NonNegative] = Field(..., min_length=1, description="Candidates for lambda3")
    tau: List[Positive] = Field(..., min_length=1, description="Candidates for tau")
    mode: SearchMode = Field(SearchMode.FULL, description="Search strategy")
    anchor_lambda2: Optional[NonNegative] = Field(None, description="Anchor for lambda2 in sequential mode")
    anchor_lambda3: Optional[NonNegative] = Field(None, description="Anchor for lambda3 in sequential mode")
    anchor_tau: Optional[Positive] = Field(None, description="Anchor for tau in sequential mode")

    @property
    def anchors(self) -> Tuple[float, float, float]:
        """Anchors (lambda2, lambda3, tau) used before each is tuned."""
        return (
            self.anchor_lambda2 if self.anchor_lambda2 is not None else min(self.lambda2),
            self.anchor_lambda3 if self.anchor_lambda3 is not None else min(self.lambda3),
            self.anchor_tau if self.anchor_tau is not None else min(self.tau),
        )


class Family(str, Enum):
    """True colored graph families of the simulation study."""
    STAR = "star"
    CYCLE = "cycle"
    GRID = "grid"


class SimSpec(BaseModel):
    """
    Simulation design.

    star/cycle use p >= 3 vertices; grid uses a q x q lattice (q >= 2)
    numbered row-major. For the grid family a perfect-square p is accepted in
    place of q.
    """
    model_config = ConfigDict(frozen=True)

    family: Family = Field(..., description="Graph family")
    p: Optional[int] = Field(None, description="Vertex count (star, cycle)")
    q: Optional[int] = Field(None, description="Lattice side (grid)")
    n: int = Field(..., ge=2, description="Sample size")
    seed: int = Field(0, ge=0, lt=2 ** 64, description="Base seed of the generator")

    @model_validator(mode="before")
    @classmethod
    def _grid_side_from_p(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        family = data.get("family")
        if isinstance(family, Family):
            family = family.value
        if family == Family.GRID.value:
            p = data.get("p")
            if data.get("q") is None and p is not None:
                side = math.isqrt(int(p))
                if side * side == int(p):
                    data = {**data, "q": side}
        return data

    @model_validator(mode="after")
    def _check_size(self) -> "SimSpec":
        if self.family == Family.GRID:
            if self.q is None or self.q < 2:
                raise ValueError("grid family requires q >= 2")
        elif self.p is None or self.p < 3:
            raise ValueError(f"{self.family.value} family requires p >= 3")
        return self

    @property
    def dimension(self) -> int:
        """Number of variables of the design."""
        return self.q * self.q if self.family == Family.GRID else self.p

    def for_replicate(self, replicate: int) -> "SimSpec":
        """Design of replicate r, seeded base_seed + r."""
        return self.model_copy(update={"seed": self.seed + replicate})


class RunConfig(BaseModel):
    """
    Parameters of one CLI subcommand run.

    Loaded from a TOML/JSON config file, then overridden by command-line
    flags.
    """
    data: Optional[Path] = Field(None, description="Input data CSV")
    truth: Optional[Path] = Field(None, description="Truth JSON")
    estimate: Optional[Path] = Field(None, description="Estimate JSON")
    out: Optional[Path] = Field(None, description="Output directory or file")
    simulation: Optional[SimSpec] = Field(None, description="Simulation design")
    hyper: Hyperparams = Field(default_factory=Hyperparams, description="Hyperparameters")
    grid: Optional[TuneGrid] = Field(None, description="Tuning grid")
    reps: int = Field(1, ge=1, description="Replicate count")
    threads: int = Field(settings.threads, ge=1, description="Worker budget")
    center: bool = Field(True, description="Center data columns before fitting")
    pdf: bool = Field(False, description="Also render the replicate summary as PDF")
    host: str = Field(settings.host, description="HTTP service host")
    port: int = Field(settings.port, description="HTTP service port")


class TruthDocument(BaseModel):
    """Truth JSON written by the simulate subcommand (1-based labels)."""
    schema_version: int = Field(SCHEMA_VERSION, description="Schema version")
    family: Family = Field(..., description="Graph family")
    p: int = Field(..., description="Vertex count")
    q: Optional[int] = Field(None, description="Lattice side for grids")
    n: int = Field(..., description="Sample size")
    seed: int = Field(..., description="Generator seed")
    numbering: str = Field("row-major", description="Vertex numbering of lattice designs")
    theta: List[List[float]] = Field(..., description="True precision matrix, row-major")
    vertex_classes: List[List[int]] = Field(..., description="Vertex color classes")
    edge_classes: List[List[Tuple[int, int]]] = Field(..., description="Edge color classes")


class EstimateDocument(BaseModel):
    """Estimate JSON written by fit/tune (1-based labels)."""
    schema_version: int = Field(SCHEMA_VERSION, description="Schema version")
    p: int = Field(..., description="Variable count")
    n: int = Field(..., description="Sample size")
    variables: List[str] = Field(..., description="Variable names")
    theta: List[List[float]] = Field(..., description="Merged precision matrix, row-major")
    diag: List[float] = Field(..., description="Merged diagonal entries")
    beta: List[float] = Field(..., description="Merged off-diagonal entries, lexicographic")
    vertex_classes: List[List[int]] = Field(..., description="Vertex color classes")
    edge_classes: List[List[Tuple[int, int]]] = Field(..., description="Edge color classes")
    df: int = Field(..., description="Free parameter count")
    bic: float = Field(..., description="Composite-likelihood BIC")
    loglik: float = Field(..., description="Composite log-likelihood of the merged estimate")
    converged: bool = Field(..., description="Whether every solver level converged")
    objective_trace: List[float] = Field(default_factory=list, description="Objective per DC iteration")
    alm_residuals: List[float] = Field(default_factory=list, description="Final residual per DC iteration")
    iterations: Dict[str, int] = Field(default_factory=dict, description="Iteration counts")
    hyper: Hyperparams = Field(..., description="Hyperparameters of the fit")


class TuneTrialRecord(BaseModel):
    """One row of a tuning trace."""
    lambda1: float
    lambda2: float
    lambda3: float
    tau: float
    loglik: Optional[float] = None
    df: Optional[int] = None
    bic: Optional[float] = None
    converged: bool = False
    selected: bool = False
    error: Optional[str] = None


class MetricsDocument(BaseModel):
    """Evaluation of an estimate against the true colored model."""
    mse: float
    tp: int
    fp: int
    fn: int
    f1: float
    d0: float
    d_vertex: List[float]
    d_edge: List[float]
    acc_all: float


class SimulateRequest(BaseModel):
    """Request body for simulating a data set."""
    spec: SimSpec = Field(..., description="Simulation design")


class SimulateResponse(BaseModel):
    """Simulated truth and centered data rows."""
    truth: TruthDocument
    rows: List[List[float]]


class FitRequest(BaseModel):
    """Request body for a single fit with explicit hyperparameters."""
    rows: List[List[float]] = Field(..., min_length=2, description="Observations, one row each")
    variables: Optional[List[str]] = Field(None, description="Optional variable names")
    hyper: Hyperparams = Field(default_factory=Hyperparams, description="Hyperparameters")
    center: bool = Field(True, description="Center columns before fitting")


class TuneRequest(BaseModel):
    """Request body for BIC tuning."""
    rows: List[List[float]] = Field(..., min_length=2, description="Observations, one row each")
    variables: Optional[List[str]] = Field(None, description="Optional variable names")
    grid: TuneGrid = Field(..., description="Tuning grid")
    hyper: Hyperparams = Field(default_factory=Hyperparams, description="Solver controls")
    center: bool = Field(True, description="Center columns before fitting")


class TuneResponse(BaseModel):
    """Winning estimate and the full search trace."""
    estimate: EstimateDocument
    trace: List[TuneTrialRecord]


class EvaluateRequest(BaseModel):
    """Request body for scoring an estimate against a truth."""
    estimate: EstimateDocument
    truth: TruthDocument


class ErrorResponse(BaseModel):
    """Standard error response model."""
    error: str = Field(..., description="Error message")
    details: Optional[str] = Field(None, description="Additional error details")
