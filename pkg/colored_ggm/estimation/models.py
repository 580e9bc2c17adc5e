"""
Estimation Domain Models

This module defines the core domain types shared by every estimation module:
- DataMatrix: centered n x p observations
- GramCache: the sufficient statistic S = X^T X
- PrecisionParams: diagonal entries plus lexicographic off-diagonal entries
- ColoredGraph / ColoredGraphEstimate: zero pattern and color classes
- ActiveSets / AugmentedState: surrogate and augmented Lagrangian state
- FitReport / MetricsReport: solver and evaluation outcomes

Key Features:
    - Dataclass-based models, immutable after construction
    - Storage is (diag, beta) only; the full matrix is a derived view
    - All vertex and slot indices are 0-based

Architecture:
    - Numeric arrays are copied and marked read-only on construction so the
      same instance can be shared across concurrent fits
"""

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import FrozenSet, List, Optional, Tuple

import numpy as np

from ..errors import InputError

VertexPair = Tuple[int, int]


def _frozen(values, dtype=float) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@lru_cache(maxsize=64)
def pair_arrays(p: int) -> Tuple[np.ndarray, np.ndarray]:
    """Row and column indices of the lexicographic off-diagonal slots."""
    rows, cols = np.triu_indices(p, 1)
    rows.setflags(write=False)
    cols.setflags(write=False)
    return rows, cols


def pair_index(q: int, l: int, p: int) -> int:
    """
    Lexicographic slot of the off-diagonal pair (q, l), q < l.

    (0, 1) -> 0, (0, 2) -> 1, ..., (p-2, p-1) -> p(p-1)/2 - 1.

    Raises:
        InputError: If q >= l or either vertex is out of range
    """
    if not (0 <= q < l < p):
        raise InputError(f"invalid vertex pair ({q}, {l}) for p={p}")
    return q * (2 * p - q - 1) // 2 + (l - q - 1)


def pair_from_index(j: int, p: int) -> VertexPair:
    """Inverse of pair_index."""
    if not (0 <= j < p * (p - 1) // 2):
        raise InputError(f"slot {j} out of range for p={p}")
    q = 0
    row_length = p - 1
    while j >= row_length:
        j -= row_length
        q += 1
        row_length -= 1
    return q, q + 1 + j


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """
    Observation matrix, one row per sample.

    Attributes:
        values: n x p real matrix
        centered: Whether every column has mean zero
        variables: Column names (x1..xp unless read from a header)
    """
    values: np.ndarray
    centered: bool = False
    variables: Tuple[str, ...] = ()

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise InputError("data must be a two-dimensional matrix")
        n, p = values.shape
        if n < 2 or p < 2:
            raise InputError(f"data needs n >= 2 and p >= 2, got n={n}, p={p}")
        if not np.all(np.isfinite(values)):
            raise InputError("data contains non-finite values")
        object.__setattr__(self, "values", _frozen(values))
        names = tuple(self.variables) or tuple(f"x{i + 1}" for i in range(p))
        if len(names) != p:
            raise InputError(f"{len(names)} variable names for {p} columns")
        object.__setattr__(self, "variables", names)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


def center_columns(data: DataMatrix) -> DataMatrix:
    """
    Subtract each column mean; the input is left untouched.

    Raises:
        InputError: If fewer than two observations are given
    """
    if data.n < 2:
        raise InputError("centering needs at least two observations")
    values = data.values - data.values.mean(axis=0)
    return DataMatrix(values=values, centered=True, variables=data.variables)


@dataclass(frozen=True, eq=False)
class GramCache:
    """
    Sufficient statistics of every likelihood evaluation.

    Attributes:
        S: p x p matrix X^T X
        n: Sample count of the source data
        source_id: Identity of the DataMatrix it was built from
    """
    S: np.ndarray
    n: int
    source_id: int = 0

    @property
    def p(self) -> int:
        return self.S.shape[0]


def gram(data: DataMatrix) -> GramCache:
    """
    Precompute S = X^T X for centered data.

    Raises:
        InputError: If the data is not centered
    """
    if not data.centered:
        raise InputError("gram products require centered data")
    S = data.values.T @ data.values
    S = 0.5 * (S + S.T)
    return GramCache(S=_frozen(S), n=data.n, source_id=id(data))


@dataclass(frozen=True, eq=False)
class PrecisionParams:
    """
    Parameter vector theta = (diagonal entries, lexicographic off-diagonals).

    Attributes:
        diag: length-p strictly positive diagonal entries
        beta: length p(p-1)/2 off-diagonal entries, slot pair_index(q, l, p)
    """
    diag: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        diag = np.asarray(self.diag, dtype=float).ravel()
        beta = np.asarray(self.beta, dtype=float).ravel()
        p = diag.size
        if p < 2:
            raise InputError("precision parameters need p >= 2")
        if beta.size != p * (p - 1) // 2:
            raise InputError(f"expected {p * (p - 1) // 2} off-diagonal entries, got {beta.size}")
        if not np.all(diag > 0):
            raise InputError("diagonal entries must be strictly positive")
        if not (np.all(np.isfinite(diag)) and np.all(np.isfinite(beta))):
            raise InputError("precision parameters must be finite")
        object.__setattr__(self, "diag", _frozen(diag))
        object.__setattr__(self, "beta", _frozen(beta))

    @property
    def p(self) -> int:
        return self.diag.size

    def to_matrix(self) -> np.ndarray:
        """Full symmetric matrix view."""
        rows, cols = pair_arrays(self.p)
        theta = np.zeros((self.p, self.p))
        theta[rows, cols] = self.beta
        theta[cols, rows] = self.beta
        theta[np.diag_indices(self.p)] = self.diag
        return theta

    @classmethod
    def from_matrix(cls, theta: np.ndarray) -> "PrecisionParams":
        theta = np.asarray(theta, dtype=float)
        if theta.ndim != 2 or theta.shape[0] != theta.shape[1]:
            raise InputError("precision matrix must be square")
        if not np.allclose(theta, theta.T, rtol=0, atol=1e-12):
            raise InputError("precision matrix must be symmetric")
        rows, cols = pair_arrays(theta.shape[0])
        return cls(diag=np.diag(theta), beta=theta[rows, cols])

    @classmethod
    def initial(cls, g: GramCache) -> "PrecisionParams":
        """theta_jj = n / S_jj, beta = 0: the penalty-free stationary point at beta = 0."""
        s_diag = np.diag(g.S)
        if np.any(s_diag <= 0):
            column = int(np.flatnonzero(s_diag <= 0)[0]) + 1
            raise InputError(f"column {column} has zero variance")
        return cls(diag=g.n / s_diag, beta=np.zeros(g.p * (g.p - 1) // 2))


@dataclass(frozen=True)
class ColoredGraph:
    """
    Colored graph: vertex color classes plus an edge set partitioned into
    edge color classes. Vertices and pairs are 0-based, pairs ordered q < l.
    """
    p: int
    vertex_classes: Tuple[Tuple[int, ...], ...]
    edge_classes: Tuple[Tuple[VertexPair, ...], ...] = ()

    def __post_init__(self):
        vertex_classes = tuple(tuple(sorted(int(v) for v in block)) for block in self.vertex_classes)
        edge_classes = tuple(
            tuple(sorted((min(int(a), int(b)), max(int(a), int(b))) for a, b in block))
            for block in self.edge_classes
        )
        members = [v for block in vertex_classes for v in block]
        if any(len(block) == 0 for block in vertex_classes) or sorted(members) != list(range(self.p)):
            raise InputError("vertex classes must be nonempty, disjoint and cover every vertex")
        pairs = [e for block in edge_classes for e in block]
        if any(len(block) == 0 for block in edge_classes) or len(set(pairs)) != len(pairs):
            raise InputError("edge classes must be nonempty and disjoint")
        if any(not (0 <= a < b < self.p) for a, b in pairs):
            raise InputError("edge endpoints out of range")
        object.__setattr__(self, "vertex_classes", vertex_classes)
        object.__setattr__(self, "edge_classes", edge_classes)

    @property
    def edge_set(self) -> FrozenSet[VertexPair]:
        return frozenset(e for block in self.edge_classes for e in block)

    def support(self) -> np.ndarray:
        """Boolean mask over the lexicographic slots that carry an edge."""
        mask = np.zeros(self.p * (self.p - 1) // 2, dtype=bool)
        for q, l in self.edge_set:
            mask[pair_index(q, l, self.p)] = True
        return mask


@dataclass(frozen=True, eq=False)
class ColoredGraphEstimate:
    """
    Post-processed fit: merged parameters, colored graph and model size.

    Attributes:
        params: Parameters after thresholding and class averaging
        graph: Recovered colored graph
        df: Number of vertex classes plus number of edge classes
        loglik: Composite log-likelihood of params (set by bic_c)
        bic: Composite-likelihood BIC (set by bic_c)
    """
    params: PrecisionParams
    graph: ColoredGraph
    df: int
    loglik: Optional[float] = None
    bic: Optional[float] = None


@dataclass(frozen=True, eq=False)
class Incidence:
    """
    Constraint pairs touching each coordinate.

    For coordinate j, at(j) returns the pair ids, the partner coordinate and
    the sign (+1 when j is the first member of the pair, -1 when second).
    """
    edges: np.ndarray
    others: np.ndarray
    signs: np.ndarray
    bounds: np.ndarray

    @classmethod
    def build(cls, pairs: np.ndarray, size: int) -> "Incidence":
        pairs = np.reshape(pairs, (-1, 2))
        m = len(pairs)
        coords = np.concatenate([pairs[:, 0], pairs[:, 1]])
        others = np.concatenate([pairs[:, 1], pairs[:, 0]])
        signs = np.concatenate([np.ones(m), -np.ones(m)])
        edges = np.concatenate([np.arange(m), np.arange(m)])
        order = np.argsort(coords, kind="stable")
        bounds = np.searchsorted(coords[order], np.arange(size + 1))
        return cls(edges=edges[order], others=others[order], signs=signs[order], bounds=bounds)

    def at(self, j: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        lo, hi = self.bounds[j], self.bounds[j + 1]
        return self.edges[lo:hi], self.others[lo:hi], self.signs[lo:hi]


@dataclass(frozen=True, eq=False)
class ActiveSets:
    """
    Index sets of the convex surrogate built from a previous iterate.

    Attributes:
        diag_pairs: (k, 2) vertex pairs j < j' with |theta_jj - theta_j'j'| < tau
        zero_betas: slots j with |beta_j| < tau
        beta_pairs: (m, 2) slot pairs j < j' with |beta_j - beta_j'| < tau
        p: Dimension
        tau: Threshold used
    """
    diag_pairs: np.ndarray
    zero_betas: np.ndarray
    beta_pairs: np.ndarray
    p: int
    tau: float

    def __post_init__(self):
        object.__setattr__(self, "diag_pairs", _frozen(np.reshape(self.diag_pairs, (-1, 2)), int))
        object.__setattr__(self, "zero_betas", _frozen(np.ravel(self.zero_betas), int))
        object.__setattr__(self, "beta_pairs", _frozen(np.reshape(self.beta_pairs, (-1, 2)), int))

    @property
    def n_slots(self) -> int:
        return self.p * (self.p - 1) // 2

    def vertex_pair_set(self) -> set:
        return {tuple(int(v) for v in pair) for pair in self.diag_pairs}

    def zero_beta_set(self) -> set:
        return {int(j) for j in self.zero_betas}

    def beta_pair_set(self) -> set:
        return {tuple(int(v) for v in pair) for pair in self.beta_pairs}

    @cached_property
    def vertex_incidence(self) -> Incidence:
        return Incidence.build(self.diag_pairs, self.p)

    @cached_property
    def slot_incidence(self) -> Incidence:
        return Incidence.build(self.beta_pairs, self.n_slots)

    @property
    def has_constraints(self) -> bool:
        """Whether any slack variable (and thus any multiplier) exists."""
        return len(self.diag_pairs) > 0 or len(self.beta_pairs) > 0

    def weighted(self, lambda1: float, lambda2: float, lambda3: float) -> "ActiveSets":
        """Copy without the sets whose penalty weight is zero; their surrogate terms vanish."""
        none = np.zeros((0, 2), dtype=int)
        return ActiveSets(
            diag_pairs=self.diag_pairs if lambda1 > 0 else none,
            zero_betas=self.zero_betas if lambda2 > 0 else [],
            beta_pairs=self.beta_pairs if lambda3 > 0 else none,
            p=self.p,
            tau=self.tau,
        )

    def same_as(self, other: Optional["ActiveSets"]) -> bool:
        return (
            other is not None
            and self.p == other.p
            and np.array_equal(self.diag_pairs, other.diag_pairs)
            and np.array_equal(self.zero_betas, other.zero_betas)
            and np.array_equal(self.beta_pairs, other.beta_pairs)
        )


@dataclass(frozen=True, eq=False)
class AugmentedState:
    """
    Slack variables and multipliers of the augmented Lagrangian.

    k, a, b are aligned with sets.diag_pairs; s, c, d with sets.beta_pairs.
    """
    sets: ActiveSets
    k: np.ndarray
    a: np.ndarray
    b: np.ndarray
    s: np.ndarray
    c: np.ndarray
    d: np.ndarray
    rho: float

    def __post_init__(self):
        n_diag = len(self.sets.diag_pairs)
        n_beta = len(self.sets.beta_pairs)
        for name, size in (("k", n_diag), ("a", n_diag), ("b", n_diag),
                           ("s", n_beta), ("c", n_beta), ("d", n_beta)):
            values = np.ravel(np.asarray(getattr(self, name), dtype=float))
            if values.size != size:
                raise InputError(f"{name} has {values.size} entries, active sets need {size}")
            object.__setattr__(self, name, _frozen(values))
        if np.any(self.b <= 0) or np.any(self.d <= 0):
            raise InputError("quadratic multipliers b and d must be positive")

    @classmethod
    def start(cls, sets: ActiveSets, params: PrecisionParams, penalty_init: float, rho: float) -> "AugmentedState":
        """Slacks at the current differences, a = c = 0, b = d = penalty_init."""
        dp, bp = sets.diag_pairs, sets.beta_pairs
        k = params.diag[dp[:, 0]] - params.diag[dp[:, 1]]
        s = params.beta[bp[:, 0]] - params.beta[bp[:, 1]]
        return cls(
            sets=sets,
            k=k, a=np.zeros(len(dp)), b=np.full(len(dp), float(penalty_init)),
            s=s, c=np.zeros(len(bp)), d=np.full(len(bp), float(penalty_init)),
            rho=float(rho),
        )


@dataclass
class FitReport:
    """
    Outcome of one fit.

    Attributes:
        params: Final (best) iterate
        objective_trace: Penalized objective at the start and after each DC iteration
        alm_residuals: Constraint residual after each ALM iteration, per DC iteration
        dc_iterations / alm_iterations / cd_sweeps: Iteration counts
        converged: False when any level hit its cap, stalled or failed
        messages: Human-readable notes on flagged conditions
    """
    params: PrecisionParams
    objective_trace: List[float] = field(default_factory=list)
    alm_residuals: List[List[float]] = field(default_factory=list)
    dc_iterations: int = 0
    alm_iterations: int = 0
    cd_sweeps: int = 0
    converged: bool = True
    messages: List[str] = field(default_factory=list)

    def mark_flagged(self, message: str):
        """Record a nonconvergence condition."""
        self.converged = False
        self.messages.append(message)


@dataclass(frozen=True)
class MetricsReport:
    """Evaluation of an estimate against the true colored model."""
    mse: float
    tp: int
    fp: int
    fn: int
    f1: float
    d0: float
    d_vertex: Tuple[float, ...]
    d_edge: Tuple[float, ...]
    acc_all: float
