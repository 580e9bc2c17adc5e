"""
Simulation Designs

True colored precision matrices for the three benchmark families and a
seeded multivariate normal sampler.

Families (1-based vertex labels in the descriptions, 0-based in the arrays):
    - star: theta_ii = 1 for leaves, 2 at the hub p, 0.25 on every spoke;
      positive definite for p <= 32
    - cycle: theta_ii = 1 (odd i) or 1.5 (even i); edge (i-1, i) is 0.5 when
      i is odd and 0.3 when i is even; the closing edge (1, p) follows the
      parity of p
    - grid: q x q lattice numbered row-major, theta_ii = 3 (odd i) or
      5 (even i), 0.8 on every horizontal and vertical neighbor pair

Sampling uses numpy's PCG64 generator (np.random.default_rng) with its
ziggurat standard normals, so a (family, size, n, seed) design reproduces
the same matrix on every platform.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cholesky, solve_triangular

from ..errors import InputError
from ..models import Family, SimSpec
from .models import ColoredGraph, DataMatrix, VertexPair, center_columns

logger = logging.getLogger(__name__)


def _graph_from_values(p: int, diag: np.ndarray, edges: Dict[VertexPair, float]) -> ColoredGraph:
    """Color classes: vertices/edges sharing a value, ordered by smallest member."""
    vertex_classes: Dict[float, List[int]] = {}
    for v, value in enumerate(diag):
        vertex_classes.setdefault(float(value), []).append(v)
    edge_classes: Dict[float, List[VertexPair]] = {}
    for pair in sorted(edges):
        edge_classes.setdefault(edges[pair], []).append(pair)
    return ColoredGraph(
        p=p,
        vertex_classes=tuple(sorted((tuple(block) for block in vertex_classes.values()), key=min)),
        edge_classes=tuple(sorted((tuple(block) for block in edge_classes.values()), key=min)),
    )


def _assemble(p: int, diag: np.ndarray, edges: Dict[VertexPair, float]) -> Tuple[np.ndarray, ColoredGraph]:
    theta = np.diag(diag)
    for (q, l), value in edges.items():
        theta[q, l] = theta[l, q] = value
    return theta, _graph_from_values(p, diag, edges)


def star_precision(p: int) -> Tuple[np.ndarray, ColoredGraph]:
    """
    Star with hub p: leaves share one color, spokes share one color.

    Raises:
        InputError: If p < 3
    """
    if p < 3:
        raise InputError(f"star family requires p >= 3, got {p}")
    diag = np.ones(p)
    diag[-1] = 2.0
    edges = {(i, p - 1): 0.25 for i in range(p - 1)}
    return _assemble(p, diag, edges)


def cycle_precision(p: int) -> Tuple[np.ndarray, ColoredGraph]:
    """
    Cycle 1-2-...-p-1 with alternating vertex and edge colors.

    Raises:
        InputError: If p < 3
    """
    if p < 3:
        raise InputError(f"cycle family requires p >= 3, got {p}")
    labels = np.arange(1, p + 1)
    diag = np.where(labels % 2 == 1, 1.0, 1.5)
    edges = {(i - 2, i - 1): (0.5 if i % 2 == 1 else 0.3) for i in range(2, p + 1)}
    edges[(0, p - 1)] = 0.5 if p % 2 == 1 else 0.3
    return _assemble(p, diag, edges)


def grid_precision(q: int) -> Tuple[np.ndarray, ColoredGraph]:
    """
    q x q lattice, vertices numbered row-major.

    Raises:
        InputError: If q < 2
    """
    if q < 2:
        raise InputError(f"grid family requires q >= 2, got {q}")
    p = q * q
    labels = np.arange(1, p + 1)
    diag = np.where(labels % 2 == 1, 3.0, 5.0)
    edges = {}
    for row in range(q):
        for col in range(q):
            v = row * q + col
            if col < q - 1:
                edges[(v, v + 1)] = 0.8
            if row < q - 1:
                edges[(v, v + q)] = 0.8
    return _assemble(p, diag, edges)


def true_model(spec: SimSpec) -> Tuple[np.ndarray, ColoredGraph]:
    """True precision matrix and colored graph of a design."""
    if spec.family == Family.STAR:
        return star_precision(spec.p)
    if spec.family == Family.CYCLE:
        return cycle_precision(spec.p)
    if spec.family == Family.GRID:
        return grid_precision(spec.q)
    raise InputError(f"unknown family {spec.family}")


def sample_mvn(theta: np.ndarray, n: int, seed: int) -> DataMatrix:
    """
    Draw n rows from N(0, theta^-1) and center them.

    With theta = L L^T, each row is L^-T z for a standard normal z.

    Raises:
        InputError: If theta is not symmetric positive definite or n < 2
    """
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 2 or theta.shape[0] != theta.shape[1] or not np.allclose(theta, theta.T):
        raise InputError("precision matrix must be square and symmetric")
    if n < 2:
        raise InputError(f"sample size must be at least 2, got {n}")
    try:
        factor = cholesky(theta, lower=True)
    except LinAlgError as e:
        raise InputError(f"precision matrix is not positive definite: {e}") from e
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, theta.shape[0]))
    x = solve_triangular(factor, z.T, lower=True, trans="T").T
    return center_columns(DataMatrix(values=x))


@dataclass(frozen=True, eq=False)
class Simulation:
    """A simulated data set with the model it was drawn from."""
    spec: SimSpec
    theta: np.ndarray
    graph: ColoredGraph
    data: DataMatrix


def simulate(spec: SimSpec) -> Simulation:
    """Build the true model of a design and sample its data set."""
    theta, graph = true_model(spec)
    logger.debug(f"Sampling {spec.family.value} design p={graph.p} n={spec.n} seed={spec.seed}")
    return Simulation(spec=spec, theta=theta, graph=graph, data=sample_mvn(theta, spec.n, spec.seed))
