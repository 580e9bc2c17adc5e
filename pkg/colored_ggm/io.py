"""
File Input and Output

Reads and writes every file the command line touches:
    - data CSV: comma-separated, '.' decimals, one sample per row; a first
      row with any non-numeric cell is taken as the header of variable names
    - truth JSON and estimate JSON: versioned pydantic documents with
      1-based vertex labels
    - trace, replicate and summary CSV tables (pandas)

Floats in CSV files are written with 17 significant digits and JSON floats
with their shortest round-trip representation, so values read back are
bit-identical to the values written.
"""

import csv
import json
import logging
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Type, TypeVar

import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError

from .errors import InputError
from .estimation.models import (
    ColoredGraph,
    ColoredGraphEstimate,
    DataMatrix,
    FitReport,
    MetricsReport,
    PrecisionParams,
    center_columns,
)
from .models import SCHEMA_VERSION, EstimateDocument, Hyperparams, MetricsDocument, SimSpec, TruthDocument

logger = logging.getLogger(__name__)

Document = TypeVar("Document", bound=BaseModel)

FLOAT_FORMAT = "%.17g"


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def parse_rows(rows: Sequence[Sequence[str]], variables: Optional[Sequence[str]] = None) -> DataMatrix:
    """
    Convert string rows into a DataMatrix (not centered).

    The first row is a header when any of its cells is non-numeric. Rows are
    reported 1-based as they appear in the file, header included.

    Raises:
        InputError: On empty input, ragged rows, non-numeric or non-finite cells
    """
    rows = [list(row) for row in rows if any(cell.strip() for cell in row)]
    if not rows:
        raise InputError("data file is empty")
    first_data = 0
    names = list(variables) if variables else None
    if not all(_is_number(cell) for cell in rows[0]):
        names = [cell.strip() for cell in rows[0]]
        first_data = 1
    width = len(rows[first_data]) if len(rows) > first_data else len(rows[0])
    if names is not None and len(names) != width:
        raise InputError(f"header has {len(names)} columns, data rows have {width}")
    values = np.empty((len(rows) - first_data, width))
    for r, row in enumerate(rows[first_data:]):
        line = r + first_data + 1
        if len(row) != width:
            raise InputError(f"row {line}: expected {width} columns, found {len(row)}")
        for c, cell in enumerate(row):
            try:
                values[r, c] = float(cell)
            except ValueError:
                raise InputError(f"row {line}, column {c + 1}: non-numeric value {cell.strip()!r}") from None
            if not np.isfinite(values[r, c]):
                raise InputError(f"row {line}, column {c + 1}: non-finite value {cell.strip()!r}")
    return DataMatrix(values=values, variables=tuple(names) if names else ())


def read_data_csv(path: Path, center: bool = True) -> DataMatrix:
    """
    Load a data CSV (samples as rows, variables as columns).

    Args:
        path: CSV file
        center: Subtract column means; otherwise the columns must already
            have mean zero (within 1e-8 of the column scale)

    Raises:
        InputError: If the file is missing or malformed
    """
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            data = parse_rows(list(csv.reader(handle)))
    except OSError as e:
        raise InputError(f"cannot read data file {path}: {e}") from e
    logger.debug(f"Read {data.n} x {data.p} data matrix from {path}")
    if center:
        return center_columns(data)
    scale = np.maximum(np.abs(data.values).max(axis=0), 1.0)
    if np.any(np.abs(data.values.mean(axis=0)) > 1e-8 * scale):
        raise InputError("data columns are not centered; enable centering")
    return DataMatrix(values=data.values, centered=True, variables=data.variables)


def write_data_csv(path: Path, data: DataMatrix):
    """Write a data matrix with its variable names as header."""
    frame = pd.DataFrame(data.values, columns=list(data.variables))
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def write_table_csv(path: Path, rows: List[Dict[str, Any]], columns: Optional[Sequence[str]] = None):
    """Write a list of flat records as a CSV table."""
    frame = pd.DataFrame(rows, columns=list(columns) if columns else None)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def write_json(path: Path, document: BaseModel):
    Path(path).write_text(document.model_dump_json(indent=2) + "\n", encoding="utf-8")


def read_json(path: Path, model: Type[Document]) -> Document:
    """
    Load and validate a JSON document.

    Raises:
        InputError: If the file is missing, not JSON, fails validation or
            carries an unknown schema version
    """
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
        document = model.model_validate(payload)
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise InputError(f"{path} is not valid JSON: {e}") from e
    except ValidationError as e:
        raise InputError(f"{path} is not a valid {model.__name__}: {e}") from e
    version = getattr(document, "schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise InputError(f"{path}: unsupported schema_version {version}")
    return document


def _classes_to_labels(graph: ColoredGraph) -> Tuple[List[List[int]], List[List[Tuple[int, int]]]]:
    vertex_classes = [[v + 1 for v in block] for block in graph.vertex_classes]
    edge_classes = [[(q + 1, l + 1) for q, l in block] for block in graph.edge_classes]
    return vertex_classes, edge_classes


def graph_from_labels(p: int, vertex_classes: Sequence[Sequence[int]],
                      edge_classes: Sequence[Sequence[Sequence[int]]]) -> ColoredGraph:
    """
    Rebuild a 0-based ColoredGraph from 1-based class lists.

    Raises:
        InputError: If the classes do not form a valid colored graph
    """
    return ColoredGraph(
        p=p,
        vertex_classes=tuple(tuple(int(v) - 1 for v in block) for block in vertex_classes),
        edge_classes=tuple(tuple((int(q) - 1, int(l) - 1) for q, l in block) for block in edge_classes),
    )


def truth_document(spec: SimSpec, theta: np.ndarray, graph: ColoredGraph) -> TruthDocument:
    vertex_classes, edge_classes = _classes_to_labels(graph)
    return TruthDocument(
        family=spec.family,
        p=graph.p,
        q=spec.q,
        n=spec.n,
        seed=spec.seed,
        theta=np.asarray(theta, dtype=float).tolist(),
        vertex_classes=vertex_classes,
        edge_classes=edge_classes,
    )


def read_truth(path: Path) -> Tuple[TruthDocument, np.ndarray, ColoredGraph]:
    """Truth document, its precision matrix and its 0-based colored graph."""
    document = read_json(path, TruthDocument)
    theta = np.asarray(document.theta, dtype=float)
    if theta.shape != (document.p, document.p):
        raise InputError(f"{path}: theta is {theta.shape}, expected ({document.p}, {document.p})")
    return document, theta, graph_from_labels(document.p, document.vertex_classes, document.edge_classes)


def estimate_document(
    estimate: ColoredGraphEstimate,
    report: FitReport,
    data: DataMatrix,
    hyper: Hyperparams,
) -> EstimateDocument:
    """Serializable record of a scored fit."""
    vertex_classes, edge_classes = _classes_to_labels(estimate.graph)
    return EstimateDocument(
        p=data.p,
        n=data.n,
        variables=list(data.variables),
        theta=estimate.params.to_matrix().tolist(),
        diag=estimate.params.diag.tolist(),
        beta=estimate.params.beta.tolist(),
        vertex_classes=vertex_classes,
        edge_classes=edge_classes,
        df=estimate.df,
        bic=estimate.bic,
        loglik=estimate.loglik,
        converged=report.converged,
        objective_trace=list(report.objective_trace),
        alm_residuals=[residuals[-1] for residuals in report.alm_residuals if residuals],
        iterations={"dc": report.dc_iterations, "alm": report.alm_iterations, "cd_sweeps": report.cd_sweeps},
        hyper=hyper,
    )


def read_estimate(path: Path) -> Tuple[EstimateDocument, PrecisionParams, ColoredGraph]:
    """Estimate document, its merged parameters and its 0-based colored graph."""
    document = read_json(path, EstimateDocument)
    try:
        params = PrecisionParams(diag=document.diag, beta=document.beta)
    except InputError as e:
        raise InputError(f"{path}: {e}") from e
    if params.p != document.p:
        raise InputError(f"{path}: diag has {params.p} entries, p is {document.p}")
    return document, params, graph_from_labels(document.p, document.vertex_classes, document.edge_classes)


def data_from_rows(rows: Sequence[Sequence[float]], variables: Optional[Sequence[str]] = None,
                   center: bool = True) -> DataMatrix:
    """
    Build a DataMatrix from in-memory rows (HTTP request bodies).

    Raises:
        InputError: On ragged rows or invalid values
    """
    if not rows:
        raise InputError("no data rows given")
    width = len(rows[0])
    for r, row in enumerate(rows):
        if len(row) != width:
            raise InputError(f"row {r + 1}: expected {width} columns, found {len(row)}")
    data = DataMatrix(values=np.asarray(rows, dtype=float), variables=tuple(variables or ()))
    return center_columns(data) if center else DataMatrix(values=data.values, centered=True, variables=data.variables)


def metrics_document(report: MetricsReport) -> MetricsDocument:
    return MetricsDocument(**asdict(report))
