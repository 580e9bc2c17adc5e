"""
HTTP Service for Colored Graphical Model Estimation

FastAPI application exposing the estimation toolkit over REST:
- Simulating data sets from the benchmark colored models
- Fitting a colored model with explicit hyperparameters
- Tuning hyperparameters by composite-likelihood BIC
- Scoring an estimate against a known truth

Key Features:
    - Pydantic request/response validation
    - CPU-bound fits run in a worker thread so the event loop stays free
    - Input errors map to 400, solver and tuning failures to 422

API Endpoints:
    - GET /health - Service status
    - POST /api/simulate - Simulate a data set and its truth
    - POST /api/fit - Single fit
    - POST /api/tune - BIC tuning over a grid
    - POST /api/evaluate - Metrics of an estimate against a truth
"""

import asyncio
import logging
from datetime import datetime

from fastapi import APIRouter, FastAPI, HTTPException
from fastapi.responses import JSONResponse

from . import __version__
from .config import settings
from .errors import NonConvergenceError, TuningError
from .estimation.metrics import evaluate
from .estimation.models import PrecisionParams, gram
from .estimation.optimizer import fit
from .estimation.selection import bic_c, tune
from .estimation.simulate import simulate
from .io import data_from_rows, estimate_document, graph_from_labels, metrics_document, truth_document
from .models import (
    ErrorResponse,
    EstimateDocument,
    EvaluateRequest,
    FitRequest,
    MetricsDocument,
    SimulateRequest,
    SimulateResponse,
    TuneRequest,
    TuneResponse,
)

# Configure logging based on debug settings
logging.basicConfig(level=logging.INFO if settings.debug else logging.WARNING)
logger = logging.getLogger(__name__)

app = FastAPI(
    title="Colored GGM API",
    description="Estimation of colored graphical Gaussian models by truncated-L1 composite likelihood",
    version=__version__,
    debug=settings.debug
)

api_router = APIRouter()


def _raise_http(e: Exception, action: str):
    """Translate a toolkit error into an HTTPException."""
    if isinstance(e, ValueError):
        logger.error(f"Validation error: {str(e)}")
        raise HTTPException(status_code=400, detail=str(e))
    if isinstance(e, (NonConvergenceError, TuningError)):
        logger.error(f"Failed to {action}: {str(e)}")
        raise HTTPException(status_code=422, detail=str(e))
    logger.error(f"Failed to {action}: {str(e)}")
    raise HTTPException(status_code=500, detail=f"Failed to {action}: {str(e)}")


@app.get("/health", tags=["Health"])
async def health_check():
    """
    Health check endpoint for monitoring.
    """
    return {
        "message": "Colored GGM API",
        "version": __version__,
        "status": "healthy",
        "timestamp": datetime.utcnow().isoformat()
    }


@api_router.post("/simulate", response_model=SimulateResponse, tags=["Simulation"])
async def simulate_data(request: SimulateRequest):
    """
    Simulate a data set from one of the benchmark colored models.

    Returns the truth document and the centered data rows.
    """
    try:
        sim = await asyncio.to_thread(simulate, request.spec)
        return SimulateResponse(
            truth=truth_document(request.spec, sim.theta, sim.graph),
            rows=sim.data.values.tolist(),
        )
    except Exception as e:
        _raise_http(e, "simulate data")


@api_router.post("/fit", response_model=EstimateDocument, tags=["Estimation"])
async def fit_model(request: FitRequest):
    """
    Fit a colored model with explicit hyperparameters.

    A fit that hit an iteration cap is still returned, with converged=false.
    """
    try:
        data = data_from_rows(request.rows, request.variables, request.center)

        def run():
            report = fit(data, request.hyper)
            return report, bic_c(report, gram(data), request.hyper)

        report, estimate = await asyncio.to_thread(run)
        logger.info(f"Fit finished: df={estimate.df}, converged={report.converged}")
        return estimate_document(estimate, report, data, request.hyper)
    except Exception as e:
        _raise_http(e, "fit model")


@api_router.post("/tune", response_model=TuneResponse, tags=["Estimation"])
async def tune_model(request: TuneRequest):
    """
    Tune (lambda1, lambda2, lambda3, tau) by BIC over a grid.

    Returns the winning estimate and one trace record per fitted tuple.
    """
    try:
        data = data_from_rows(request.rows, request.variables, request.center)
        result = await asyncio.to_thread(tune, data, request.grid, request.hyper, 1)
        return TuneResponse(
            estimate=estimate_document(result.estimate, result.report, data, result.hyper),
            trace=result.trace,
        )
    except Exception as e:
        _raise_http(e, "tune model")


@api_router.post("/evaluate", response_model=MetricsDocument, tags=["Evaluation"])
async def evaluate_estimate(request: EvaluateRequest):
    """
    Score an estimate against a truth document.
    """
    try:
        estimate, truth = request.estimate, request.truth
        params = PrecisionParams(diag=estimate.diag, beta=estimate.beta)
        graph = graph_from_labels(truth.p, truth.vertex_classes, truth.edge_classes)
        report = evaluate(params, truth.theta, graph, estimate.hyper.eps_zero, estimate.hyper.eps_merge)
        return metrics_document(report)
    except Exception as e:
        _raise_http(e, "evaluate estimate")


app.include_router(api_router, prefix="/api")


@app.exception_handler(Exception)
async def global_exception_handler(request, exc):
    """
    Global exception handler for unhandled errors.

    In debug mode the response includes the error details.
    """
    logger.error(f"Unhandled exception: {str(exc)}")
    return JSONResponse(
        status_code=500,
        content=ErrorResponse(
            error="Internal server error",
            details=str(exc) if settings.debug else None,
        ).model_dump()
    )


# Development server entry point
if __name__ == "__main__":
    import uvicorn
    uvicorn.run(
        "colored_ggm.main:app",
        host=settings.host,
        port=settings.port,
        reload=settings.debug
    )
