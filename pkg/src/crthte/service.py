"""Stateless HTTP JSON API.

Endpoints (versioned path, schema version in every envelope):

    POST /api/v1/solve         solve one of {power, n, m, delta}
    POST /api/v1/sweep         labelled (x, y) series for the plot modes
    POST /api/v1/design/parse  design CSV text -> treatment matrix JSON
    GET  /healthz              build/version info

Responses wrap results as {"status": "ok", "api_version": "1", "result": ...}
or {"status": "error", "error": {code, message, field}}. Validation failures
map to 422 with the offending field, infeasible targets to 409 with the
asymptotic-power diagnostic, malformed CSV to 400 with line/column, and
oversized bodies to 413. Every computation is a pure function of the request
body, so identical bodies always yield identical responses.

Request caps: body <= 1 MiB, sweep points <= 2000, m*J <= 20000.
"""

from __future__ import annotations

from typing import Literal

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import API_VERSION, SCHEMA_VERSION, __version__
from . import montecarlo, scenario, solver
from .designs import parse_csv
from .errors import (
    ConfigurationError,
    DesignParseError,
    EstimabilityError,
    InfeasibleError,
    ResourceLimitError,
    ValidationError,
)

MAX_BODY_BYTES = 1 << 20
MAX_SWEEP_POINTS = 2000
MAX_CELLS = 20_000

app = FastAPI(title="crthte", version=__version__, docs_url=None, redoc_url=None)


def _ok(result: dict) -> JSONResponse:
    return JSONResponse({"status": "ok", "api_version": API_VERSION,
                         "schema_version": SCHEMA_VERSION, "result": result})


def _error(status: int, code: str, message: str, field: str | None = None,
           extra: dict | None = None) -> JSONResponse:
    err = {"code": code, "message": message, "field": field}
    if extra:
        err.update(extra)
    return JSONResponse({"status": "error", "api_version": API_VERSION, "error": err},
                        status_code=status)


@app.middleware("http")
async def _body_cap(request: Request, call_next):
    length = request.headers.get("content-length")
    if length is not None and int(length) > MAX_BODY_BYTES:
        return _error(413, "body_too_large", f"request body exceeds {MAX_BODY_BYTES} bytes")
    return await call_next(request)


@app.exception_handler(RequestValidationError)
async def _schema_error(request: Request, exc: RequestValidationError):
    first = exc.errors()[0] if exc.errors() else {}
    loc = ".".join(str(p) for p in first.get("loc", []) if p not in ("body",))
    return _error(422, "validation_error", first.get("msg", "invalid request"), field=loc or None)


@app.exception_handler(ValidationError)
async def _domain_validation(request: Request, exc: ValidationError):
    return _error(422, "validation_error", str(exc), field=exc.field)


@app.exception_handler(ConfigurationError)
async def _config_error(request: Request, exc: ConfigurationError):
    return _error(422, "configuration_error", str(exc))


@app.exception_handler(EstimabilityError)
async def _estimability_error(request: Request, exc: EstimabilityError):
    return _error(422, "inestimable", str(exc), field=exc.coordinate)


@app.exception_handler(ResourceLimitError)
async def _resource_error(request: Request, exc: ResourceLimitError):
    return _error(413, "resource_limit", str(exc))


@app.exception_handler(InfeasibleError)
async def _infeasible_error(request: Request, exc: InfeasibleError):
    return _error(409, "infeasible_target", str(exc),
                  extra={"asymptotic_power": exc.asymptotic_power})


@app.exception_handler(DesignParseError)
async def _parse_error(request: Request, exc: DesignParseError):
    return _error(400, "design_parse_error", str(exc),
                  extra={"line": exc.line, "column": exc.column})


class ScenarioBody(BaseModel):
    """Calculator vocabulary; field names match the CLI flags."""

    design: str
    periods: int | None = None
    sequences: int | None = None
    clusters: int | None = None
    cluster_size: int | None = None
    pi: float = 0.5
    sampling: Literal["cross_sectional", "closed_cohort"] = "cross_sectional"
    subclusters: int | None = None
    randomization_level: Literal["cluster", "subcluster"] = "cluster"
    design_csv: str | None = None
    arm_m: tuple[int, int] | None = None
    arm_icc: tuple[float, float] | None = None
    arm_sd: tuple[float, float] | None = None
    outcome_type: Literal["continuous", "binary"] = "continuous"
    outcome_sd: float | None = None
    outcome_prevalence: float | None = None
    icc_outcome: float = 0.0
    cac_outcome: float | None = None
    icc0_outcome: float | None = None
    covariate_type: Literal["continuous", "binary"] = "continuous"
    covariate_sd: float | None = None
    covariate_mean: float = 0.0
    prevalence: float | None = None
    covariate_level: Literal["individual", "cluster"] = "individual"
    icc_covariate: float = 0.0
    cac_covariate: float | None = None
    delta: float | None = None
    standardized: bool = False
    alpha: float = Field(default=0.05, gt=0.0, lt=1.0)
    power: float | None = None
    df: Literal["normal", "t"] = "normal"
    direction: Literal["positive", "negative"] = "positive"
    icc_outcome_range: tuple[float, float] | None = None
    cac_outcome_range: tuple[float, float] | None = None
    icc_covariate_range: tuple[float, float] | None = None
    cac_covariate_range: tuple[float, float] | None = None

    def params(self) -> dict:
        return self.model_dump()


class SolveBody(ScenarioBody):
    target: Literal["power", "n", "m", "delta"]


class SweepBody(ScenarioBody):
    axis: Literal["m_vs_power", "n_vs_power", "m_vs_n", "delta_vs_power"]
    range: tuple[float, float] | tuple[float, float, int]
    points: int | None = Field(default=None, ge=1, le=MAX_SWEEP_POINTS)


class DesignParseBody(BaseModel):
    csv: str


def _check_cells(body: ScenarioBody) -> None:
    m = body.cluster_size or 1
    J = body.periods or 1
    if m * J > MAX_CELLS:
        raise ResourceLimitError(f"m*J = {m * J} exceeds the request cap {MAX_CELLS}")


@app.get("/healthz")
async def healthz():
    return {"status": "ok", "version": __version__, "api_version": API_VERSION}


@app.post("/api/v1/solve")
async def solve_endpoint(body: SolveBody):
    _check_cells(body)
    request = scenario.build_request(body.params(), body.target)
    result = solver.solve(request)
    return _ok(result.to_payload())


@app.post("/api/v1/sweep")
async def sweep_endpoint(body: SweepBody):
    _check_cells(body)
    request = scenario.build_sweep_request(body.params(), body.axis)
    rng = body.range
    count = body.points if body.points is not None else (int(rng[2]) if len(rng) == 3 else 25)
    if count > MAX_SWEEP_POINTS:
        raise ValidationError(f"sweep points capped at {MAX_SWEEP_POINTS}", field="points")
    lo, hi = float(rng[0]), float(rng[1])
    if hi < lo:
        raise ValidationError("range must be lo <= hi", field="range")
    if body.axis in ("m_vs_power", "n_vs_power", "m_vs_n"):
        values = np.unique(np.round(np.linspace(lo, hi, count)).astype(int))
        grid = [float(v) for v in values if v >= 1]
    else:
        grid = [float(v) for v in np.linspace(lo, hi, count)]
    series_list = solver.sweep(request, body.axis, grid)
    return _ok({"axis": body.axis, "series": [s.to_payload() for s in series_list]})


@app.post("/api/v1/design/parse")
async def design_parse_endpoint(body: DesignParseBody):
    matrix = parse_csv(body.csv)
    return _ok(
        {
            "rows": [list(r) for r in matrix.rows],
            "clusters_per_sequence": list(matrix.clusters_per_sequence),
            "periods": matrix.n_periods,
            "sequences": matrix.n_sequences,
            "n_total": matrix.n_total,
        }
    )


@app.post("/api/v1/simulate")
async def simulate_endpoint(body: SolveBody):
    _check_cells(body)
    request = scenario.build_request(body.params(), "power")
    analytic = solver.solve_power(request).achieved_power
    reps = 1000
    mc = montecarlo.empirical_power(request, request.delta, reps, seed=0, keep_replicates=False)
    return _ok({**mc.to_payload(), "analytic_power": analytic})


def mount_ui(application: FastAPI, directory: str) -> None:
    """Serve the web UI's static bundle at the root path.

    Mounted last, so the /api/v1 and /healthz routes keep precedence.
    """
    from fastapi.staticfiles import StaticFiles

    application.mount("/", StaticFiles(directory=directory, html=True), name="ui")
