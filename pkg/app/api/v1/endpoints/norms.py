import numpy as np
from fastapi import APIRouter

from app.lattice.bodies import body_diagnostics, gauge
from app.lattice.norms import build_oracle, infer_dimension
from app.schemas.schemas import (
    BaseResponse, DiagnosticsRequest, EvaluateRequest, GaugeRequest, parse_body_spec, parse_norm_spec
)
from app.utils.helpers import format_success_response

router = APIRouter()


@router.post("/evaluate", response_model=BaseResponse)
def evaluate_norm(request: EvaluateRequest):
    """Evaluate a norm spec at a batch of points"""
    spec = parse_norm_spec(request.spec)
    dimension = request.dimension
    if dimension is None and infer_dimension(spec) is None:
        dimension = len(request.points[0])
    oracle = build_oracle(spec, dimension)
    values = oracle.evaluate_many(np.asarray(request.points, dtype=float))
    return format_success_response(
        message="Norm evaluated",
        data={"dimension": oracle.dimension, "values": values.tolist()}
    )


@router.post("/gauge", response_model=BaseResponse)
def gauge_value(request: GaugeRequest):
    """Minkowski functional of a body at one point"""
    body = parse_body_spec(request.body)
    value = gauge(body, request.point, request.tol)
    return format_success_response(message="Gauge evaluated", data={"value": value})


@router.post("/diagnostics", response_model=BaseResponse)
def diagnose_body(request: DiagnosticsRequest):
    body = parse_body_spec(request.body)
    report = body_diagnostics(body, request.dimension, request.samples, request.seed)
    return format_success_response(message="Body diagnostics finished", data=report.model_dump(mode="json"))
