from fastapi import APIRouter, Depends, HTTPException, status
from sqlalchemy.orm import Session
from app.core.config import settings
from app.core.exceptions import LatticeLabError
from app.core.logging import get_logger
from app.db.database import get_db
from app.lattice.norms import build_oracle
from app.schemas.schemas import AnalysisRequest, BaseResponse, parse_norm_spec
from app.services.report_service import ReportService
from app.tasks.analysis_tasks import run_analysis
from app.utils.helpers import format_success_response, format_error_response

logger = get_logger(__name__)

router = APIRouter()


@router.post("/", response_model=BaseResponse, status_code=status.HTTP_202_ACCEPTED)
async def create_analysis(
    request: AnalysisRequest,
    db: Session = Depends(get_db)
):
    """Queue a full property analysis of a norm spec"""
    try:
        # reject bad specs before anything is stored
        spec = parse_norm_spec(request.spec)
        build_oracle(spec, request.dimension)

        report_service = ReportService(db)
        budget = settings.default_budget if request.budget is None else request.budget
        seed = settings.default_seed if request.seed is None else request.seed
        report = report_service.create_report(request, budget=budget, seed=seed)

        task = run_analysis.delay(report.id)
        report_service.set_task_id(report, task.id)
        db.refresh(report)

        return format_success_response(
            message="Analysis queued",
            data=ReportService.to_response(report)
        )
    except LatticeLabError:
        raise
    except Exception as e:
        logger.error("Failed to queue analysis", error=str(e))
        raise HTTPException(
            status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
            detail=format_error_response("Failed to queue analysis")
        )


@router.get("/{report_id}", response_model=BaseResponse)
async def get_analysis(
    report_id: int,
    db: Session = Depends(get_db)
):
    """Get an analysis report by ID"""
    report = ReportService(db).get_report(report_id)
    if not report:
        raise HTTPException(
            status_code=status.HTTP_404_NOT_FOUND,
            detail=format_error_response("Analysis report not found")
        )

    return format_success_response(
        message="Analysis report retrieved successfully",
        data=ReportService.to_response(report)
    )
