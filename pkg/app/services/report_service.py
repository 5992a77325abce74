import json
from datetime import datetime, timezone
from typing import Any, Dict, Optional

from sqlalchemy.orm import Session

from app.core.logging import get_logger
from app.models.models import AnalysisReport, ReportStatus
from app.schemas.schemas import AnalysisRequest, PropertyReport

logger = get_logger(__name__)


class ReportService:
    """Service for stored analysis reports"""

    def __init__(self, db: Session):
        self.db = db

    def create_report(self, request: AnalysisRequest, budget: int, seed: int) -> AnalysisReport:
        """Store a queued analysis request"""
        try:
            report = AnalysisReport(
                spec_json=json.dumps(request.spec, sort_keys=True),
                dimension=request.dimension,
                seed=seed,
                budget=budget,
                refine_steps=request.refine_steps,
                status=ReportStatus.QUEUED,
            )
            self.db.add(report)
            self.db.commit()
            self.db.refresh(report)

            logger.info("Analysis report queued", report_id=report.id)
            return report

        except Exception as e:
            self.db.rollback()
            logger.error("Failed to queue analysis report", error=str(e))
            raise

    def get_report(self, report_id: int) -> Optional[AnalysisReport]:
        return self.db.query(AnalysisReport).filter(AnalysisReport.id == report_id).first()

    def set_task_id(self, report: AnalysisReport, task_id: str) -> AnalysisReport:
        report.task_id = task_id
        self.db.commit()
        self.db.refresh(report)
        return report

    def mark_running(self, report: AnalysisReport) -> AnalysisReport:
        report.status = ReportStatus.RUNNING
        self.db.commit()
        return report

    def complete(self, report: AnalysisReport, result: PropertyReport) -> AnalysisReport:
        """Store the finished report; the stored text is the canonical JSON"""
        report.report_json = json.dumps(result.to_json_dict(), sort_keys=True)
        report.dimension = result.config.dimension
        report.status = ReportStatus.COMPLETED
        report.completed_at = datetime.now(timezone.utc)
        self.db.commit()
        logger.info("Analysis report completed", report_id=report.id, audit_passed=result.audit_passed)
        return report

    def fail(self, report: AnalysisReport, error: str) -> AnalysisReport:
        report.status = ReportStatus.FAILED
        report.error = error
        report.completed_at = datetime.now(timezone.utc)
        self.db.commit()
        logger.warning("Analysis report failed", report_id=report.id, error=error)
        return report

    @staticmethod
    def to_response(report: AnalysisReport) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "report_id": report.id,
            "status": report.status.value,
            "dimension": report.dimension,
            "seed": report.seed,
            "budget": report.budget,
            "task_id": report.task_id,
        }
        if report.error:
            data["error"] = report.error
        if report.report_json:
            data["report"] = json.loads(report.report_json)
        return data
