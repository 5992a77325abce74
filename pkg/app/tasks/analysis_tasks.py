from app.core.celery_app import celery_app
from app.core.exceptions import LatticeLabError
from app.db.database import SessionLocal
from app.schemas.schemas import parse_norm_spec
from app.services.certify_service import CertifyService
from app.services.report_service import ReportService
from app.core.logging import get_logger
from typing import Dict, Any

logger = get_logger(__name__)


def get_db_session():
    """Get database session for Celery tasks"""
    return SessionLocal()


@celery_app.task(bind=True)
def run_analysis(self, report_id: int) -> Dict[str, Any]:
    """Run the full analysis pipeline for a stored report request"""
    db = get_db_session()
    try:
        report_service = ReportService(db)
        report = report_service.get_report(report_id)
        if not report:
            raise ValueError(f"Analysis report {report_id} not found")

        logger.info("Running analysis", report_id=report_id, task_id=self.request.id)
        report_service.mark_running(report)

        try:
            spec = parse_norm_spec(report.spec_json)
            result = CertifyService(
                spec,
                dimension=report.dimension,
                budget=report.budget,
                seed=report.seed,
                refine_steps=report.refine_steps,
            ).analyze()
        except LatticeLabError as e:
            # stored as a failed report
            report_service.fail(report, e.message)
            return {"status": "failed", "report_id": report_id, "error": e.message}

        report_service.complete(report, result)
        return {"status": "completed", "report_id": report_id, "audit_passed": result.audit_passed}

    except Exception as e:
        logger.error("Analysis task failed", error=str(e), report_id=report_id)
        raise
    finally:
        db.close()
