from sqlalchemy import Column, Integer, String, DateTime, Text, Enum as SQLEnum
from sqlalchemy.sql import func
from app.db.database import Base
import enum


class ReportStatus(enum.Enum):
    QUEUED = "queued"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


class AnalysisReport(Base):
    __tablename__ = "analysis_reports"

    id = Column(Integer, primary_key=True, index=True)
    spec_json = Column(Text, nullable=False)
    dimension = Column(Integer)
    seed = Column(Integer, nullable=False, default=0)
    budget = Column(Integer, nullable=False)
    refine_steps = Column(Integer)
    status = Column(SQLEnum(ReportStatus), default=ReportStatus.QUEUED, index=True)
    task_id = Column(String(255))
    report_json = Column(Text)
    error = Column(Text)
    created_at = Column(DateTime(timezone=True), server_default=func.now())
    completed_at = Column(DateTime(timezone=True))
