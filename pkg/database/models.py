from sqlalchemy import Column, DateTime, Enum, Float, Integer, JSON, String, Text
from sqlalchemy.sql import func
import enum

from database.db import Base


# Enums
class RunStatus(str, enum.Enum):
    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


# ============================================================================
# EXPERIMENT RUNS
# ============================================================================
class ExperimentRun(Base):
    __tablename__ = "experiment_runs"

    id = Column(String(255), primary_key=True, index=True)
    name = Column(String(255), nullable=False)
    problem = Column(String(50), nullable=False)
    mode = Column(String(20), nullable=False)
    seed = Column(Integer, nullable=False)
    status = Column(Enum(RunStatus), default=RunStatus.PENDING, nullable=False)
    output_dir = Column(Text, nullable=False)
    config = Column(JSON, nullable=False)

    # Results
    final_l2 = Column(Float, nullable=True)
    interface_l2 = Column(JSON, nullable=True)
    error_type = Column(String(100), nullable=True)
    error_message = Column(Text, nullable=True)

    created_at = Column(DateTime(timezone=True), server_default=func.now())
    completed_at = Column(DateTime(timezone=True), nullable=True)
