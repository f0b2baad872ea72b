# experiment_routes.py
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List
import logging

from fastapi import APIRouter, BackgroundTasks, Body, Depends, HTTPException, status
from sqlalchemy.orm import Session, sessionmaker

import app_config
from database import models
from database.db import get_db
from schemas.experiment_schema import ExperimentRunResponse, RunRequest, parse_experiment_config
from utils.exceptions import ConfigError
from utils.generate_uuid import generate_run_id
from workflow.config_lint import REFERENCE_SETTINGS, lint_config
from workflow.run_graph import run_experiment

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/experiments", tags=["experiments"])


def invalid_config(e: ConfigError) -> HTTPException:
    return HTTPException(
        status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
        detail={"error_type": e.error_type, "message": e.message, "details": e.details},
    )


def execute_run(session_factory: sessionmaker, run_id: str) -> None:
    """Background job: train, then store the outcome on the run row"""
    db = session_factory()
    try:
        run = db.query(models.ExperimentRun).filter(models.ExperimentRun.id == run_id).first()
        if run is None:
            logger.error(f"Run {run_id} vanished before it started")
            return
        run.status = models.RunStatus.RUNNING
        db.commit()

        config = parse_experiment_config(run.config)
        try:
            state = run_experiment(config, run_id, run.output_dir)
        except Exception as e:
            logger.exception(f"Run {run_id} crashed")
            state = {"error": str(e), "error_type": type(e).__name__}

        if state.get("error"):
            run.status = models.RunStatus.FAILED
            run.error_type = state.get("error_type")
            run.error_message = state["error"]
        else:
            summary = state["summary"]
            run.status = models.RunStatus.COMPLETED
            run.final_l2 = summary.final_l2
            run.interface_l2 = summary.interface_l2
        run.completed_at = datetime.utcnow()
        db.commit()
    finally:
        db.close()


@router.post("/run", response_model=ExperimentRunResponse, status_code=status.HTTP_202_ACCEPTED)
async def start_run(request: RunRequest, background_tasks: BackgroundTasks, db: Session = Depends(get_db)):
    try:
        config = request.config.with_overrides(seed=request.seed, iterations=request.iterations_override)
    except ConfigError as e:
        raise invalid_config(e)
    run_id = generate_run_id(config.name)
    output_dir = config.output_dir or str(Path(app_config.OUTPUT_ROOT) / run_id)

    run = models.ExperimentRun(
        id=run_id,
        name=config.name,
        problem=config.problem,
        mode=config.mode.value,
        seed=config.seed,
        status=models.RunStatus.PENDING,
        output_dir=output_dir,
        config=config.model_dump(mode="json"),
    )
    db.add(run)
    db.commit()
    db.refresh(run)

    background_tasks.add_task(execute_run, sessionmaker(bind=db.get_bind()), run_id)
    logger.info(f"Queued run {run_id}")
    return run


@router.get("", response_model=List[ExperimentRunResponse])
async def list_runs(db: Session = Depends(get_db)):
    return db.query(models.ExperimentRun).order_by(models.ExperimentRun.created_at.desc()).all()


@router.get("/{run_id}", response_model=ExperimentRunResponse)
async def get_run(run_id: str, db: Session = Depends(get_db)):
    run = db.query(models.ExperimentRun).filter(models.ExperimentRun.id == run_id).first()
    if not run:
        raise HTTPException(status_code=404, detail="Run not found")
    return run


@router.post("/validate")
async def validate_config(raw: Dict[str, Any] = Body(...)):
    """Schema check of a config body, plus the reference lint when its name is a bundled one"""
    try:
        config = parse_experiment_config(raw)
    except ConfigError as e:
        raise invalid_config(e)

    response: Dict[str, Any] = {"valid": True, "name": config.name}
    if config.name in REFERENCE_SETTINGS:
        response["lint"] = lint_config(config.name, config).model_dump()
    return response
