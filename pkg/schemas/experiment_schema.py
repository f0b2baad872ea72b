# ================== EXPERIMENT SCHEMAS ==================
import json
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from network.mlp import LayerSpec
from utils.exceptions import ConfigError

# ================== ENUMS ==================

class TrainingMode(str, Enum):
    PINN = "pinn"
    XPINN = "xpinn"
    IDPINN = "idpinn"


class DecompositionKind(str, Enum):
    SPLIT_X0 = "split_x0"
    SPLIT_T05 = "split_t05"
    CIRCLE = "circle"
    POISSON_CURVES = "poisson_curves"


# (subdomains, interfaces) per decomposition
DECOMPOSITION_SHAPE = {
    DecompositionKind.SPLIT_X0: (2, 1),
    DecompositionKind.SPLIT_T05: (2, 1),
    DecompositionKind.CIRCLE: (2, 1),
    DecompositionKind.POISSON_CURVES: (3, 2),
}


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


# ================== LOSS MODELS ==================

class LossWeights(StrictModel):
    """Weights of the composite loss. lambda_residual / lambda_avg are only read in XPINN mode."""
    lambda_1: float = Field(1.0, ge=0, description="PDE residual")
    lambda_2: float = Field(0.0, ge=0, description="Boundary data")
    lambda_3: float = Field(0.0, ge=0, description="Initial data")
    lambda_4: float = Field(0.0, ge=0, description="Interface continuity")
    lambda_5: float = Field(0.0, ge=0, description="Interface gradient smoothness")
    lambda_6: float = Field(0.0, ge=0, description="Interface PDE-residual gradient smoothness")
    lambda_residual: float = Field(0.0, ge=0, description="XPINN residual continuity")
    lambda_avg: float = Field(0.0, ge=0, description="XPINN average-solution term")
    xpinn_continuity: bool = Field(False, description="Also add lambda_4 * continuity in XPINN mode")

    def variant(self) -> Optional[int]:
        """1, 2 or 3 for the IDPINN smoothness variants; None when neither term is active"""
        if self.lambda_5 > 0 and self.lambda_6 > 0:
            return 3
        if self.lambda_5 > 0:
            return 1
        if self.lambda_6 > 0:
            return 2
        return None

    def as_mapping(self) -> Dict[str, float]:
        return {
            "residual": self.lambda_1,
            "boundary": self.lambda_2,
            "initial": self.lambda_3,
            "inter": self.lambda_4,
            "grad_smooth": self.lambda_5,
            "pde_grad_smooth": self.lambda_6,
            "xpinn_residual": self.lambda_residual,
            "xpinn_avg": self.lambda_avg,
        }

    def pinn_only(self) -> "LossWeights":
        return LossWeights(lambda_1=self.lambda_1, lambda_2=self.lambda_2, lambda_3=self.lambda_3)


class LossBreakdown(StrictModel):
    residual: float = 0.0
    boundary: float = 0.0
    initial: float = 0.0
    inter: float = 0.0
    grad_smooth: float = 0.0
    pde_grad_smooth: float = 0.0
    xpinn_residual: float = 0.0
    xpinn_avg: float = 0.0
    total: float = 0.0


# ================== POINT COUNTS & SCHEDULE ==================

class RegionCounts(StrictModel):
    residual: int = Field(0, ge=0)
    boundary: int = Field(0, ge=0)
    initial: int = Field(0, ge=0)

    def total(self) -> int:
        return self.residual + self.boundary + self.initial


class PointCounts(StrictModel):
    subdomains: List[RegionCounts] = Field(description="Main-stage counts for subdomain 1, 2, ...")
    interface: List[int] = Field(default=[], description="Points per interface, in decomposition order")

    def total(self) -> int:
        return sum(c.total() for c in self.subdomains) + sum(self.interface)


class Schedule(StrictModel):
    init_iterations: int = Field(0, ge=0, description="0 disables the initialization stage")
    main_iterations: int = Field(..., ge=0)
    learning_rate: float = Field(..., gt=0)
    init_learning_rate: Optional[float] = Field(default=None, gt=0, description="Defaults to learning_rate")
    init_counts: RegionCounts = Field(default_factory=RegionCounts, description="Init-stage subset, whole domain")
    history_stride: int = Field(100, ge=1)

    @property
    def effective_init_learning_rate(self) -> float:
        return self.init_learning_rate if self.init_learning_rate is not None else self.learning_rate


class SliceSpec(StrictModel):
    axis: Literal["x", "y", "t"] = Field(description="Coordinate held fixed")
    value: float
    resolution: int = Field(300, ge=2)


# ================== EXPERIMENT CONFIG ==================

class ExperimentConfig(StrictModel):
    name: str
    problem: Literal["helmholtz", "poisson", "heat", "burgers"]
    decomposition: DecompositionKind
    mode: TrainingMode
    variant: Optional[int] = Field(default=None, description="IDPINN variant 1/2/3, checked against the weights")
    layers: List[int] = Field(description="Shared layer widths, e.g. [2, 20, 20, 1]")
    subdomain_layers: Optional[List[List[int]]] = Field(
        default=None, description="Per-subdomain widths for heterogeneous XPINN runs"
    )
    weights: LossWeights
    schedule: Schedule
    points: PointCounts
    seed: int = 0
    grid_shape: Tuple[int, int] = (300, 300)
    interface_pool_count: int = Field(5000, ge=1)
    slices: List[SliceSpec] = []
    output_dir: Optional[str] = None

    @field_validator("layers")
    @classmethod
    def check_layers(cls, layers: List[int]) -> List[int]:
        LayerSpec(sizes=layers)
        return layers

    @model_validator(mode="after")
    def check_consistency(self) -> "ExperimentConfig":
        subdomains, interfaces = DECOMPOSITION_SHAPE[self.decomposition]
        if len(self.points.subdomains) != subdomains:
            raise ValueError(f"{self.decomposition.value} needs counts for {subdomains} subdomains")
        if self.mode is not TrainingMode.PINN and len(self.points.interface) != interfaces:
            raise ValueError(f"{self.decomposition.value} needs counts for {interfaces} interfaces")

        if self.variant is not None:
            if self.mode is not TrainingMode.IDPINN:
                raise ValueError("variant only applies to idpinn mode")
            if self.weights.variant() != self.variant:
                raise ValueError(f"weights describe IDPINN-{self.weights.variant()}, config says IDPINN-{self.variant}")

        if self.schedule.init_iterations > 0 and self.schedule.init_counts.total() == 0:
            raise ValueError("init_iterations > 0 needs a non-empty init_counts subset")

        if self.subdomain_layers is not None:
            if self.mode is TrainingMode.PINN:
                raise ValueError("subdomain_layers needs a decomposed mode")
            if self.schedule.init_iterations > 0:
                raise ValueError("subdomain_layers cannot be combined with the initialization stage")
            if len(self.subdomain_layers) != subdomains:
                raise ValueError(f"subdomain_layers must list {subdomains} networks")
            for sizes in self.subdomain_layers:
                LayerSpec(sizes=sizes)
        return self

    def layer_specs(self) -> List[LayerSpec]:
        if self.subdomain_layers is not None:
            return [LayerSpec(sizes=sizes) for sizes in self.subdomain_layers]
        return [LayerSpec(sizes=self.layers)]

    def with_overrides(self, seed: Optional[int] = None, iterations: Optional[int] = None,
                       output_dir: Optional[str] = None) -> "ExperimentConfig":
        data = self.model_dump(mode="json")
        if seed is not None:
            data["seed"] = seed
        if iterations is not None:
            data["schedule"]["main_iterations"] = iterations
        if output_dir is not None:
            data["output_dir"] = output_dir
        return parse_experiment_config(data)


def parse_experiment_config(raw: Union[str, bytes, Dict[str, Any]]) -> ExperimentConfig:
    try:
        if isinstance(raw, dict):
            return ExperimentConfig.model_validate(raw)
        return ExperimentConfig.model_validate_json(raw)
    except ValidationError as e:
        raise ConfigError("invalid experiment config", errors=json.loads(e.json(include_url=False)))


def load_experiment_config(path: Union[str, Path]) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}", path=str(path))
    return parse_experiment_config(path.read_text())


# ================== RUN RESULTS ==================

class RunSummary(StrictModel):
    run_id: str
    name: str
    problem: str
    mode: TrainingMode
    seed: int
    final_l2: float
    interface_l2: Dict[str, float] = {}
    init_iterations: int
    main_iterations: int
    output_dir: str
    success: bool = True
    completed_at: datetime = Field(default_factory=datetime.now)


class ErrorRecord(StrictModel):
    """Machine-readable failure written to error.json"""
    success: bool = False
    message: str
    error_type: Optional[str] = None
    details: Optional[Dict[str, Any]] = None


class ValidationCheck(StrictModel):
    name: str
    passed: bool
    detail: str = ""


class ValidationReport(StrictModel):
    checks: List[ValidationCheck] = []

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)


# ================== API MODELS ==================

class RunRequest(StrictModel):
    config: ExperimentConfig
    seed: Optional[int] = None
    iterations_override: Optional[int] = Field(default=None, ge=0)


class ExperimentRunResponse(BaseModel):
    model_config = ConfigDict(from_attributes=True)

    id: str
    name: str
    problem: str
    mode: str
    seed: int
    status: str
    final_l2: Optional[float] = None
    interface_l2: Optional[Dict[str, float]] = None
    output_dir: Optional[str] = None
    error_message: Optional[str] = None
    created_at: Optional[datetime] = None
    completed_at: Optional[datetime] = None

    @field_validator("status", mode="before")
    @classmethod
    def enum_to_value(cls, status):
        return status.value if isinstance(status, Enum) else status
