"""
report_contracts.py
-------------------

Contratos de artefatos e relatórios: manifesto do dataset, métricas de
segmentação, resultados de tentativas e relatório de sucesso.
Artifact and report contracts: dataset manifest, segmentation metrics, trial
results and success report.
"""

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from contracts.domain_contracts import Therblig
from utils.errors import FailureCategory

MANIFEST_FORMAT_VERSION = 1

# -------------------------------
# Dataset
# -------------------------------


class AnchorTruth(BaseModel):
    """Ground-truth registration point of one Grasp/Use/Release phase."""

    model_config = ConfigDict(frozen=True)

    therblig: Therblig
    start: int
    end: int
    object_id: str
    role: str
    point: tuple[float, float]


class DemoRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    demo_path: str
    task_name: str
    split: str
    seed: int
    index: int
    scene_path: str
    anchors: list[AnchorTruth] = Field(default_factory=list)
    demo_checksum: str = ""
    scene_checksum: str = ""


class DatasetManifest(BaseModel):
    model_config = ConfigDict(frozen=True)

    format_version: int = MANIFEST_FORMAT_VERSION
    generator: dict = Field(default_factory=dict)
    templates: list[str] = Field(default_factory=list)
    records: list[DemoRecord] = Field(default_factory=list)

    def split_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for r in self.records:
            counts[r.split] = counts.get(r.split, 0) + 1
        return counts


# -------------------------------
# Segmentation metrics
# -------------------------------


class Metrics(BaseModel):
    model_config = ConfigDict(frozen=True)

    bce_loss: Optional[float] = None
    precision: float = Field(ge=0, le=100)
    recall: float = Field(ge=0, le=100)
    f1: float = Field(ge=0, le=100)
    kappa: float = Field(ge=-100, le=100)
    tp_range: tuple[float, float]
    per_class_recall: dict[str, Optional[float]] = Field(default_factory=dict)
    per_task_recall: dict[str, float] = Field(default_factory=dict)
    per_task_class_recall: dict[str, dict[str, Optional[float]]] = Field(default_factory=dict)
    excluded_classes: list[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def _range(self):
        if self.tp_range[0] > self.tp_range[1]:
            raise ValueError(f"tp_range min {self.tp_range[0]} exceeds max {self.tp_range[1]}")
        return self


class TrainingLogEntry(BaseModel):
    epoch: int
    train_loss: float
    val_recall: float
    improved: bool


# -------------------------------
# Trials and success
# -------------------------------


class TrialResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    task_name: str
    trial_index: int
    seed: int
    success: bool
    failure_category: Optional[FailureCategory] = None
    anchor_errors: list[float] = Field(default_factory=list)
    detail: str = ""
    trace: list[dict] = Field(default_factory=list)

    @model_validator(mode="after")
    def _exclusive(self):
        if self.success != (self.failure_category is None):
            raise ValueError("success must hold exactly when there is no failure category")
        return self


class TaskSuccess(BaseModel):
    task_name: str
    successes: int
    trials: int

    @property
    def rate(self) -> float:
        return self.successes / self.trials if self.trials else 0.0


class SuccessReport(BaseModel):
    mode: str
    per_task: list[TaskSuccess]
    failure_histogram: dict[str, int]
    config: dict = Field(default_factory=dict)
    seeds: list[int] = Field(default_factory=list)
    segmenter: str = "oracle"

    @property
    def total_trials(self) -> int:
        return sum(t.trials for t in self.per_task)

    @property
    def total_successes(self) -> int:
        return sum(t.successes for t in self.per_task)

    @property
    def total_rate(self) -> float:
        return self.total_successes / self.total_trials if self.total_trials else 0.0

    @model_validator(mode="after")
    def _counts(self):
        failures = sum(self.failure_histogram.values())
        if failures + self.total_successes != self.total_trials:
            raise ValueError("failure histogram and successes must add up to the trial count")
        return self
