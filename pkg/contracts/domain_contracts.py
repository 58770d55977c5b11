"""
domain_contracts.py
-------------------

Contratos de dados do domínio: therbligs, estados do robô, demonstrações,
rótulos, segmentos e cenas.
Domain data contracts: therbligs, robot states, demonstrations, labels,
segments and scenes.

⚡ Organização / Layout:
- Therblig
- Robot state and demonstration
- Labels and segments
- Scenes
- Validation report
"""

import math
from enum import IntEnum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, FiniteFloat, create_model, field_validator, model_validator

# -------------------------------
# Therblig
# -------------------------------


class Therblig(IntEnum):
    REST = 0
    TRANSPORT_EMPTY = 1
    DELAY = 2
    GRASP = 3
    TRANSPORT_LOADED = 4
    USE = 5
    RELEASE = 6

    @property
    def short(self) -> str:
        return THERBLIG_SHORT_NAMES[self]

    @classmethod
    def from_code(cls, code: int) -> "Therblig":
        return cls(int(code))


NUM_THERBLIGS = len(Therblig)

THERBLIG_SHORT_NAMES = {
    Therblig.REST: "R",
    Therblig.TRANSPORT_EMPTY: "TE",
    Therblig.DELAY: "D",
    Therblig.GRASP: "G",
    Therblig.TRANSPORT_LOADED: "TL",
    Therblig.USE: "U",
    Therblig.RELEASE: "RL",
}

# Therbligs that carry a registration anchor
ANCHOR_THERBLIGS = (Therblig.GRASP, Therblig.USE, Therblig.RELEASE)

# -------------------------------
# Robot state and demonstration
# -------------------------------

JOINT_COLUMNS = [f"q{i}" for i in range(7)]
JOINT_SPEED_COLUMNS = [f"qd{i}" for i in range(7)]
POSITION_COLUMNS = ["x", "y", "z"]
ORIENTATION_COLUMNS = ["roll", "pitch", "yaw"]
FORCE_COLUMNS = ["fx", "fy", "fz"]
TORQUE_COLUMNS = ["tx", "ty", "tz"]

FEATURE_COLUMNS = (
    JOINT_COLUMNS
    + JOINT_SPEED_COLUMNS
    + POSITION_COLUMNS
    + ORIENTATION_COLUMNS
    + FORCE_COLUMNS
    + TORQUE_COLUMNS
)
NUM_FEATURES = len(FEATURE_COLUMNS)  # 26

JOINT_SLICE = slice(0, 7)
JOINT_SPEED_SLICE = slice(7, 14)
POSITION_SLICE = slice(14, 17)
ORIENTATION_SLICE = slice(17, 20)
POSE_SLICE = slice(14, 20)
FORCE_SLICE = slice(20, 23)
TORQUE_SLICE = slice(23, 26)
XY_SLICE = slice(14, 16)
YAW_INDEX = 19

DEFAULT_SAMPLE_RATE_HZ = 10.0
DEFAULT_DURATION_STEPS = 600


class RobotState(BaseModel):
    model_config = ConfigDict(frozen=True)

    joint_angles: list[FiniteFloat] = Field(min_length=7, max_length=7)
    joint_speeds: list[FiniteFloat] = Field(min_length=7, max_length=7)
    ee_position: list[FiniteFloat] = Field(min_length=3, max_length=3)
    ee_orientation: list[FiniteFloat] = Field(min_length=3, max_length=3)
    force: list[FiniteFloat] = Field(min_length=3, max_length=3)
    torque: list[FiniteFloat] = Field(min_length=3, max_length=3)

    def to_vector(self) -> np.ndarray:
        return np.array(
            self.joint_angles
            + self.joint_speeds
            + self.ee_position
            + self.ee_orientation
            + self.force
            + self.torque,
            dtype=np.float64,
        )

    @classmethod
    def from_vector(cls, values) -> "RobotState":
        v = [float(x) for x in values]
        if len(v) != NUM_FEATURES:
            raise ValueError(f"expected {NUM_FEATURES} features, got {len(v)}")
        return cls(
            joint_angles=v[0:7],
            joint_speeds=v[7:14],
            ee_position=v[14:17],
            ee_orientation=v[17:20],
            force=v[20:23],
            torque=v[23:26],
        )


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


class Demonstration(BaseModel):
    """
    Sequência de estados n×26 amostrada a sample_rate_hz, com o estado da garra.
    An n×26 state sequence sampled at sample_rate_hz, plus the gripper state.

    A construção não rejeita dados malformados; use validate_demonstration.
    Construction does not reject malformed data; use validate_demonstration.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    states: np.ndarray
    gripper: np.ndarray
    task_id: str = ""
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ

    @field_validator("states", mode="before")
    @classmethod
    def _states_array(cls, v):
        arr = np.array(v, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        arr.setflags(write=False)
        return arr

    @field_validator("gripper", mode="before")
    @classmethod
    def _gripper_array(cls, v):
        return _frozen_array(v, bool)

    @property
    def n(self) -> int:
        return int(self.states.shape[0])

    def state(self, t: int) -> RobotState:
        return RobotState.from_vector(self.states[t])

    @property
    def ee_xy(self) -> np.ndarray:
        return self.states[:, XY_SLICE]

    def replace(self, **changes) -> "Demonstration":
        data = {
            "states": self.states,
            "gripper": self.gripper,
            "task_id": self.task_id,
            "sample_rate_hz": self.sample_rate_hz,
        }
        data.update(changes)
        return Demonstration(**data)


# -------------------------------
# Labels and segments
# -------------------------------


class LabelSequence(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    labels: np.ndarray
    probabilities: Optional[np.ndarray] = None

    @field_validator("labels", mode="before")
    @classmethod
    def _labels_array(cls, v):
        arr = np.array(v, dtype=np.int64).reshape(-1)
        arr.setflags(write=False)
        return arr

    @field_validator("probabilities", mode="before")
    @classmethod
    def _probabilities_array(cls, v):
        if v is None:
            return None
        arr = np.array(v, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != NUM_THERBLIGS:
            raise ValueError(f"probability rows must have length {NUM_THERBLIGS}, got shape {arr.shape}")
        if np.any(arr < 0):
            raise ValueError("probability rows must be nonnegative")
        row_sums = arr.sum(axis=1)
        bad = np.flatnonzero(np.abs(row_sums - 1.0) > 1e-6)
        if bad.size:
            raise ValueError(f"probability row {int(bad[0])} sums to {row_sums[bad[0]]:.9f}")
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def _aligned(self):
        if self.probabilities is not None and self.probabilities.shape[0] != self.labels.shape[0]:
            raise ValueError("probabilities and labels differ in length")
        return self

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    def therbligs(self) -> list[Therblig]:
        return [Therblig(int(c)) for c in self.labels]


class TherbligSegment(BaseModel):
    model_config = ConfigDict(frozen=True)

    therblig: Therblig
    start: int = Field(ge=0)
    end: int

    @model_validator(mode="after")
    def _ordered(self):
        if self.end <= self.start:
            raise ValueError(f"segment end {self.end} must be greater than start {self.start}")
        return self

    @property
    def length(self) -> int:
        return self.end - self.start

    @property
    def midpoint(self) -> int:
        return (self.start + self.end) // 2


# -------------------------------
# Scenes
# -------------------------------

DESCRIPTOR_LENGTH = 16


class SceneObject(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    id: str
    class_name: str = Field(alias="class")
    centroid: tuple[FiniteFloat, FiniteFloat]
    orientation: FiniteFloat
    points: list[tuple[FiniteFloat, FiniteFloat]] = Field(min_length=3)
    descriptor: list[FiniteFloat]

    @field_validator("orientation")
    @classmethod
    def _orientation_range(cls, v: float) -> float:
        if not (-math.pi / 2 < v <= math.pi / 2 + 1e-12):
            raise ValueError(f"orientation {v} outside (-pi/2, pi/2]")
        return v

    @field_validator("points")
    @classmethod
    def _non_degenerate(cls, v):
        pts = np.asarray(v, dtype=np.float64)
        cov = np.cov(pts.T, bias=True)
        if not np.trace(cov) > 0:
            raise ValueError("object points are degenerate (zero covariance trace)")
        return v

    @property
    def centroid_array(self) -> np.ndarray:
        return np.array(self.centroid, dtype=np.float64)

    @property
    def points_array(self) -> np.ndarray:
        return np.array(self.points, dtype=np.float64)

    @property
    def descriptor_array(self) -> np.ndarray:
        return np.array(self.descriptor, dtype=np.float64)

    def bbox_diagonal(self) -> float:
        pts = self.points_array
        return float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))


class SceneDescriptor(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    workspace_bounds: tuple[FiniteFloat, FiniteFloat, FiniteFloat, FiniteFloat] = Field(alias="workspace")
    objects: list[SceneObject] = Field(default_factory=list)

    @model_validator(mode="after")
    def _consistent(self):
        xmin, ymin, xmax, ymax = self.workspace_bounds
        if not (xmin < xmax and ymin < ymax):
            raise ValueError(f"empty workspace bounds {self.workspace_bounds}")
        ids = [o.id for o in self.objects]
        duplicated = sorted({i for i in ids if ids.count(i) > 1})
        if duplicated:
            raise ValueError(f"duplicated object ids: {duplicated}")
        for obj in self.objects:
            if not self.contains(obj.centroid):
                raise ValueError(f"object {obj.id} centroid {obj.centroid} outside workspace")
        return self

    def contains(self, point, tol: float = 0.0) -> bool:
        xmin, ymin, xmax, ymax = self.workspace_bounds
        x, y = float(point[0]), float(point[1])
        return xmin - tol <= x <= xmax + tol and ymin - tol <= y <= ymax + tol

    def object_by_id(self, object_id: str) -> SceneObject:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise KeyError(object_id)

    def has_object(self, object_id: str) -> bool:
        return any(o.id == object_id for o in self.objects)

    def centroids(self) -> np.ndarray:
        if not self.objects:
            return np.zeros((0, 2))
        return np.array([o.centroid for o in self.objects], dtype=np.float64)


# -------------------------------
# Validation report
# -------------------------------


class Violation(BaseModel):
    kind: str
    message: str
    timestep: Optional[int] = None
    feature: Optional[int] = None


class ValidationReport(BaseModel):
    violations: list[Violation] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def locations(self) -> list[tuple[int, int]]:
        return [
            (v.timestep, v.feature)
            for v in self.violations
            if v.timestep is not None and v.feature is not None
        ]


# -------------------------------
# Demo CSV rows
# -------------------------------

DEMO_CSV_COLUMNS = ["t"] + FEATURE_COLUMNS + ["gripper", "label"]

# one row per timestep of a demo CSV file
DemoRow = create_model(
    "DemoRow",
    t=(int, Field(ge=0)),
    **{name: (FiniteFloat, ...) for name in FEATURE_COLUMNS},
    gripper=(int, Field(ge=0, le=1)),
    label=(int, Field(ge=0, le=NUM_THERBLIGS - 1)),
)
