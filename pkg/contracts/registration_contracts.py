"""
registration_contracts.py
-------------------------

Contratos do registro de ações (ActionREG) e da generalização de trajetórias.
Contracts of action registration (ActionREG) and trajectory generalization.
"""

import math
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, FiniteFloat, PrivateAttr, field_validator, model_validator

from contracts.domain_contracts import Therblig
from utils.errors import FailureCategory


class Calibration(BaseModel):
    """
    Homografia H (3×3) do plano do robô para o plano da cena.
    Homography H (3×3) from the robot plane to the scene plane.
    """

    model_config = ConfigDict(frozen=True)

    matrix: list[list[FiniteFloat]]
    _h: np.ndarray = PrivateAttr()
    _h_inv: np.ndarray = PrivateAttr()

    @field_validator("matrix")
    @classmethod
    def _invertible(cls, v):
        h = np.asarray(v, dtype=np.float64)
        if h.shape != (3, 3):
            raise ValueError(f"calibration must be 3x3, got {h.shape}")
        if abs(np.linalg.det(h)) <= 1e-9:
            raise ValueError("calibration matrix is singular (|det| <= 1e-9)")
        return v

    def model_post_init(self, __context) -> None:
        self._h = np.asarray(self.matrix, dtype=np.float64)
        self._h_inv = np.linalg.inv(self._h)

    @classmethod
    def identity(cls) -> "Calibration":
        return cls(matrix=np.eye(3).tolist())

    @classmethod
    def rigid(cls, angle: float, tx: float = 0.0, ty: float = 0.0) -> "Calibration":
        c, s = math.cos(angle), math.sin(angle)
        return cls(matrix=[[c, -s, tx], [s, c, ty], [0.0, 0.0, 1.0]])

    @property
    def h(self) -> np.ndarray:
        return self._h

    @property
    def h_inv(self) -> np.ndarray:
        return self._h_inv

    @staticmethod
    def _apply(m: np.ndarray, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        homog = np.hstack([pts, np.ones((pts.shape[0], 1))]) @ m.T
        out = homog[:, :2] / homog[:, 2:3]
        return out[0] if single else out

    def to_scene(self, robot_points) -> np.ndarray:
        return self._apply(self._h, robot_points)

    def to_robot(self, scene_points) -> np.ndarray:
        return self._apply(self._h_inv, scene_points)


class Pose2(BaseModel):
    model_config = ConfigDict(frozen=True)

    x: FiniteFloat
    y: FiniteFloat
    yaw: FiniteFloat

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=np.float64)


class Anchor(BaseModel):
    model_config = ConfigDict(frozen=True)

    therblig: Therblig
    timestep: int = Field(ge=0)
    segment_start: int = Field(ge=0)
    segment_end: int
    ee_pose: Pose2
    scene_point: tuple[FiniteFloat, FiniteFloat]
    object_id: Optional[str] = None
    association_distance: Optional[float] = None

    @field_validator("therblig")
    @classmethod
    def _anchor_therblig(cls, v):
        if v not in (Therblig.GRASP, Therblig.USE, Therblig.RELEASE):
            raise ValueError(f"{v.name} does not carry an anchor")
        return v

    @model_validator(mode="after")
    def _inside_segment(self):
        if not (self.segment_start <= self.timestep < self.segment_end):
            raise ValueError("anchor timestep outside its segment")
        return self

    @property
    def scene_xy(self) -> np.ndarray:
        return np.array(self.scene_point, dtype=np.float64)


class ObjectMatch(BaseModel):
    model_config = ConfigDict(frozen=True)

    demo_object_id: str
    new_object_id: str
    descriptor_distance: float = Field(ge=0)
    confidence: float = Field(ge=0, le=1)


class MatchResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    matches: list[ObjectMatch] = Field(default_factory=list)
    unmatched_demo_ids: list[str] = Field(default_factory=list)
    ambiguous_demo_ids: list[str] = Field(default_factory=list)

    def new_id_for(self, demo_object_id: str) -> Optional[str]:
        for m in self.matches:
            if m.demo_object_id == demo_object_id:
                return m.new_object_id
        return None

    def pairs(self) -> set[tuple[str, str]]:
        return {(m.demo_object_id, m.new_object_id) for m in self.matches}


class SceneTransform(BaseModel):
    """SE(2): p ↦ R(rotation)·p + translation, in scene coordinates."""

    model_config = ConfigDict(frozen=True)

    rotation: FiniteFloat = 0.0
    translation: tuple[FiniteFloat, FiniteFloat] = (0.0, 0.0)
    # demo centroid the rotation was taken about; kept for traces, `apply` does not read it
    pivot: Optional[tuple[FiniteFloat, FiniteFloat]] = None

    @classmethod
    def identity(cls) -> "SceneTransform":
        return cls()

    @property
    def is_identity(self) -> bool:
        return self.rotation == 0.0 and self.translation == (0.0, 0.0)

    def rotation_matrix(self) -> np.ndarray:
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        return np.array([[c, -s], [s, c]])

    def apply(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.rotation_matrix().T + np.asarray(self.translation)


class WarpKnot(BaseModel):
    model_config = ConfigDict(frozen=True)

    timestep: int = Field(ge=0)
    transform: SceneTransform
    source: Literal["boundary", "anchor"] = "anchor"


class WarpPlan(BaseModel):
    model_config = ConfigDict(frozen=True)

    knots: list[WarpKnot]
    # weight between knots: fraction of path length covered, or of elapsed steps
    interpolation: Literal["path_length", "time"] = "path_length"

    @model_validator(mode="after")
    def _ordered(self):
        times = [k.timestep for k in self.knots]
        if len(times) < 2:
            raise ValueError("a warp plan needs at least the two boundary knots")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError(f"knot times must be strictly increasing: {times}")
        if not (self.knots[0].transform.is_identity and self.knots[-1].transform.is_identity):
            raise ValueError("first and last knots must carry the identity transform")
        return self

    @property
    def times(self) -> list[int]:
        return [k.timestep for k in self.knots]


class TraceEntry(BaseModel):
    stage: str
    status: Literal["ok", "failed", "skipped"]
    detail: str = ""
    category: Optional[FailureCategory] = None
