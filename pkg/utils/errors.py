"""
errors.py
---------

Hierarquia de exceções do therblig-kit.
Exception hierarchy of the therblig-kit.
"""

from enum import Enum
from typing import Optional


class FailureCategory(str, Enum):
    """Failure buckets used by transfer traces and success reports."""

    THERBLIG_SEGMENTATION = "TherbligSegmentation"
    ACTION_REGISTRATION = "ActionRegistration"
    CONTEXT_MATCHING = "ContextMatching"
    TRAJECTORY_PLANNING = "TrajectoryPlanning"
    OTHERS = "Others"


class TherbligKitError(Exception):
    """Base class for every error raised by the kit."""


class ContractError(TherbligKitError, ValueError):
    """Input violates a data contract (bad code, empty input, wrong width...)."""


class ShapeError(ContractError):
    def __init__(self, op: str, *shapes):
        self.op = op
        self.shapes = tuple(tuple(s) for s in shapes)
        rendered = " vs ".join(str(s) for s in self.shapes)
        super().__init__(f"{op}: incompatible shapes {rendered}")


class NumericalError(TherbligKitError):
    def __init__(self, message: str, stage: Optional[str] = None, name: Optional[str] = None):
        self.stage = stage
        self.name = name
        super().__init__(message)


class StageFailure(TherbligKitError):
    """A pipeline stage failed; carries the failure category it maps to."""

    def __init__(self, stage: str, category: FailureCategory, detail: str):
        self.stage = stage
        self.category = category
        self.detail = detail
        super().__init__(f"[{category.value}] {stage}: {detail}")


class ProtocolError(TherbligKitError):
    """Malformed response from a correction endpoint."""

    def __init__(self, reason: str, detail: str, raw_payload: object = None):
        self.reason = reason
        self.detail = detail
        self.raw_payload = raw_payload
        super().__init__(f"{reason}: {detail}")


class DatasetError(TherbligKitError):
    def __init__(self, path: str, detail: str):
        self.path = path
        super().__init__(f"{path}: {detail}")
