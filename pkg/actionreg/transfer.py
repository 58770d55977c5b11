"""
transfer.py
-----------

Transferência one-shot de uma demonstração para um novo layout de cena.
One-shot transfer of a demonstration onto a new scene layout.

Etapas / Stages:
    segmentation -> anchor_extraction -> context_matching ->
    transform_estimation -> visual_correction -> trajectory_warping

Cada etapa deixa uma entrada no trace; a primeira que falha interrompe a
transferência e nomeia a sua categoria de falha. As seguintes ficam "skipped".
Every stage leaves a trace entry; the first failing stage stops the transfer
and names its failure category. The rest are marked "skipped".
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from actionreg.anchors import ASSOCIATION_RADIUS, extract_anchors
from actionreg.matching import match_objects
from actionreg.transforms import compute_transforms, retarget
from actionreg.warping import anchor_points_after_warp, build_warp_plan, warp_trajectory
from contracts.domain_contracts import Demonstration, LabelSequence, SceneDescriptor, TherbligSegment
from contracts.registration_contracts import Anchor, Calibration, MatchResult, SceneTransform, TraceEntry, WarpPlan
from domain.therbligs import segments_from_labels
from utils.errors import ContractError, FailureCategory, StageFailure
from utils.files import write_json
from utils.logger import setup_logger

logger = setup_logger("actionreg_transfer")

STAGES = (
    "segmentation",
    "anchor_extraction",
    "context_matching",
    "transform_estimation",
    "visual_correction",
    "trajectory_warping",
)

# (predicted anchor points in the new scene (k, 2), anchors, new scene) -> corrected points (k, 2)
AnchorCorrector = Callable[[np.ndarray, Sequence[Anchor], SceneDescriptor], np.ndarray]
LabelSource = Union[LabelSequence, Callable[[Demonstration], LabelSequence]]


@dataclass
class TransferResult:
    demo: Optional[Demonstration] = None
    trace: list[TraceEntry] = field(default_factory=list)
    labels: Optional[LabelSequence] = None
    segments: list[TherbligSegment] = field(default_factory=list)
    anchors: list[Anchor] = field(default_factory=list)
    matches: Optional[MatchResult] = None
    transforms: list[SceneTransform] = field(default_factory=list)
    plan: Optional[WarpPlan] = None
    predicted_points: Optional[np.ndarray] = None
    corrected_points: Optional[np.ndarray] = None
    warped_anchor_points: Optional[np.ndarray] = None
    failure: Optional[StageFailure] = None

    @property
    def ok(self) -> bool:
        return self.failure is None

    @property
    def failure_category(self) -> Optional[FailureCategory]:
        return self.failure.category if self.failure else None

    def trace_payload(self) -> list[dict]:
        return [e.model_dump(mode="json", exclude_none=True) for e in self.trace]


STAGE_CATEGORY = {
    "segmentation": FailureCategory.THERBLIG_SEGMENTATION,
    "anchor_extraction": FailureCategory.ACTION_REGISTRATION,
    "context_matching": FailureCategory.CONTEXT_MATCHING,
    "transform_estimation": FailureCategory.CONTEXT_MATCHING,
    "visual_correction": FailureCategory.OTHERS,
    "trajectory_warping": FailureCategory.TRAJECTORY_PLANNING,
}


def _segment(demo: Demonstration, labels: LabelSource) -> tuple[LabelSequence, list[TherbligSegment]]:
    sequence = labels(demo) if callable(labels) else labels
    if len(sequence) != demo.n:
        raise StageFailure(
            "segmentation",
            FailureCategory.THERBLIG_SEGMENTATION,
            f"{len(sequence)} labels for a demo of {demo.n} steps",
        )
    return sequence, segments_from_labels(sequence)


def transfer(
    demo: Demonstration,
    labels: LabelSource,
    demo_scene: SceneDescriptor,
    new_scene: SceneDescriptor,
    calibration: Optional[Calibration] = None,
    corrector: Optional[AnchorCorrector] = None,
    association_radius: float = ASSOCIATION_RADIUS,
) -> TransferResult:
    """
    Executa as etapas em ordem; nunca lança StageFailure, registra no resultado.
    Run the stages in order; never raises StageFailure, records it on the result.

    `labels` é uma sequência pronta (oráculo) ou um segmentador.
    `labels` is a ready sequence (oracle) or a segmenter.
    """
    calibration = calibration or Calibration.identity()
    result = TransferResult()

    def run(stage: str, fn):
        try:
            detail = fn()
        except StageFailure as e:
            result.failure = e
        except Exception as e:
            category = FailureCategory.OTHERS if not isinstance(e, ContractError) else STAGE_CATEGORY[stage]
            result.failure = StageFailure(stage, category, f"{type(e).__name__}: {e}")
        if result.failure is not None:
            result.trace.append(
                TraceEntry(stage=stage, status="failed", detail=result.failure.detail, category=result.failure.category)
            )
            logger.debug(f"Etapa {stage} falhou / Stage {stage} failed: {result.failure}")
            return False
        result.trace.append(TraceEntry(stage=stage, status="ok", detail=detail or ""))
        return True

    def segmentation():
        result.labels, result.segments = _segment(demo, labels)
        return f"{len(result.segments)} segments"

    def anchor_extraction():
        result.anchors = extract_anchors(result.segments, demo, demo_scene, calibration, association_radius)
        if not result.anchors:
            raise StageFailure(
                "segmentation",
                FailureCategory.THERBLIG_SEGMENTATION,
                "no Grasp, Use or Release segment to anchor",
            )
        return ", ".join(f"{a.therblig.short}@{a.timestep}->{a.object_id}" for a in result.anchors)

    def context_matching():
        result.matches = match_objects(demo_scene, new_scene)
        return f"{len(result.matches.matches)} matched, unmatched {result.matches.unmatched_demo_ids}"

    def transform_estimation():
        result.transforms = compute_transforms(result.anchors, result.matches, demo_scene, new_scene)
        return f"{sum(not t.is_identity for t in result.transforms)} non-identity transforms"

    def visual_correction():
        raw = np.array([a.scene_point for a in result.anchors], dtype=np.float64)
        result.predicted_points = np.array([tf.apply(p) for tf, p in zip(result.transforms, raw)])
        if corrector is None:
            result.corrected_points = result.predicted_points
            return "no corrector"
        corrected = np.asarray(corrector(result.predicted_points, result.anchors, new_scene), dtype=np.float64)
        if corrected.shape != result.predicted_points.shape:
            raise StageFailure(
                "visual_correction",
                FailureCategory.OTHERS,
                f"corrector returned shape {corrected.shape} for {result.predicted_points.shape}",
            )
        result.corrected_points = corrected
        result.transforms = [retarget(tf, p, q) for tf, p, q in zip(result.transforms, raw, corrected)]
        moved = np.linalg.norm(corrected - result.predicted_points, axis=1)
        return f"max correction {float(moved.max()):.4f} m"

    def trajectory_warping():
        result.plan = build_warp_plan(result.anchors, result.transforms, demo.n, result.segments)
        result.demo = warp_trajectory(demo, result.segments, result.plan, calibration, new_scene.workspace_bounds)
        result.warped_anchor_points = anchor_points_after_warp(result.demo, result.anchors, calibration)
        return f"{len(result.plan.knots)} knots"

    steps = {
        "segmentation": segmentation,
        "anchor_extraction": anchor_extraction,
        "context_matching": context_matching,
        "transform_estimation": transform_estimation,
        "visual_correction": visual_correction,
        "trajectory_warping": trajectory_warping,
    }
    for i, stage in enumerate(STAGES):
        if not run(stage, steps[stage]):
            for skipped in STAGES[i + 1 :]:
                result.trace.append(TraceEntry(stage=skipped, status="skipped"))
            break
    return result


def write_trace(result: TransferResult, path: str) -> str:
    return write_json(result.trace_payload(), path)
