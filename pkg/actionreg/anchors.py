"""
anchors.py
----------

Extração de âncoras: um ponto de registro por segmento Grasp/Use/Release,
no ponto médio do segmento, associado ao objeto mais próximo da cena.
Anchor extraction: one registration point per Grasp/Use/Release segment, at
the segment midpoint, associated with the nearest scene object.

    robot xy --H--> scene xy --nearest centroid (<= 8 cm)--> object id
"""

from typing import Optional, Sequence

import numpy as np

from contracts.domain_contracts import (
    ANCHOR_THERBLIGS,
    YAW_INDEX,
    Demonstration,
    SceneDescriptor,
    Therblig,
    TherbligSegment,
)
from contracts.registration_contracts import Anchor, Calibration, Pose2
from utils.errors import ContractError, FailureCategory, StageFailure

ASSOCIATION_RADIUS = 0.08


def nearest_object(scene: SceneDescriptor, point) -> tuple[Optional[str], float]:
    centroids = scene.centroids()
    if centroids.shape[0] == 0:
        return None, float("inf")
    d = np.linalg.norm(centroids - np.asarray(point, dtype=np.float64), axis=1)
    k = int(np.argmin(d))
    return scene.objects[k].id, float(d[k])


def extract_anchors(
    segments: Sequence[TherbligSegment],
    demo: Demonstration,
    scene: SceneDescriptor,
    calibration: Calibration,
    radius: float = ASSOCIATION_RADIUS,
) -> list[Anchor]:
    if not scene.objects:
        raise ContractError("anchor extraction needs a scene with at least one object")
    if segments and segments[-1].end > demo.n:
        raise ContractError(f"segments reach step {segments[-1].end} but the demo has {demo.n} steps")

    anchors = []
    for seg in segments:
        if seg.therblig not in ANCHOR_THERBLIGS:
            continue
        t = seg.midpoint
        robot_xy = demo.ee_xy[t]
        scene_xy = calibration.to_scene(robot_xy)
        object_id, distance = nearest_object(scene, scene_xy)
        if distance > radius:
            if seg.therblig == Therblig.GRASP:
                raise StageFailure(
                    "anchor_extraction",
                    FailureCategory.ACTION_REGISTRATION,
                    f"grasp at step {t} has no object within {radius:.2f} m "
                    f"(nearest {object_id} at {distance:.3f} m)",
                )
            object_id, distance = None, None

        anchors.append(
            Anchor(
                therblig=seg.therblig,
                timestep=t,
                segment_start=seg.start,
                segment_end=seg.end,
                ee_pose=Pose2(x=float(robot_xy[0]), y=float(robot_xy[1]), yaw=float(demo.states[t, YAW_INDEX])),
                scene_point=(float(scene_xy[0]), float(scene_xy[1])),
                object_id=object_id,
                association_distance=distance,
            )
        )
    return anchors
