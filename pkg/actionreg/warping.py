"""
warping.py
----------

Generalização de trajetória: interpola transformações SE(2) entre âncoras e
deforma o caminho do efetuador para o novo layout.
Trajectory generalization: interpolate SE(2) transforms between anchors and
warp the end-effector path onto the new layout.

Plano / Plan:
    identidade em 0 e n-1; identidade no fim do Rest inicial e no início do
    Rest final; o transform de cada âncora no primeiro e no último passo do
    seu segmento.
    identity at 0 and n-1; identity at the end of the leading Rest and the
    start of the trailing Rest; each anchor's transform at the first and last
    step of its segment.

Interpolação / Interpolation:
    dentro do segmento de uma âncora / inside an anchor segment:
        p' = T(p), exato / exact
    entre os nós a e b, w = fração do comprimento do caminho desde a
    between knots a and b, w = fraction of path length covered since a:
    (plano "time": w = fração dos passos / "time" plan: w = fraction of steps)
        p' = p + (1-w)·(T_a(p_a) - p_a) + w·(T_b(p_b) - p_b)
        yaw' = yaw + (1-w)·θ_a + w·θ_b
    Num transporte retilíneo p' fica entre T_a(p_a) e T_b(p_b).
    On a straight transport p' stays between T_a(p_a) and T_b(p_b).

z, força e torque são copiados; juntas seguem o mapa do braço.
z, force and torque are copied; joints follow the arm map.
"""

from typing import Optional, Sequence

import numpy as np

from contracts.domain_contracts import (
    JOINT_SLICE,
    JOINT_SPEED_SLICE,
    XY_SLICE,
    YAW_INDEX,
    Demonstration,
    SceneDescriptor,
    Therblig,
    TherbligSegment,
)
from contracts.registration_contracts import Anchor, Calibration, SceneTransform, WarpKnot, WarpPlan
from datagen.arm_map import remap_joints
from utils.errors import ContractError, FailureCategory, StageFailure
from utils.logger import setup_logger

logger = setup_logger("actionreg_warping")

BOUNDS_TOLERANCE = 1e-9
STATIONARY_PATH = 1e-9


def build_warp_plan(
    anchors: Sequence[Anchor],
    transforms: Sequence[SceneTransform],
    n: int,
    segments: Optional[Sequence[TherbligSegment]] = None,
    interpolation: str = "path_length",
) -> WarpPlan:
    if len(anchors) != len(transforms):
        raise ContractError(f"got {len(transforms)} transforms for {len(anchors)} anchors")
    if n < 2:
        raise ContractError(f"a warp plan needs at least 2 steps, got {n}")

    knots: dict[int, WarpKnot] = {}
    for anchor, tf in zip(anchors, transforms):
        if anchor.segment_end > n:
            raise ContractError(f"anchor segment ends at {anchor.segment_end}, past the {n} demo steps")
        for t in (anchor.segment_start, anchor.segment_end - 1):
            if 0 < t < n - 1:
                knots[t] = WarpKnot(timestep=t, transform=tf, source="anchor")

    pins = [0, n - 1]
    if segments:
        if segments[0].therblig == Therblig.REST:
            pins.append(segments[0].end - 1)
        if segments[-1].therblig == Therblig.REST:
            pins.append(segments[-1].start)
    for t in pins:
        if t not in knots or t in (0, n - 1):
            knots[t] = WarpKnot(timestep=t, transform=SceneTransform.identity(), source="boundary")

    return WarpPlan(knots=[knots[t] for t in sorted(knots)], interpolation=interpolation)


def _path_progress(points: np.ndarray) -> np.ndarray:
    """Fraction of path length covered at each point, 0 at the first and 1 at the last."""
    cumulative = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(points, axis=0), axis=1))])
    if cumulative[-1] <= STATIONARY_PATH:
        return np.linspace(0.0, 1.0, len(points))
    return cumulative / cumulative[-1]


def _rigid_span(a: WarpKnot, b: WarpKnot) -> bool:
    return a.source == "anchor" and b.source == "anchor" and a.transform == b.transform


def interpolate_plan(plan: WarpPlan, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Rotação por passo (n,) e caminho deformado (n, 2) no referencial da cena.
    Per-step rotation (n,) and warped path (n, 2) in the scene frame.
    """
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    times = plan.times
    if times[0] != 0 or times[-1] != n - 1:
        raise ContractError(f"plan spans steps {times[0]}..{times[-1]}, demo has {n} steps")

    theta = np.zeros(n)
    warped = points.copy()
    for i, (ka, kb) in enumerate(zip(plan.knots, plan.knots[1:])):
        ta, tb = ka.transform, kb.transform
        if ta.is_identity and tb.is_identity:
            continue
        a, b = ka.timestep, kb.timestep
        last = b + 1 if i == len(plan.knots) - 2 else b
        if _rigid_span(ka, kb):
            theta[a:last] = ta.rotation
            warped[a:last] = ta.apply(points[a:last])
            continue
        if plan.interpolation == "time":
            w = (np.arange(a, last) - a) / (b - a)
        else:
            w = _path_progress(points[a : b + 1])[: last - a]
        da = ta.apply(points[a]) - points[a]
        db = tb.apply(points[b]) - points[b]
        theta[a:last] = (1.0 - w) * ta.rotation + w * tb.rotation
        warped[a:last] = points[a:last] + (1.0 - w)[:, None] * da + w[:, None] * db
    return theta, warped


def wrap_pi(angle: np.ndarray) -> np.ndarray:
    """Wrap angles into (-pi, pi]; values already inside are returned unchanged."""
    angle = np.asarray(angle, dtype=np.float64)
    inside = (angle > -np.pi) & (angle <= np.pi)
    return np.where(inside, angle, np.pi - np.mod(np.pi - angle, 2.0 * np.pi))


def check_bounds(scene_xy: np.ndarray, workspace: tuple[float, float, float, float]) -> None:
    xmin, ymin, xmax, ymax = workspace
    tol = BOUNDS_TOLERANCE
    outside = np.flatnonzero(
        (scene_xy[:, 0] < xmin - tol)
        | (scene_xy[:, 0] > xmax + tol)
        | (scene_xy[:, 1] < ymin - tol)
        | (scene_xy[:, 1] > ymax + tol)
    )
    if outside.size:
        t = int(outside[0])
        raise StageFailure(
            "trajectory_warping",
            FailureCategory.TRAJECTORY_PLANNING,
            f"warped path leaves the workspace at step {t} "
            f"({scene_xy[t, 0]:.3f}, {scene_xy[t, 1]:.3f}); {outside.size} steps outside",
        )


def warp_trajectory(
    demo: Demonstration,
    segments: Sequence[TherbligSegment],
    plan: WarpPlan,
    calibration: Calibration,
    workspace: Optional[tuple[float, float, float, float]] = None,
) -> Demonstration:
    """
    Aplica o plano ao caminho; passos com transform identidade ficam intocados.
    Apply the plan to the path; steps under the identity transform stay untouched.
    """
    n = demo.n
    if segments and segments[-1].end != n:
        raise ContractError(f"segments cover {segments[-1].end} steps, demo has {n}")

    robot_xy = demo.ee_xy
    scene_xy = calibration.to_scene(robot_xy)
    theta, warped_xy = interpolate_plan(plan, scene_xy)
    moved = (theta != 0.0) | np.any(warped_xy != scene_xy, axis=1)
    if workspace is not None:
        check_bounds(warped_xy, workspace)
    if not moved.any():
        return demo.replace()

    idx = np.flatnonzero(moved)
    new_robot_xy = calibration.to_robot(warped_xy[idx])

    states = np.array(demo.states, dtype=np.float64)
    pose_delta = np.zeros((idx.size, 6))
    pose_delta[:, 0:2] = new_robot_xy - robot_xy[idx]
    pose_delta[:, 5] = theta[idx]
    states[idx, XY_SLICE] = new_robot_xy
    states[idx, YAW_INDEX] = wrap_pi(states[idx, YAW_INDEX] + theta[idx])

    q_old = states[:, JOINT_SLICE].copy()
    states[idx, JOINT_SLICE] = remap_joints(q_old[idx], pose_delta)
    dq = states[:, JOINT_SLICE] - q_old
    states[1:, JOINT_SPEED_SLICE] = states[1:, JOINT_SPEED_SLICE] + np.diff(dq, axis=0) * demo.sample_rate_hz
    return demo.replace(states=states)


def anchor_points_after_warp(warped: Demonstration, anchors: Sequence[Anchor], calibration: Calibration) -> np.ndarray:
    """Scene-frame end-effector xy of the warped path at each anchor step, (k, 2)."""
    if not anchors:
        return np.zeros((0, 2))
    steps = [a.timestep for a in anchors]
    return calibration.to_scene(warped.ee_xy[steps])
