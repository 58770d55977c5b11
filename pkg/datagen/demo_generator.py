"""
demo_generator.py
-----------------

Geração de uma demonstração rotulada a partir de um modelo de tarefa e uma cena.
Generation of one labeled demonstration from a task template and a scene.

Assinaturas por therblig / Per-therblig signatures:
- TE/TL: interpolação minimum-jerk até o alvo, com elevação em z
         minimum-jerk interpolation to the target, with a z lift
- G:     parado no objeto, força crescente / at rest on the object, force ramps up
- U:     oscilação ao longo do eixo do objeto, força oscilatória
         oscillation along the object axis, oscillatory force
- RL:    parado, força decrescente / at rest, force ramps down
- R/D:   parado, força ~0 (mais deriva) / at rest, force ~0 (plus drift)

Juntas via arm_map; ruído por canal escalado por state_noise.
Joints through arm_map; per-channel noise scaled by state_noise.
"""

import math
from typing import Optional, Union

import numpy as np

from contracts.config_contracts import GeneratorConfig
from contracts.domain_contracts import (
    ANCHOR_THERBLIGS,
    Demonstration,
    LabelSequence,
    SceneDescriptor,
    Therblig,
)
from contracts.report_contracts import AnchorTruth
from datagen.arm_map import joint_angles, joint_speeds
from datagen.scene_generator import home_position
from datagen.templates import MOTION_THERBLIGS, TaskTemplate, scale_range
from utils.errors import ContractError

Z_REST = 0.30
Z_CONTACT = 0.02
LIFT_HEIGHT = 0.15

HOLD_LOAD = 0.8  # N, weight of a held object on fz
GRASP_PEAK = 2.0  # N, squeeze reached at the end of a grasp

# state noise multipliers, one per feature
CHANNEL_NOISE_SCALE = np.array(
    [0.05] * 7  # joint angles, rad
    + [0.05] * 7  # joint speeds, rad/s
    + [0.002] * 3  # position, m
    + [0.02] * 3  # orientation, rad
    + [1.0] * 3  # force, N
    + [0.1] * 3  # torque, N·m
)

DRIFT_SCALE = np.array([1.0, 1.0, 1.0, 0.1, 0.1, 0.1])

SeedLike = Union[int, np.random.SeedSequence]


def min_jerk(tau: np.ndarray) -> np.ndarray:
    return 10.0 * tau**3 - 15.0 * tau**4 + 6.0 * tau**5


def sample_durations(template: TaskTemplate, duration_steps: int, rng: np.random.Generator) -> list[int]:
    """
    Sorteia a duração de cada fase; o primeiro e o último Rest absorvem a folga.
    Draw each phase duration; the first and last Rest absorb the slack.
    """
    ranges = [scale_range(p.duration, duration_steps) for p in template.phases]
    minimum = sum(lo for lo, _ in ranges)
    if minimum > duration_steps:
        raise ContractError(
            f"template {template.name} needs at least {minimum} steps, {duration_steps} requested"
        )

    durations = [int(rng.integers(lo, hi + 1)) for lo, hi in ranges]
    rest_floor = ranges[0][0] + ranges[-1][0]
    excess = sum(durations[1:-1]) + rest_floor - duration_steps
    for k in range(1, len(durations) - 1):
        if excess <= 0:
            break
        cut = min(excess, durations[k] - ranges[k][0])
        durations[k] -= cut
        excess -= cut

    remaining = duration_steps - sum(durations[1:-1])
    spare = remaining - rest_floor
    first = ranges[0][0] + int(round(spare * rng.uniform(0.35, 0.65)))
    durations[0] = first
    durations[-1] = remaining - first
    return durations


def jitter_boundaries(boundaries: list[int], jitter: int, n: int, rng: np.random.Generator) -> list[int]:
    """Shift each internal boundary by a uniform integer in [-jitter, jitter], keeping segments non-empty."""
    out = list(boundaries)
    for i, b in enumerate(boundaries):
        lo = (out[i - 1] if i > 0 else 0) + 1
        hi = (boundaries[i + 1] if i + 1 < len(boundaries) else n) - 1
        shift = int(rng.integers(-jitter, jitter + 1))
        out[i] = int(np.clip(b + shift, lo, hi))
    return out


def _phase_wrench(
    therblig: Therblig, length: int, fz_start: float, profile, use_axis: np.ndarray
) -> np.ndarray:
    wrench = np.zeros((length, 6))
    tau = (np.arange(length) + 0.5) / length
    if therblig == Therblig.GRASP:
        wrench[:, 2] = -GRASP_PEAK * tau
    elif therblig == Therblig.TRANSPORT_LOADED:
        wrench[:, 2] = -HOLD_LOAD
    elif therblig == Therblig.USE:
        wave = np.sin(2.0 * math.pi * profile.cycles * tau)
        wrench[:, 2] = -HOLD_LOAD - profile.force * 0.5 * (1.0 - np.cos(2.0 * math.pi * profile.cycles * tau))
        wrench[:, 0:2] = 0.2 * profile.force * wave[:, None] * use_axis[None, :]
        wrench[:, 5] = 0.1 * profile.force * wave
    elif therblig == Therblig.RELEASE:
        wrench[:, 2] = fz_start * (1.0 - tau)
    elif therblig == Therblig.DELAY:
        wrench[:, 2] = fz_start
    # torque follows the lateral force through a 5 cm lever
    wrench[:, 3] += 0.05 * wrench[:, 1]
    wrench[:, 4] -= 0.05 * wrench[:, 0]
    return wrench


def generate_demo(
    template: TaskTemplate,
    scene: SceneDescriptor,
    seed: SeedLike,
    config: Optional[GeneratorConfig] = None,
) -> tuple[Demonstration, LabelSequence, list[AnchorTruth]]:
    """
    Gera (demonstração, rótulos, âncoras verdadeiras) de forma determinística.
    Generate (demonstration, labels, ground-truth anchors) deterministically.
    """
    config = config or GeneratorConfig()
    for role in template.roles:
        object_id = template.role_object_id(role)
        if not scene.has_object(object_id):
            raise ContractError(f"scene has no object {object_id} for role {role!r} of {template.name}")

    rng = np.random.default_rng(seed)
    n = config.duration_steps
    durations = sample_durations(template, n, rng)
    starts = np.concatenate([[0], np.cumsum(durations)[:-1]]).astype(int)

    xy = np.zeros((n, 2))
    z = np.zeros(n)
    orientation = np.zeros((n, 3))
    wrench = np.zeros((n, 6))
    gripper = np.zeros(n, dtype=bool)

    cur_xy = home_position(scene.workspace_bounds)
    cur_z, cur_yaw, cur_fz = Z_REST, 0.0, 0.0
    grasp_mid: Optional[int] = None
    anchors: list[AnchorTruth] = []

    for phase, start, length in zip(template.phases, starts, durations):
        end = start + length
        span = slice(start, end)
        obj = scene.object_by_id(template.role_object_id(phase.target)) if phase.target else None

        if phase.therblig in MOTION_THERBLIGS:
            target_xy = obj.centroid_array if obj else home_position(scene.workspace_bounds)
            target_z = Z_CONTACT if obj else Z_REST
            target_yaw = obj.orientation if obj else 0.0
            s = min_jerk((np.arange(length) + 1.0) / length)
            xy[span] = (1.0 - s)[:, None] * cur_xy + s[:, None] * target_xy
            z[span] = (1.0 - s) * cur_z + s * target_z + 4.0 * LIFT_HEIGHT * s * (1.0 - s)
            orientation[span, 2] = (1.0 - s) * cur_yaw + s * target_yaw
            cur_xy, cur_z, cur_yaw = target_xy.copy(), target_z, target_yaw
        else:
            xy[span] = cur_xy
            z[span] = cur_z
            orientation[span, 2] = cur_yaw

        use_axis = np.array([math.cos(cur_yaw), math.sin(cur_yaw)])
        if phase.therblig == Therblig.USE:
            profile = template.use_profile
            mid = (start + end) // 2
            offset = profile.amplitude * np.sin(2.0 * math.pi * profile.cycles * (np.arange(start, end) - mid) / length)
            xy[span] = cur_xy + offset[:, None] * use_axis[None, :]
            orientation[span, 0] = profile.tilt * np.sin(math.pi * (np.arange(length) + 0.5) / length)

        wrench[span] = _phase_wrench(phase.therblig, length, cur_fz, template.use_profile, use_axis)
        cur_fz = float(wrench[end - 1, 2])

        if phase.therblig == Therblig.GRASP:
            grasp_mid = (start + end) // 2
        elif phase.therblig == Therblig.RELEASE and grasp_mid is not None:
            gripper[grasp_mid : (start + end) // 2] = True
            grasp_mid = None

        if phase.therblig in ANCHOR_THERBLIGS:
            anchors.append(
                AnchorTruth(
                    therblig=phase.therblig,
                    start=int(start),
                    end=int(end),
                    object_id=obj.id,
                    role=phase.target,
                    point=(float(obj.centroid[0]), float(obj.centroid[1])),
                )
            )

    drift = np.cumsum(rng.normal(0.0, config.force_drift_rate, (n, 6)), axis=0) * DRIFT_SCALE
    wrench = wrench + drift

    pose = np.column_stack([xy, z, orientation])
    q = joint_angles(pose)
    qd = joint_speeds(q, config.sample_rate_hz)
    states = np.column_stack([q, qd, pose, wrench])
    if config.state_noise > 0:
        states = states + rng.normal(0.0, 1.0, states.shape) * (config.state_noise * CHANNEL_NOISE_SCALE)

    boundaries = jitter_boundaries([int(s) for s in starts[1:]], config.label_jitter, n, rng)
    cuts = [0] + boundaries + [n]
    labels = np.concatenate(
        [np.full(cuts[i + 1] - cuts[i], int(p.therblig), dtype=np.int64) for i, p in enumerate(template.phases)]
    )

    demo = Demonstration(
        states=states, gripper=gripper, task_id=template.name, sample_rate_hz=config.sample_rate_hz
    )
    return demo, LabelSequence(labels=labels), anchors
