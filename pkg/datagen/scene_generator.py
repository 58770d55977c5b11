"""
scene_generator.py
------------------

Geração de cenas sintéticas: objetos de tarefa e distratores com centróide,
orientação, nuvem de pontos e descritor.
Synthetic scene generation: task objects and distractors with centroid,
orientation, point set and descriptor.

- Objetos de tarefa: ids obj_0, obj_1, ... / Task objects: ids obj_0, obj_1, ...
- Distratores: ids distractor_0, ... / Distractors: ids distractor_0, ...
- Separação mínima entre centróides: 5 cm / Minimum centroid separation: 5 cm
"""

import math
from typing import Optional, Sequence

import numpy as np

from contracts.domain_contracts import DESCRIPTOR_LENGTH, SceneDescriptor, SceneObject
from utils.errors import ContractError

DEFAULT_WORKSPACE = (0.0, 0.0, 0.8, 0.6)
MIN_SEPARATION = 0.05
PLACEMENT_MARGIN = 0.08
MAX_PLACEMENT_ATTEMPTS = 1000
RELAYOUT_DESCRIPTOR_NOISE = 0.01

TASK_CLASSES = ("block", "board", "cup", "sponge", "tool")
DISTRACTOR_CLASSES = ("can", "box", "bottle", "ball", "book", "marker")

# label streams inside a scene seed
_TASK_STREAM = 0
_DISTRACTOR_STREAM = 1
_LAYOUT_STREAM = 2


def home_position(workspace=DEFAULT_WORKSPACE) -> np.ndarray:
    """Rest pose of the end effector: centered in x, near the robot edge in y."""
    xmin, ymin, xmax, ymax = workspace
    return np.array([0.5 * (xmin + xmax), ymin + 0.1 * (ymax - ymin)])


def wrap_half_pi(angle: float) -> float:
    """Wrap an axis angle into (-pi/2, pi/2]."""
    a = math.fmod(angle, math.pi)
    if a <= -math.pi / 2:
        a += math.pi
    elif a > math.pi / 2:
        a -= math.pi
    return a


def object_points(centroid, orientation: float, half_length: float, half_width: float) -> np.ndarray:
    """Symmetric 5×3 grid over a rectangle whose long axis points along `orientation`."""
    u = np.linspace(-half_length, half_length, 5)
    v = np.linspace(-half_width, half_width, 3)
    local = np.array([(a, b) for a in u for b in v])
    c, s = math.cos(orientation), math.sin(orientation)
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + np.asarray(centroid, dtype=np.float64)


def identity_descriptor(seed: int, stream: int, index: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([seed, stream, index]))
    return rng.normal(0.0, 1.0, DESCRIPTOR_LENGTH)


def _sample_centroids(
    rng: np.random.Generator,
    count: int,
    workspace,
    fixed: Sequence[np.ndarray] = (),
    min_separation: float = MIN_SEPARATION,
    max_attempts: int = MAX_PLACEMENT_ATTEMPTS,
) -> list[np.ndarray]:
    xmin, ymin, xmax, ymax = workspace
    lo = np.array([xmin + PLACEMENT_MARGIN, ymin + PLACEMENT_MARGIN])
    hi = np.array([xmax - PLACEMENT_MARGIN, ymax - PLACEMENT_MARGIN])
    if np.any(hi <= lo):
        raise ContractError(f"workspace {workspace} is too small for the placement margin")

    placed: list[np.ndarray] = list(fixed)
    out: list[np.ndarray] = []
    for k in range(count):
        for _ in range(max_attempts):
            candidate = rng.uniform(lo, hi)
            if all(np.linalg.norm(candidate - p) >= min_separation for p in placed):
                placed.append(candidate)
                out.append(candidate)
                break
        else:
            raise ContractError(
                f"could not place object {k + 1} of {count} within {max_attempts} attempts; "
                f"use a larger workspace or fewer objects"
            )
    return out


def _make_object(rng, object_id: str, class_name: str, centroid, descriptor) -> SceneObject:
    half_length = float(rng.uniform(0.03, 0.05))
    half_width = half_length / float(rng.uniform(2.0, 3.0))
    orientation = wrap_half_pi(float(rng.uniform(-math.pi / 2, math.pi / 2)))
    return SceneObject(
        id=object_id,
        class_name=class_name,
        centroid=(float(centroid[0]), float(centroid[1])),
        orientation=orientation,
        points=[tuple(p) for p in object_points(centroid, orientation, half_length, half_width).tolist()],
        descriptor=descriptor.tolist(),
    )


def generate_scene(
    num_task_objects: int,
    num_distractors: int,
    seed: int,
    workspace=DEFAULT_WORKSPACE,
    min_separation: float = MIN_SEPARATION,
    max_attempts: int = MAX_PLACEMENT_ATTEMPTS,
) -> SceneDescriptor:
    """
    Gera uma cena com objetos posicionados uniformemente e separação mínima.
    Generate a scene with uniformly placed objects and a minimum separation.
    """
    if num_task_objects < 0 or num_distractors < 0:
        raise ContractError("object counts must be nonnegative")
    rng = np.random.default_rng(np.random.SeedSequence([seed, _LAYOUT_STREAM]))
    centroids = _sample_centroids(
        rng, num_task_objects + num_distractors, workspace, min_separation=min_separation, max_attempts=max_attempts
    )

    objects = []
    for i in range(num_task_objects):
        objects.append(
            _make_object(
                rng,
                f"obj_{i}",
                TASK_CLASSES[i % len(TASK_CLASSES)],
                centroids[i],
                identity_descriptor(seed, _TASK_STREAM, i),
            )
        )
    for j in range(num_distractors):
        objects.append(
            _make_object(
                rng,
                f"distractor_{j}",
                DISTRACTOR_CLASSES[j % len(DISTRACTOR_CLASSES)],
                centroids[num_task_objects + j],
                identity_descriptor(seed, _DISTRACTOR_STREAM, j),
            )
        )
    return SceneDescriptor(workspace_bounds=tuple(workspace), objects=objects)


def repose_object(obj: SceneObject, centroid, orientation: float, descriptor: Optional[np.ndarray] = None) -> SceneObject:
    """Move an object rigidly to a new centroid and orientation, keeping its shape."""
    c, s = math.cos(-obj.orientation), math.sin(-obj.orientation)
    local = (obj.points_array - obj.centroid_array) @ np.array([[c, -s], [s, c]]).T
    c, s = math.cos(orientation), math.sin(orientation)
    points = local @ np.array([[c, -s], [s, c]]).T + np.asarray(centroid, dtype=np.float64)
    return obj.model_copy(
        update={
            "centroid": (float(centroid[0]), float(centroid[1])),
            "orientation": float(orientation),
            "points": [tuple(p) for p in points.tolist()],
            "descriptor": (descriptor if descriptor is not None else obj.descriptor_array).tolist(),
        }
    )


def relayout(
    scene: SceneDescriptor,
    seed: int,
    num_distractors: int = 0,
    keep_ids: Optional[Sequence[str]] = None,
    descriptor_noise: float = RELAYOUT_DESCRIPTOR_NOISE,
    min_separation: float = MIN_SEPARATION,
    max_rotation: Optional[float] = None,
) -> SceneDescriptor:
    """
    Reposiciona os objetos de tarefa e sorteia novos distratores (não vistos).
    Re-pose the task objects and draw new (unseen) distractors.

    `keep_ids` default: every object whose id starts with "obj_".
    `max_rotation` None draws a fresh orientation; otherwise the object turns
    by at most that angle from its current one.
    """
    kept = [o for o in scene.objects if (o.id in keep_ids if keep_ids is not None else o.id.startswith("obj_"))]
    rng = np.random.default_rng(np.random.SeedSequence([seed, _LAYOUT_STREAM, 1]))
    centroids = _sample_centroids(rng, len(kept) + num_distractors, scene.workspace_bounds, min_separation=min_separation)

    objects = []
    for obj, centroid in zip(kept, centroids):
        if max_rotation is None:
            orientation = wrap_half_pi(float(rng.uniform(-math.pi / 2, math.pi / 2)))
        else:
            orientation = wrap_half_pi(obj.orientation + float(rng.uniform(-max_rotation, max_rotation)))
        descriptor = obj.descriptor_array + rng.normal(0.0, descriptor_noise, obj.descriptor_array.shape)
        objects.append(repose_object(obj, centroid, orientation, descriptor))
    for j in range(num_distractors):
        objects.append(
            _make_object(
                rng,
                f"distractor_{j}",
                DISTRACTOR_CLASSES[(j + 3) % len(DISTRACTOR_CLASSES)],
                centroids[len(kept) + j],
                identity_descriptor(seed, _DISTRACTOR_STREAM + 10, j),
            )
        )
    return SceneDescriptor(workspace_bounds=scene.workspace_bounds, objects=objects)


def translate_scene(scene: SceneDescriptor, offset) -> SceneDescriptor:
    """Shift every object by `offset`, keeping orientations and descriptors."""
    dx, dy = float(offset[0]), float(offset[1])
    objects = [
        o.model_copy(
            update={
                "centroid": (o.centroid[0] + dx, o.centroid[1] + dy),
                "points": [(p[0] + dx, p[1] + dy) for p in o.points],
            }
        )
        for o in scene.objects
    ]
    return SceneDescriptor(workspace_bounds=scene.workspace_bounds, objects=objects)


def rotate_object_in_place(scene: SceneDescriptor, object_id: str, angle: float) -> SceneDescriptor:
    """Rotate one object about its own centroid by `angle`."""
    objects = []
    for o in scene.objects:
        if o.id == object_id:
            o = repose_object(o, o.centroid, wrap_half_pi(o.orientation + angle))
        objects.append(o)
    return SceneDescriptor(workspace_bounds=scene.workspace_bounds, objects=objects)
