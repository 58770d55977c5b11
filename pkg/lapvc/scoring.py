"""
Alignment score of corrected points against ground truth, in [0, 1].

    s_i = max(0, 1 - ‖p_i - p*_i‖ / d_ref_i)      score = mean s_i

d_ref is the bounding-box diagonal of the object associated with the ground
truth point (given ids, or the nearest centroid within 8 cm), or 10 cm when
there is none.
"""

from typing import Optional, Sequence

import numpy as np

from actionreg.anchors import ASSOCIATION_RADIUS, nearest_object
from contracts.domain_contracts import SceneDescriptor
from utils.errors import ContractError

FALLBACK_REFERENCE = 0.10


def associate(scene: SceneDescriptor, points: np.ndarray, radius: float = ASSOCIATION_RADIUS) -> list[Optional[str]]:
    """Nearest object id within `radius` of each point, else None."""
    out = []
    for p in points:
        object_id, distance = nearest_object(scene, p)
        out.append(object_id if distance <= radius else None)
    return out


def reference_lengths(
    scene: Optional[SceneDescriptor],
    object_ids: Optional[Sequence[Optional[str]]],
    count: int,
) -> np.ndarray:
    refs = np.full(count, FALLBACK_REFERENCE)
    if scene is None or object_ids is None:
        return refs
    for i, object_id in enumerate(object_ids):
        if object_id is not None and scene.has_object(object_id):
            diagonal = scene.object_by_id(object_id).bbox_diagonal()
            if diagonal > 0:
                refs[i] = diagonal
    return refs


def point_scores(corrected, ground_truth, references) -> np.ndarray:
    p = np.atleast_2d(np.asarray(corrected, dtype=np.float64))
    q = np.atleast_2d(np.asarray(ground_truth, dtype=np.float64))
    if p.shape != q.shape:
        raise ContractError(f"got {p.shape[0]} corrected points for {q.shape[0]} ground-truth points")
    errors = np.linalg.norm(p - q, axis=1)
    return np.maximum(0.0, 1.0 - errors / np.asarray(references, dtype=np.float64))


def alignment_score(
    corrected,
    ground_truth,
    scene: Optional[SceneDescriptor] = None,
    object_ids: Optional[Sequence[Optional[str]]] = None,
) -> float:
    q = np.atleast_2d(np.asarray(ground_truth, dtype=np.float64))
    if q.shape[0] == 0:
        raise ContractError("alignment score needs at least one point")
    if scene is not None and object_ids is None:
        object_ids = associate(scene, q)
    return float(point_scores(corrected, q, reference_lengths(scene, object_ids, q.shape[0])).mean())
