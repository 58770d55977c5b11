"""
Per-anchor SE(2) transforms from the demo layout to the new layout.

For an anchor on object k:

    dθ = wrap(orientation_new(k) - orientation_demo(k))      in (-pi/2, pi/2]
    t  = centroid_new(k) - R(dθ) · centroid_demo(k)

so the transform carries the demo centroid onto the new centroid and
rotates about it. Anchors without an object keep the identity.
"""

from typing import Sequence

import numpy as np

from actionreg.matching import require_matches
from actionreg.orientation import object_orientation
from contracts.domain_contracts import SceneDescriptor, SceneObject
from contracts.registration_contracts import Anchor, MatchResult, SceneTransform
from datagen.scene_generator import wrap_half_pi


def object_transform(demo_obj: SceneObject, new_obj: SceneObject) -> SceneTransform:
    d_theta = wrap_half_pi(object_orientation(new_obj) - object_orientation(demo_obj))
    rotation = SceneTransform(rotation=d_theta).rotation_matrix()
    pivot = demo_obj.centroid_array
    translation = new_obj.centroid_array - rotation @ pivot
    return SceneTransform(
        rotation=d_theta,
        translation=(float(translation[0]), float(translation[1])),
        pivot=(float(pivot[0]), float(pivot[1])),
    )


def compute_transforms(
    anchors: Sequence[Anchor],
    matches: MatchResult,
    demo_scene: SceneDescriptor,
    new_scene: SceneDescriptor,
) -> list[SceneTransform]:
    require_matches(matches, [a.object_id for a in anchors if a.object_id is not None])
    cache: dict[str, SceneTransform] = {}
    out = []
    for anchor in anchors:
        if anchor.object_id is None:
            out.append(SceneTransform.identity())
            continue
        if anchor.object_id not in cache:
            cache[anchor.object_id] = object_transform(
                demo_scene.object_by_id(anchor.object_id),
                new_scene.object_by_id(matches.new_id_for(anchor.object_id)),
            )
        out.append(cache[anchor.object_id])
    return out


def retarget(transform: SceneTransform, demo_point, target_point) -> SceneTransform:
    """Shift a transform so it carries `demo_point` exactly onto `target_point`."""
    offset = np.asarray(target_point, dtype=np.float64) - transform.apply(demo_point)
    if not np.any(offset):
        return transform
    t = np.asarray(transform.translation) + offset
    return transform.model_copy(update={"translation": (float(t[0]), float(t[1]))})
