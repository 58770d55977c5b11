"""
Rule-based correction policies.

    passthrough : returns the points unchanged
    snap        : moves a point onto the nearest object centroid when it lies
                  within the snap radius (6 cm), else keeps it
"""

import numpy as np

from contracts.correction_contracts import DEFAULT_SNAP_RADIUS, CorrectionResponse
from contracts.domain_contracts import SceneDescriptor


def as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    return pts.reshape(-1, 2)


def passthrough_points(points) -> CorrectionResponse:
    pts = as_points(points)
    return CorrectionResponse(
        corrected_points=[tuple(p) for p in pts.tolist()],
        rationale=["passthrough"] * pts.shape[0],
    )


def snap_points(points, scene: SceneDescriptor, radius: float = DEFAULT_SNAP_RADIUS) -> CorrectionResponse:
    pts = as_points(points)
    centroids = scene.centroids()
    out, rationale = [], []
    for p in pts:
        if centroids.shape[0]:
            d = np.linalg.norm(centroids - p, axis=1)
            k = int(np.argmin(d))
            if d[k] <= radius:
                out.append((float(centroids[k, 0]), float(centroids[k, 1])))
                rationale.append(f"snap:{scene.objects[k].id}")
                continue
        out.append((float(p[0]), float(p[1])))
        rationale.append("snap:none")
    return CorrectionResponse(corrected_points=out, rationale=rationale)
