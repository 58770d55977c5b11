"""
Object orientation from its 2D point set via PCA.

The angle is that of the principal eigenvector of the centered covariance,
folded into (-pi/2, pi/2] since an axis has no direction.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

from datagen.scene_generator import wrap_half_pi
from utils.errors import ContractError

ISOTROPY_RATIO = 1.05


@dataclass(frozen=True)
class OrientationEstimate:
    angle: float
    eigenvalue_ratio: float
    ill_defined: bool = False


def estimate_orientation_pca(points) -> OrientationEstimate:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise ContractError(f"orientation needs at least 3 points of shape (k, 2), got {pts.shape}")
    centered = pts - pts.mean(axis=0)
    cov = centered.T @ centered / pts.shape[0]
    if not np.trace(cov) > 0:
        raise ContractError("orientation needs points with a positive covariance trace")

    values, vectors = eigh(cov)  # ascending
    ratio = float(values[1] / values[0]) if values[0] > 0 else math.inf
    if ratio < ISOTROPY_RATIO:
        return OrientationEstimate(angle=0.0, eigenvalue_ratio=ratio, ill_defined=True)
    major = vectors[:, 1]
    return OrientationEstimate(angle=wrap_half_pi(math.atan2(major[1], major[0])), eigenvalue_ratio=ratio)


def object_orientation(obj) -> float:
    """PCA angle of a scene object, or its stored orientation when the point set is isotropic."""
    estimate = estimate_orientation_pca(obj.points_array)
    return obj.orientation if estimate.ill_defined else estimate.angle
