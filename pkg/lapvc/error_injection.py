"""
Injected perception / calibration error on predicted points.

    p' = R(rotation_error) · p + bias + N(0, sigma²)      per point, seeded
"""

import math
from typing import Optional

import numpy as np

from contracts.correction_contracts import ErrorModel


def inject_error(points, model: ErrorModel, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.size == 0:
        return pts.reshape(0, 2)
    if model.is_zero:
        return pts.copy()
    rng = rng or np.random.default_rng(model.seed)
    c, s = math.cos(model.rotation_error), math.sin(model.rotation_error)
    out = pts @ np.array([[c, -s], [s, c]]).T + np.asarray(model.bias)
    if model.noise_sigma > 0:
        out = out + rng.normal(0.0, model.noise_sigma, out.shape)
    return out
