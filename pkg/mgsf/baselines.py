"""
Hand-tuned threshold segmenter used as a reference row next to the MGSF variants.

Rules per timestep, from end-effector speed, fz oscillation and the gripper:

    gripper open : moving -> TransportEmpty, else Rest
    near closing : Grasp          near opening : Release
    gripper shut : moving -> TransportLoaded,
                   oscillating force -> Use, else Delay
"""

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter1d

from contracts.domain_contracts import FORCE_SLICE, POSITION_SLICE, Demonstration, LabelSequence, Therblig
from mgsf.segmentation import smooth_labels


@dataclass(frozen=True)
class ThresholdSettings:
    speed: float = 0.004  # m per step
    force_std: float = 0.25  # N
    transition_steps: int = 12
    speed_window: int = 5
    force_window: int = 15
    smoothing_window: int = 9


def ee_speed(demo: Demonstration, window: int = 5) -> np.ndarray:
    """Per-step end-effector displacement in meters, box-smoothed."""
    pos = demo.states[:, POSITION_SLICE]
    step = np.zeros(demo.n)
    step[1:] = np.linalg.norm(np.diff(pos, axis=0), axis=1)
    return uniform_filter1d(step, size=window, mode="nearest")


def rolling_std(values: np.ndarray, window: int) -> np.ndarray:
    mean = uniform_filter1d(values, size=window, mode="nearest")
    sq = uniform_filter1d(values * values, size=window, mode="nearest")
    return np.sqrt(np.maximum(sq - mean * mean, 0.0))


def threshold_segment(demo: Demonstration, settings: ThresholdSettings = ThresholdSettings()) -> LabelSequence:
    speed = ee_speed(demo, settings.speed_window)
    fz_std = rolling_std(demo.states[:, FORCE_SLICE.start + 2], settings.force_window)
    closed = np.asarray(demo.gripper, dtype=bool)
    moving = speed > settings.speed

    labels = np.where(
        closed,
        np.where(moving, Therblig.TRANSPORT_LOADED, np.where(fz_std > settings.force_std, Therblig.USE, Therblig.DELAY)),
        np.where(moving, Therblig.TRANSPORT_EMPTY, Therblig.REST),
    ).astype(np.int64)

    change = np.flatnonzero(np.diff(closed.astype(np.int8))) + 1
    w = settings.transition_steps
    for t in change:
        code = Therblig.GRASP if closed[t] else Therblig.RELEASE
        labels[max(0, t - w) : min(demo.n, t + w)] = code

    return LabelSequence(labels=smooth_labels(labels, settings.smoothing_window))
