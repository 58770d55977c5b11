"""
Fixed synthetic arm map from end-effector pose to 7 joint angles.

    q = clip(A · [x, y, z, roll, pitch, yaw] + b, -JOINT_LIMIT, JOINT_LIMIT)
    qd[t] = (q[t] - q[t-1]) · sample_rate,  qd[0] = 0

The map is linear so a pose change Δ moves the joints by A·Δ, which is what
trajectory warping uses to remap joint channels.
"""

import numpy as np

JOINT_LIMIT = np.pi

ARM_MATRIX = np.array(
    [
        [1.20, -0.40, 0.00, 0.00, 0.00, 0.30],
        [0.30, 1.10, -0.80, 0.00, 0.20, 0.00],
        [-0.50, 0.60, 1.40, 0.10, 0.00, 0.00],
        [0.00, -0.90, 0.70, 0.00, 0.50, 0.10],
        [0.40, 0.00, 0.00, 0.90, 0.00, 0.20],
        [0.00, 0.30, -0.30, 0.00, 1.00, -0.10],
        [0.10, 0.00, 0.20, 0.20, 0.00, 1.00],
    ]
)

ARM_OFFSET = np.array([0.10, -0.30, 0.25, 0.00, -0.15, 0.05, 0.00])


def joint_angles(poses: np.ndarray) -> np.ndarray:
    """(n, 6) poses -> (n, 7) joint angles."""
    return np.clip(poses @ ARM_MATRIX.T + ARM_OFFSET, -JOINT_LIMIT, JOINT_LIMIT)


def joint_speeds(angles: np.ndarray, sample_rate_hz: float) -> np.ndarray:
    speeds = np.zeros_like(angles)
    speeds[1:] = np.diff(angles, axis=0) * sample_rate_hz
    return speeds


def remap_joints(angles: np.ndarray, pose_delta: np.ndarray) -> np.ndarray:
    """Move joint angles by the arm-map response to a pose change."""
    return np.clip(angles + pose_delta @ ARM_MATRIX.T, -JOINT_LIMIT, JOINT_LIMIT)
