"""Binary cross-entropy over softmax probability rows."""

import numpy as np

from numeric.tensor import Tensor, accumulate, lift, make_result
from utils.errors import ShapeError

PROB_CLAMP = 1e-7


def bce_loss(probs, targets, clamp: float = PROB_CLAMP) -> Tensor:
    """
    Mean over every element of -[y·ln p + (1-y)·ln(1-p)], p clamped to [clamp, 1-clamp].

    Clamped entries receive zero gradient.
    """
    probs = lift(probs)
    y = targets.data if isinstance(targets, Tensor) else np.asarray(targets, dtype=probs.data.dtype)
    if probs.shape != y.shape:
        raise ShapeError("bce_loss", probs.shape, y.shape)

    p = np.clip(probs.data, clamp, 1.0 - clamp)
    n = p.size
    value = -(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)).mean()
    inside = (probs.data > clamp) & (probs.data < 1.0 - clamp)

    def backward(g):
        local = (-(y / p) + (1.0 - y) / (1.0 - p)) / n
        accumulate(probs, g * np.where(inside, local, 0.0))

    return make_result("bce_loss", np.asarray(value), (probs,), backward)
