"""
Adam optimizer and finite-difference gradient checking.
"""

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

from numeric.tensor import Tape, Tensor, precision
from utils.errors import NumericalError, ShapeError


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    params: Mapping[str, Tensor],
    grads: Mapping[str, Optional[np.ndarray]],
    state: AdamState,
) -> Mapping[str, Tensor]:
    """
    One bias-corrected Adam update. Each parameter's `.data` is replaced by a
    new array; a missing gradient counts as zero.
    """
    for name, g in grads.items():
        if g is not None and not np.all(np.isfinite(g)):
            raise NumericalError(f"non-finite gradient for parameter {name}", name=name)

    state.step += 1
    c1 = 1.0 - state.beta1**state.step
    c2 = 1.0 - state.beta2**state.step
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p.data)
        elif g.shape != p.shape:
            raise ShapeError(f"adam_step[{name}]", p.shape, g.shape)
        m = state.m.get(name)
        v = state.v.get(name)
        m = state.beta1 * (m if m is not None else np.zeros_like(p.data)) + (1.0 - state.beta1) * g
        v = state.beta2 * (v if v is not None else np.zeros_like(p.data)) + (1.0 - state.beta2) * g * g
        state.m[name], state.v[name] = m, v
        update = state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        p.data = (p.data - update).astype(p.data.dtype)
    return params


def collect_grads(params: Mapping[str, Tensor]) -> dict[str, Optional[np.ndarray]]:
    return {name: p.grad for name, p in params.items()}


def zero_grads(params: Mapping[str, Tensor]) -> None:
    for p in params.values():
        p.zero_grad()


# -------------------------------
# Gradient check
# -------------------------------

GRAD_CHECK_STEP = 1e-5
GRAD_CHECK_FLOOR = 1e-5


def relative_error(analytic: float, numeric: float, floor: float = GRAD_CHECK_FLOOR) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def grad_check(
    f: Callable[[dict[str, Tensor]], Tensor],
    params: Mapping[str, np.ndarray],
    h: float = GRAD_CHECK_STEP,
    max_checks_per_param: Optional[int] = None,
    seed: int = 0,
) -> float:
    """
    Compare tape gradients of the scalar f(params) against central differences
    in float64 and return the worst relative error.

    `max_checks_per_param` samples that many coordinates per parameter
    (all coordinates when None).
    """
    rng = np.random.default_rng(seed)
    with precision(np.float64):
        tensors = {
            name: Tensor(np.array(value, dtype=np.float64), requires_grad=True, name=name)
            for name, value in params.items()
        }
        with Tape() as tape:
            out = f(tensors)
        if out.data.size != 1:
            raise ShapeError("grad_check", out.shape, ())
        tape.backward(out)

        worst = 0.0
        for name, t in tensors.items():
            analytic = (t.grad if t.grad is not None else np.zeros_like(t.data)).reshape(-1)
            flat = t.data.reshape(-1)
            if max_checks_per_param is None or max_checks_per_param >= flat.size:
                coords = np.arange(flat.size)
            else:
                coords = rng.choice(flat.size, size=max_checks_per_param, replace=False)
            for i in coords:
                original = flat[i]
                flat[i] = original + h
                f_plus = float(f(tensors).data)
                flat[i] = original - h
                f_minus = float(f(tensors).data)
                flat[i] = original
                numeric = (f_plus - f_minus) / (2.0 * h)
                worst = max(worst, relative_error(float(analytic[i]), numeric))
    return worst
