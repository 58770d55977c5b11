"""
Recurrent and attention layers built on numeric.tensor.

Row-vector convention everywhere: inputs are (..., n, d) and weights are
(d_in, d_out), so a dense layer is `x @ w + b`.
"""

from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from numeric.tensor import (
    Tensor,
    add,
    concat,
    gelu,
    layer_norm,
    lift,
    matmul,
    mul,
    reshape,
    sigmoid,
    softmax,
    stack,
    swap_last,
    tanh,
    transpose,
)
from utils.errors import ContractError, ShapeError

# -------------------------------
# LSTM
# -------------------------------


@dataclass
class LstmParams:
    """Gate order inside the 4H axis: input, forget, cell, output."""

    w_ih: Tensor  # (d, 4H)
    w_hh: Tensor  # (H, 4H)
    b: Tensor  # (4H,)

    @property
    def hidden(self) -> int:
        return self.w_hh.shape[0]

    @classmethod
    def from_dict(cls, params: Mapping[str, Tensor], prefix: str) -> "LstmParams":
        return cls(params[f"{prefix}.w_ih"], params[f"{prefix}.w_hh"], params[f"{prefix}.b"])


def _lstm_gates(projected: Tensor, h_prev: Tensor, c_prev: Tensor, w_hh: Tensor, hidden: int):
    gates = projected + h_prev @ w_hh
    i = sigmoid(gates[..., 0:hidden])
    f = sigmoid(gates[..., hidden : 2 * hidden])
    g = tanh(gates[..., 2 * hidden : 3 * hidden])
    o = sigmoid(gates[..., 3 * hidden : 4 * hidden])
    c = f * c_prev + i * g
    h = o * tanh(c)
    return h, c


def lstm_cell(x, h_prev, c_prev, params: LstmParams):
    x, h_prev, c_prev = lift(x), lift(h_prev), lift(c_prev)
    hidden = params.hidden
    if params.w_ih.shape != (x.shape[-1], 4 * hidden):
        raise ShapeError("lstm_cell", x.shape, params.w_ih.shape)
    if h_prev.shape[-1] != hidden or c_prev.shape != h_prev.shape:
        raise ShapeError("lstm_cell", h_prev.shape, c_prev.shape)
    return _lstm_gates(x @ params.w_ih + params.b, h_prev, c_prev, params.w_hh, hidden)


def lstm_scan(X, params: LstmParams, reverse: bool = False) -> Tensor:
    """
    Run one LSTM direction over the time axis (-2) of X: (..., n, d) -> (..., n, H).

    The input projection is computed once for all steps.
    """
    X = lift(X)
    hidden = params.hidden
    if X.ndim < 2 or params.w_ih.shape != (X.shape[-1], 4 * hidden):
        raise ShapeError("lstm_scan", X.shape, params.w_ih.shape)
    n = X.shape[-2]
    projected = X @ params.w_ih + params.b
    state_shape = X.shape[:-2] + (hidden,)
    h = Tensor(np.zeros(state_shape))
    c = Tensor(np.zeros(state_shape))

    steps = range(n - 1, -1, -1) if reverse else range(n)
    outputs: list[Optional[Tensor]] = [None] * n
    for t in steps:
        h, c = _lstm_gates(projected[..., t, :], h, c, params.w_hh, hidden)
        outputs[t] = h
    return stack(outputs, axis=-2)


def bilstm_layer(X, forward: LstmParams, backward: LstmParams) -> Tensor:
    """(..., n, d) -> (..., n, 2H): forward states then backward states per timestep."""
    return concat([lstm_scan(X, forward), lstm_scan(X, backward, reverse=True)], axis=-1)


# -------------------------------
# Attention
# -------------------------------


def positional_encoding(n: int, d_model: int) -> np.ndarray:
    """Sinusoidal encoding, sin on even columns and cos on odd columns."""
    position = np.arange(n, dtype=np.float64)[:, None]
    div = np.exp(np.arange(0, d_model, 2, dtype=np.float64) * (-np.log(10000.0) / d_model))
    pe = np.zeros((n, d_model), dtype=np.float64)
    pe[:, 0::2] = np.sin(position * div)
    pe[:, 1::2] = np.cos(position * div[: d_model // 2])
    return pe


@dataclass
class AttentionParams:
    wq: Tensor
    bq: Tensor
    wk: Tensor
    bk: Tensor
    wv: Tensor
    bv: Tensor
    wo: Tensor
    bo: Tensor

    @classmethod
    def from_dict(cls, params: Mapping[str, Tensor], prefix: str) -> "AttentionParams":
        return cls(*(params[f"{prefix}.{k}"] for k in ("wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo")))


def _split_heads(x: Tensor, heads: int) -> Tensor:
    lead = x.shape[:-2]
    n, d = x.shape[-2:]
    x = reshape(x, lead + (n, heads, d // heads))
    k = len(lead)
    return transpose(x, list(range(k)) + [k + 1, k, k + 2])


def _merge_heads(x: Tensor) -> Tensor:
    lead = x.shape[:-3]
    heads, n, dk = x.shape[-3:]
    k = len(lead)
    x = transpose(x, list(range(k)) + [k + 1, k, k + 2])
    return reshape(x, lead + (n, heads * dk))


def multihead_attention(X, heads: int, params: AttentionParams, return_weights: bool = False):
    """
    Scaled dot-product self-attention over the time axis of X: (..., n, d_model).

    With return_weights=True also returns the (..., heads, n, n) weights.
    """
    X = lift(X)
    d_model = X.shape[-1]
    if d_model % heads != 0:
        raise ContractError(f"d_model {d_model} is not divisible by heads {heads}")
    if params.wq.shape != (d_model, d_model):
        raise ShapeError("multihead_attention", X.shape, params.wq.shape)

    q = _split_heads(X @ params.wq + params.bq, heads)
    k = _split_heads(X @ params.wk + params.bk, heads)
    v = _split_heads(X @ params.wv + params.bv, heads)
    scale = 1.0 / np.sqrt(d_model // heads)
    weights = softmax(mul(q @ swap_last(k), scale), axis=-1)
    out = _merge_heads(weights @ v) @ params.wo + params.bo
    return (out, weights) if return_weights else out


# -------------------------------
# Encoder
# -------------------------------


@dataclass
class EncoderBlockParams:
    attention: AttentionParams
    ln1_gamma: Tensor
    ln1_beta: Tensor
    ff_w1: Tensor
    ff_b1: Tensor
    ff_w2: Tensor
    ff_b2: Tensor
    ln2_gamma: Tensor
    ln2_beta: Tensor

    @classmethod
    def from_dict(cls, params: Mapping[str, Tensor], prefix: str) -> "EncoderBlockParams":
        return cls(
            AttentionParams.from_dict(params, f"{prefix}.attn"),
            *(
                params[f"{prefix}.{k}"]
                for k in ("ln1_gamma", "ln1_beta", "ff_w1", "ff_b1", "ff_w2", "ff_b2", "ln2_gamma", "ln2_beta")
            ),
        )


def encoder_block(X, heads: int, params: EncoderBlockParams) -> Tensor:
    """Post-norm block: LN(X + MHA(X)) then LN(h + FFN(h)), GELU inside the FFN."""
    X = lift(X)
    h = layer_norm(add(X, multihead_attention(X, heads, params.attention))) * params.ln1_gamma + params.ln1_beta
    f = matmul(gelu(h @ params.ff_w1 + params.ff_b1), params.ff_w2) + params.ff_b2
    return layer_norm(add(h, f)) * params.ln2_gamma + params.ln2_beta


def transformer_encoder(
    X,
    in_w: Tensor,
    in_b: Tensor,
    blocks: list[EncoderBlockParams],
    heads: int,
    positional: bool = True,
) -> Tensor:
    """Project to d_model, add the positional encoding, run the encoder blocks."""
    X = lift(X)
    z = X @ in_w + in_b
    if positional:
        z = z + positional_encoding(z.shape[-2], z.shape[-1])
    for block in blocks:
        z = encoder_block(z, heads, block)
    return z
