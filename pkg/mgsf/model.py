"""
model.py
--------

Rede MGSF: ramo BiLSTM + ramo Transformer, fusão recursiva com porta sigmoide
cujos parâmetros são gerados por uma meta-rede, e classificador softmax.
MGSF network: BiLSTM branch + Transformer branch, recursive sigmoid-gated
fusion whose parameters are emitted by a meta-network, and a softmax classifier.

Grupos de parâmetros por variante / Parameter groups per variant:

    full      lstm.*, tr.*, meta.{M,w1,b1,w2,b2}, cls.*
    no_meta   lstm.*, tr.*, gate.{w,b},           cls.*
    no_gate   lstm.*, tr.*, fuse.{w,b},           cls.*
    backbone  tr.*,                               cls.*

Convenção de vetor-linha / Row-vector convention: G = σ(c·W_g + b_g).
"""

import math
from typing import Mapping, Optional

import numpy as np

from contracts.config_contracts import MgsfConfig
from contracts.domain_contracts import NUM_THERBLIGS
from numeric.checkpoint import load_checkpoint, save_checkpoint
from numeric.layers import EncoderBlockParams, LstmParams, bilstm_layer, transformer_encoder
from numeric.tensor import Tensor, concat, getitem, lift, reshape, sigmoid, softmax, sub, tanh
from utils.errors import ContractError, NumericalError

INPUT_MEAN = "input.mean"
INPUT_STD = "input.std"
STAGES = ("input", "bilstm", "transformer", "fusion", "classifier")


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape=None, gain: float = 1.0) -> np.ndarray:
    limit = gain * math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, shape or (fan_in, fan_out))


def init_parameters(config: MgsfConfig, seed: Optional[int] = None) -> dict[str, np.ndarray]:
    """Glorot-uniform weights, zero biases, unit layer-norm gains, forget-gate bias 1."""
    rng = np.random.default_rng(config.seed if seed is None else seed)
    d_in, hl, dm, dc = config.d_input, config.lstm_hidden, config.d_model, config.fused_dim
    p: dict[str, np.ndarray] = {}

    if config.variant != "backbone":
        for direction in ("fwd", "bwd"):
            b = np.zeros(4 * hl)
            b[hl : 2 * hl] = 1.0
            p[f"lstm.{direction}.w_ih"] = _glorot(rng, d_in, 4 * hl)
            p[f"lstm.{direction}.w_hh"] = _glorot(rng, hl, 4 * hl)
            p[f"lstm.{direction}.b"] = b

    p["tr.in_proj.w"] = _glorot(rng, d_in, dm)
    p["tr.in_proj.b"] = np.zeros(dm)
    for layer in range(config.encoder_layers):
        prefix = f"tr.l{layer}"
        for name in ("wq", "wk", "wv", "wo"):
            p[f"{prefix}.attn.{name}"] = _glorot(rng, dm, dm)
        for name in ("bq", "bk", "bv", "bo"):
            p[f"{prefix}.attn.{name}"] = np.zeros(dm)
        p[f"{prefix}.ln1_gamma"] = np.ones(dm)
        p[f"{prefix}.ln1_beta"] = np.zeros(dm)
        p[f"{prefix}.ff_w1"] = _glorot(rng, dm, config.ffn_dim)
        p[f"{prefix}.ff_b1"] = np.zeros(config.ffn_dim)
        p[f"{prefix}.ff_w2"] = _glorot(rng, config.ffn_dim, dm)
        p[f"{prefix}.ff_b2"] = np.zeros(dm)
        p[f"{prefix}.ln2_gamma"] = np.ones(dm)
        p[f"{prefix}.ln2_beta"] = np.zeros(dm)

    if config.variant == "full":
        p["meta.M"] = rng.normal(0.0, 1.0, config.meta_dim)
        p["meta.w1"] = _glorot(rng, config.meta_dim, config.meta_hidden)
        p["meta.b1"] = np.zeros(config.meta_hidden)
        p["meta.w2"] = _glorot(rng, config.meta_hidden, dc * dc + dc, gain=0.1)
        p["meta.b2"] = np.zeros(dc * dc + dc)
    elif config.variant == "no_meta":
        p["gate.w"] = _glorot(rng, dc, dc)
        p["gate.b"] = np.zeros(dc)
    elif config.variant == "no_gate":
        p["fuse.w"] = _glorot(rng, dc, dc)
        p["fuse.b"] = np.zeros(dc)

    head_in = dm if config.variant == "backbone" else dc
    p["cls.w"] = _glorot(rng, head_in, NUM_THERBLIGS)
    p["cls.b"] = np.zeros(NUM_THERBLIGS)
    return p


class MgsfModel:
    """Learnable parameters plus the input standardization of one MGSF variant."""

    def __init__(
        self,
        config: MgsfConfig,
        params: Mapping[str, Tensor],
        feature_mean: Optional[np.ndarray] = None,
        feature_std: Optional[np.ndarray] = None,
    ):
        self.config = config
        self.params = dict(params)
        self.feature_mean = np.zeros(config.d_input) if feature_mean is None else np.asarray(feature_mean, dtype=np.float64)
        self.feature_std = np.ones(config.d_input) if feature_std is None else np.asarray(feature_std, dtype=np.float64)

    @classmethod
    def initialize(cls, config: MgsfConfig, seed: Optional[int] = None) -> "MgsfModel":
        arrays = init_parameters(config, seed)
        return cls(config, {k: Tensor(v, requires_grad=True, name=k) for k, v in arrays.items()})

    @property
    def variant(self) -> str:
        return self.config.variant

    def with_params(self, params: Mapping[str, Tensor]) -> "MgsfModel":
        return MgsfModel(self.config, params, self.feature_mean, self.feature_std)

    def set_standardization(self, mean: np.ndarray, std: np.ndarray) -> None:
        self.feature_mean = np.asarray(mean, dtype=np.float64)
        self.feature_std = np.where(np.asarray(std) > 1e-8, std, 1.0).astype(np.float64)

    def num_parameters(self) -> int:
        return int(sum(p.data.size for p in self.params.values()))

    # state -----------------------------------------------------------------

    def state_dict(self) -> dict[str, np.ndarray]:
        state = {k: np.array(v.data) for k, v in self.params.items()}
        state[INPUT_MEAN] = self.feature_mean.copy()
        state[INPUT_STD] = self.feature_std.copy()
        return state

    def load_state_dict(self, state: Mapping[str, np.ndarray]) -> None:
        missing = sorted(set(self.params) - set(state))
        if missing:
            raise ContractError(f"state is missing parameters {missing}")
        for name, p in self.params.items():
            arr = np.asarray(state[name])
            if arr.shape != p.shape:
                raise ContractError(f"parameter {name} has shape {arr.shape}, expected {p.shape}")
            p.data = arr.astype(p.data.dtype)
        if INPUT_MEAN in state:
            self.feature_mean = np.asarray(state[INPUT_MEAN], dtype=np.float64)
            self.feature_std = np.asarray(state[INPUT_STD], dtype=np.float64)

    def save(self, path: str, extra: Optional[Mapping] = None) -> str:
        return save_checkpoint(path, self.state_dict(), config=self.config.model_dump(mode="json"), extra=extra)

    @classmethod
    def load(cls, path: str) -> "MgsfModel":
        arrays, header = load_checkpoint(path)
        model = cls.initialize(MgsfConfig.model_validate(header.get("config", {})))
        model.load_state_dict(arrays)
        return model

    # inference -------------------------------------------------------------

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Tape-free forward pass; (n, 26) or (B, n, 26) -> probabilities."""
        return forward(X, self).data


# -------------------------------
# Fusion
# -------------------------------


def gate_parameters(model: MgsfModel) -> tuple[Tensor, Tensor]:
    """θ_g = (W_g, b_g): emitted by the meta-network (full) or learned directly (no_meta)."""
    dc = model.config.fused_dim
    p = model.params
    if model.variant == "full":
        M = reshape(p["meta.M"], (1, model.config.meta_dim))
        hidden = tanh(M @ p["meta.w1"] + p["meta.b1"])
        theta = hidden @ p["meta.w2"] + p["meta.b2"]
        w_g = reshape(getitem(theta, (0, slice(0, dc * dc))), (dc, dc))
        b_g = getitem(theta, (0, slice(dc * dc, dc * dc + dc)))
        return w_g, b_g
    if model.variant == "no_meta":
        return p["gate.w"], p["gate.b"]
    raise ContractError(f"variant {model.variant} has no gate parameters")


def gated_update(c, gate, f_prev) -> Tensor:
    """F ← G ⊙ c + (1 − G) ⊙ F."""
    gate = lift(gate)
    return gate * lift(c) + sub(1.0, gate) * lift(f_prev)


def recursive_gated_fusion(c, model: MgsfModel) -> Tensor:
    """
    T passos de fusão com porta; no_gate usa só uma projeção linear.
    T gated fusion steps; no_gate uses a plain linear projection.
    """
    c = lift(c)
    if model.variant == "backbone":
        raise ContractError("the backbone variant has no fusion unit")
    if c.shape[-1] != model.config.fused_dim:
        raise ContractError(f"fusion input width {c.shape[-1]} differs from d_c={model.config.fused_dim}")
    if model.variant == "no_gate":
        return c @ model.params["fuse.w"] + model.params["fuse.b"]

    F = c if model.config.fusion_init == "input" else Tensor(np.zeros(c.shape))
    for _ in range(model.config.fusion_steps):
        w_g, b_g = gate_parameters(model)
        F = gated_update(c, sigmoid(c @ w_g + b_g), F)
    return F


# -------------------------------
# Forward
# -------------------------------


def _stage(name: str, fn):
    try:
        return fn()
    except NumericalError as e:
        raise NumericalError(f"non-finite values in stage {name}: {e}", stage=name) from e


def forward(X, model: MgsfModel) -> Tensor:
    """(n, 26) or (B, n, 26) -> probabilities of the same leading shape with 7 columns."""
    x = X.data if isinstance(X, Tensor) else np.asarray(X, dtype=np.float64)
    if x.shape[-1] != model.config.d_input or x.ndim not in (2, 3) or x.shape[-2] < 1:
        raise ContractError(f"expected (n, {model.config.d_input}) input, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NumericalError("non-finite values in stage input", stage="input")

    cfg = model.config
    p = model.params
    xs = Tensor((x - model.feature_mean) / model.feature_std)

    blocks = [EncoderBlockParams.from_dict(p, f"tr.l{i}") for i in range(cfg.encoder_layers)]
    h_t = _stage(
        "transformer",
        lambda: transformer_encoder(xs, p["tr.in_proj.w"], p["tr.in_proj.b"], blocks, cfg.heads),
    )

    if model.variant == "backbone":
        fused = h_t
    else:
        h_l = _stage(
            "bilstm",
            lambda: bilstm_layer(xs, LstmParams.from_dict(p, "lstm.fwd"), LstmParams.from_dict(p, "lstm.bwd")),
        )
        fused = _stage("fusion", lambda: recursive_gated_fusion(concat([h_l, h_t], axis=-1), model))

    return _stage("classifier", lambda: softmax(fused @ p["cls.w"] + p["cls.b"], axis=-1))
