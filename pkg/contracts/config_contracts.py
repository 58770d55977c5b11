"""
config_contracts.py
-------------------

Contratos de configuração do gerador, da rede MGSF e dos cenários de teste.
Configuration contracts for the generator, the MGSF network and the test
scenarios.

Todos os modelos podem ser montados a partir do arquivo chave=valor via
utils.settings.build_config.
Every model can be built from the key=value file through
utils.settings.build_config.
"""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from contracts.correction_contracts import CorrectionPolicy, ErrorModel
from contracts.domain_contracts import DEFAULT_DURATION_STEPS, DEFAULT_SAMPLE_RATE_HZ, NUM_FEATURES

SEED_UPPER_BOUND = 2**64

# -------------------------------
# Generator
# -------------------------------


class GeneratorConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    num_demos: int = Field(default=52, ge=1)
    duration_steps: int = Field(default=DEFAULT_DURATION_STEPS, ge=2)
    sample_rate_hz: float = Field(default=DEFAULT_SAMPLE_RATE_HZ, gt=0)
    state_noise: float = Field(default=0.05, ge=0)
    force_drift_rate: float = Field(default=0.02, ge=0)
    label_jitter: int = Field(default=2, ge=0)
    num_distractors: int = Field(default=0, ge=0)
    seed: int = Field(default=0, ge=0, lt=SEED_UPPER_BOUND)
    split_fractions: tuple[float, float, float] = (0.6, 0.2, 0.2)

    @model_validator(mode="after")
    def _fractions(self):
        if any(f < 0 for f in self.split_fractions):
            raise ValueError(f"split fractions must be nonnegative: {self.split_fractions}")
        if abs(sum(self.split_fractions) - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {sum(self.split_fractions)}")
        return self


# -------------------------------
# MGSF
# -------------------------------

Variant = Literal["full", "no_meta", "no_gate", "backbone"]
VARIANTS: tuple[str, ...] = ("full", "no_meta", "no_gate", "backbone")


class MgsfConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    d_input: int = Field(default=NUM_FEATURES, ge=1)
    lstm_hidden: int = Field(default=64, ge=1)
    d_model: int = Field(default=64, ge=1)
    encoder_layers: int = Field(default=2, ge=1)
    heads: int = Field(default=4, ge=1)
    ffn_dim: int = Field(default=128, ge=1)
    fusion_steps: int = Field(default=3, ge=1)
    meta_dim: int = Field(default=32, ge=1)
    meta_hidden: int = Field(default=64, ge=1)
    variant: Variant = "full"
    fusion_init: Literal["input", "zeros"] = "input"
    # training
    epochs: int = Field(default=30, ge=1)
    batch_size: int = Field(default=8, ge=1)
    lr: float = Field(default=1e-3, gt=0)
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    adam_eps: float = Field(default=1e-8, gt=0)
    patience: int = Field(default=5, ge=1)
    smoothing_window: int = Field(default=5, ge=1)
    seed: int = Field(default=0, ge=0, lt=SEED_UPPER_BOUND)

    @model_validator(mode="after")
    def _divisible(self):
        if self.d_model % self.heads != 0:
            raise ValueError(f"d_model {self.d_model} must be divisible by heads {self.heads}")
        if self.smoothing_window % 2 == 0:
            raise ValueError("smoothing_window must be odd")
        return self

    @property
    def fused_dim(self) -> int:
        """d_c = 2·H_L + d_model."""
        return 2 * self.lstm_hidden + self.d_model


# -------------------------------
# Scenario
# -------------------------------

SIM_TASK_OBJECTS = 2
COM_DISTRACTOR_RANGE = (3, 6)


class ScenarioConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    mode: Literal["sim", "com"] = "sim"
    num_task_objects: int = Field(default=SIM_TASK_OBJECTS, ge=1)
    min_distractors: Optional[int] = None
    max_distractors: Optional[int] = None
    trials_per_task: int = Field(default=50, ge=1)
    success_tolerance: float = Field(default=0.02, gt=0)
    error_model: ErrorModel = Field(default_factory=lambda: ErrorModel(bias=(0.03, 0.0), noise_sigma=0.01))
    policy: CorrectionPolicy = Field(default_factory=lambda: CorrectionPolicy(kind="snap"))
    seed: int = Field(default=0, ge=0, lt=SEED_UPPER_BOUND)

    @model_validator(mode="before")
    @classmethod
    def _mode_defaults(cls, data):
        if not isinstance(data, dict):
            return data
        data = dict(data)
        mode = data.get("mode", "sim")
        low, high = (0, 0) if mode == "sim" else COM_DISTRACTOR_RANGE
        if data.get("min_distractors") is None:
            data["min_distractors"] = low
        if data.get("max_distractors") is None:
            data["max_distractors"] = high
        return data

    @model_validator(mode="after")
    def _consistent(self):
        if self.mode == "sim" and (self.min_distractors or self.max_distractors):
            raise ValueError("sim scenarios contain task objects only")
        if self.mode == "com":
            low, high = COM_DISTRACTOR_RANGE
            if not (low <= self.min_distractors <= self.max_distractors <= high):
                raise ValueError(
                    f"com scenarios need {low}..{high} distractors, got "
                    f"{self.min_distractors}..{self.max_distractors}"
                )
        return self
