"""
correction_contracts.py
-----------------------

Contratos da camada de correção visual (LAP-VC): modelo de erro, política de
correção e o protocolo de requisição/resposta do endpoint externo.
Contracts of the visual-correction layer (LAP-VC): error model, correction
policy and the request/response protocol of the external endpoint.
"""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, FiniteFloat

PROTOCOL_VERSION = 1

DEFAULT_SNAP_RADIUS = 0.06


class ErrorModel(BaseModel):
    model_config = ConfigDict(frozen=True)

    bias: tuple[FiniteFloat, FiniteFloat] = (0.0, 0.0)
    noise_sigma: FiniteFloat = Field(default=0.0, ge=0)
    rotation_error: FiniteFloat = 0.0
    seed: int = Field(default=0, ge=0)

    @property
    def is_zero(self) -> bool:
        return self.bias == (0.0, 0.0) and self.noise_sigma == 0.0 and self.rotation_error == 0.0


class CorrectionPolicy(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["passthrough", "snap", "external"] = "snap"
    snap_radius: float = Field(default=DEFAULT_SNAP_RADIUS, gt=0)
    endpoint_url: Optional[str] = None
    timeout_seconds: float = Field(default=30.0, gt=0)
    retries: int = Field(default=1, ge=0)
    backoff_base_seconds: float = Field(default=1.0, ge=0)
    mock: bool = False
    mock_mode: Literal["snap", "echo"] = "snap"
    max_in_flight: int = Field(default=1, ge=1)

    @classmethod
    def parse(cls, text: str, **extra) -> "CorrectionPolicy":
        """Parse the CLI form `snap`, `passthrough`, `external` or `external,mock`."""
        parts = [p.strip() for p in text.split(",") if p.strip()]
        if not parts:
            raise ValueError("empty policy")
        kind, flags = parts[0], set(parts[1:])
        unknown = flags - {"mock"}
        if unknown:
            raise ValueError(f"unknown policy flags {sorted(unknown)}")
        return cls(kind=kind, mock="mock" in flags, **extra)


class TaggedPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    x: FiniteFloat
    y: FiniteFloat
    therblig: str
    object_id: Optional[str] = None


class CorrectionRequest(BaseModel):
    model_config = ConfigDict(frozen=True)

    protocol_version: int = PROTOCOL_VERSION
    prompt: str
    scene: dict
    points: list[TaggedPoint]


class CorrectionResponse(BaseModel):
    model_config = ConfigDict(frozen=True)

    corrected_points: list[tuple[float, float]]
    rationale: list[str] = Field(default_factory=list)
    fallback_used: bool = False
