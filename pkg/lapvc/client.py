"""
client.py
---------

Cliente do endpoint externo de correção (modelo de linguagem) e o mock
determinístico usado nos testes e na avaliação.
Client of the external correction endpoint (language model) and the
deterministic mock used by tests and evaluation.

Fluxo / Flow:
1. build_request(points, scene) monta prompt + cena + pontos.
   build_request(points, scene) assembles prompt + scene + points.
2. O transporte envia o JSON (requests, token Bearer do .env).
   The transport sends the JSON (requests, Bearer token from .env).
3. parse_response valida a resposta; falhas são repetidas com backoff
   exponencial (tenacity).
   parse_response validates the reply; failures are retried with exponential
   backoff (tenacity).
4. Esgotadas as tentativas, cai para a política snap e registra no rationale.
   Once retries run out, falls back to the snap policy and records it in the
   rationale.

Com mock=True nenhuma operação de rede é feita.
With mock=True no network operation is performed.

Dependências / Dependencies:
- requests
- tenacity
- python-dotenv (via utils.settings)
"""

import json
import threading
import time
from typing import Any, Callable, Optional, Sequence

import requests
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt, wait_exponential

from contracts.correction_contracts import CorrectionPolicy, CorrectionResponse, TaggedPoint
from contracts.domain_contracts import SceneDescriptor
from domain.scenes import scene_from_dict
from lapvc.policies import snap_points
from lapvc.protocol import build_request, parse_response
from utils.errors import ContractError, ProtocolError
from utils.logger import setup_logger
from utils.settings import endpoint_settings

logger = setup_logger("lapvc_client")

# (url, json body, headers, timeout seconds) -> raw reply (text or parsed JSON)
Transport = Callable[[str, dict, dict, float], Any]

RETRYABLE = (requests.RequestException, TimeoutError, ProtocolError)


def requests_transport(url: str, body: dict, headers: dict, timeout: float) -> str:
    response = requests.post(url, json=body, headers=headers, timeout=timeout)
    response.raise_for_status()
    return response.text


class MockTransport:
    """
    Endpoint local: "snap" devolve o snap de cada ponto, "echo" devolve os pontos recebidos.
    Local endpoint: "snap" returns each point snapped, "echo" returns the points as sent.
    """

    def __init__(self, mode: str = "snap", snap_radius: float = 0.06):
        self.mode = mode
        self.snap_radius = snap_radius
        self.calls = 0

    def __call__(self, url: str, body: dict, headers: dict, timeout: float) -> str:
        self.calls += 1
        points = [(p["x"], p["y"]) for p in body["points"]]
        if self.mode == "echo":
            reply = {"corrected_points": [list(p) for p in points], "rationale": ["echo"] * len(points)}
        else:
            snapped = snap_points(points, scene_from_dict(body["scene"]), self.snap_radius)
            reply = {
                "corrected_points": [list(p) for p in snapped.corrected_points],
                "rationale": [f"mock {r}" for r in snapped.rationale],
            }
        return json.dumps(reply)


class ExternalCorrector:
    """
    Política externa com limite de requisições simultâneas (padrão 1).
    External policy with a cap on in-flight requests (default 1).
    """

    def __init__(
        self,
        policy: CorrectionPolicy,
        transport: Optional[Transport] = None,
        endpoint_url: Optional[str] = None,
        auth_token: Optional[str] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if policy.kind != "external":
            raise ContractError(f"ExternalCorrector needs an external policy, got {policy.kind}")
        env = endpoint_settings()
        self.policy = policy
        self.endpoint_url = endpoint_url or policy.endpoint_url or env["endpoint_url"]
        self.auth_token = auth_token if auth_token is not None else env["auth_token"]
        self.sleep = sleep
        if policy.mock:
            self.transport: Transport = MockTransport(policy.mock_mode, policy.snap_radius)
            self.endpoint_url = self.endpoint_url or "mock://lapvc"
        else:
            if not self.endpoint_url:
                raise ContractError(
                    "LAPVC_ENDPOINT_URL não definida / LAPVC_ENDPOINT_URL not set for the external policy"
                )
            self.transport = transport or requests_transport
        self._slots = threading.BoundedSemaphore(policy.max_in_flight)

    def headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.auth_token:
            headers["Authorization"] = f"Bearer {self.auth_token}"
        return headers

    def _exchange(self, body: dict, expected: int, scene: SceneDescriptor) -> CorrectionResponse:
        raw = self.transport(self.endpoint_url, body, self.headers(), self.policy.timeout_seconds)
        return parse_response(raw, expected, scene)

    def correct(self, points: Sequence[TaggedPoint], scene: SceneDescriptor) -> CorrectionResponse:
        request = build_request(points, scene)
        body = request.model_dump(mode="json")
        retrying = Retrying(
            stop=stop_after_attempt(self.policy.retries + 1),
            wait=wait_exponential(multiplier=self.policy.backoff_base_seconds),
            retry=retry_if_exception_type(RETRYABLE),
            sleep=self.sleep,
            reraise=True,
        )
        try:
            with self._slots:
                return retrying(self._exchange, body, len(points), scene)
        except RETRYABLE as e:
            reason = e.reason if isinstance(e, ProtocolError) else type(e).__name__
            logger.warning(
                f"Endpoint de correção falhou ({reason}); usando snap / "
                f"Correction endpoint failed ({reason}); falling back to snap"
            )
            snapped = snap_points([(p.x, p.y) for p in points], scene, self.policy.snap_radius)
            return CorrectionResponse(
                corrected_points=snapped.corrected_points,
                rationale=[f"fallback:snap ({reason}) {r}" for r in snapped.rationale],
                fallback_used=True,
            )
