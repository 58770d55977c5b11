"""
protocol.py
-----------

Protocolo com o endpoint externo de correção: montagem do prompt e da
requisição, validação e leitura da resposta.
Protocol with the external correction endpoint: prompt and request building,
response validation and parsing.

Resposta esperada / Expected reply:
    {"corrected_points": [[x, y], ...], "rationale": ["...", ...]}

Motivos de rejeição / Rejection reasons:
    invalid_json | count_mismatch | non_numeric | out_of_bounds
"""

import json
import math
from typing import Any, Sequence

from contracts.correction_contracts import PROTOCOL_VERSION, CorrectionRequest, CorrectionResponse, TaggedPoint
from contracts.domain_contracts import SceneDescriptor
from domain.scenes import scene_to_dict
from utils.errors import ProtocolError

INVALID_JSON = "invalid_json"
COUNT_MISMATCH = "count_mismatch"
NON_NUMERIC = "non_numeric"
OUT_OF_BOUNDS = "out_of_bounds"

REPLY_INSTRUCTION = (
    'Reply with strict JSON only, no prose: {"corrected_points": [[x, y], ...]} '
    "with exactly one corrected point per predicted point, in the same order, "
    "in meters, inside the workspace bounds."
)


def build_prompt(points: Sequence[TaggedPoint], scene: SceneDescriptor) -> str:
    xmin, ymin, xmax, ymax = scene.workspace_bounds
    lines = [
        "You correct end-effector target points predicted for a tabletop robot.",
        "Predicted points may carry hand-eye calibration and perception errors.",
        "Move each point onto the object it is meant to act on when that is clear; otherwise keep it.",
        "",
        f"Workspace bounds (meters): x in [{xmin:.4f}, {xmax:.4f}], y in [{ymin:.4f}, {ymax:.4f}]",
        "",
        "Objects (id, class, centroid x y, orientation rad):",
    ]
    for obj in scene.objects:
        lines.append(
            f"- {obj.id}, {obj.class_name}, {obj.centroid[0]:.4f} {obj.centroid[1]:.4f}, {obj.orientation:.4f}"
        )
    lines += ["", "Predicted points (index, therblig, x y, object):"]
    for i, p in enumerate(points):
        lines.append(f"{i}. {p.therblig}, {p.x:.4f} {p.y:.4f}, {p.object_id or 'none'}")
    lines += ["", REPLY_INSTRUCTION]
    return "\n".join(lines)


def build_request(points: Sequence[TaggedPoint], scene: SceneDescriptor) -> CorrectionRequest:
    return CorrectionRequest(
        protocol_version=PROTOCOL_VERSION,
        prompt=build_prompt(points, scene),
        scene=scene_to_dict(scene),
        points=list(points),
    )


def _number(value: Any, payload: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProtocolError(NON_NUMERIC, f"{where} is {value!r}", payload)
    x = float(value)
    if not math.isfinite(x):
        raise ProtocolError(NON_NUMERIC, f"{where} is not finite ({x})", payload)
    return x


def parse_response(payload: Any, expected_count: int, scene: SceneDescriptor) -> CorrectionResponse:
    """
    Valida a resposta do endpoint; qualquer desvio vira ProtocolError com o payload bruto.
    Validate the endpoint reply; any deviation becomes a ProtocolError carrying the raw payload.
    """
    raw = payload
    if isinstance(payload, (bytes, bytearray)):
        payload = payload.decode("utf-8", errors="replace")
    if isinstance(payload, str):
        try:
            payload = json.loads(payload)
        except json.JSONDecodeError as e:
            raise ProtocolError(INVALID_JSON, str(e), raw) from e
    if not isinstance(payload, dict) or not isinstance(payload.get("corrected_points"), list):
        raise ProtocolError(INVALID_JSON, "expected an object with a corrected_points list", raw)

    items = payload["corrected_points"]
    if len(items) != expected_count:
        raise ProtocolError(COUNT_MISMATCH, f"expected {expected_count} points, got {len(items)}", raw)

    points = []
    for i, item in enumerate(items):
        if not isinstance(item, (list, tuple)) or len(item) != 2:
            raise ProtocolError(NON_NUMERIC, f"point {i} is {item!r}, expected [x, y]", raw)
        x = _number(item[0], raw, f"point {i} x")
        y = _number(item[1], raw, f"point {i} y")
        if not scene.contains((x, y)):
            raise ProtocolError(OUT_OF_BOUNDS, f"point {i} ({x}, {y}) outside {scene.workspace_bounds}", raw)
        points.append((x, y))

    rationale = payload.get("rationale") or []
    if not isinstance(rationale, list):
        rationale = [str(rationale)]
    rationale = [str(r) for r in rationale][:expected_count]
    rationale += ["external"] * (expected_count - len(rationale))
    return CorrectionResponse(corrected_points=points, rationale=rationale)
