"""
calibration.py
--------------

Leitura e escrita da calibração mão-olho (homografia 3×3 robô -> cena).
Reading and writing the hand-eye calibration (3×3 robot -> scene homography).

Formato / Format: [[h00, h01, h02], [h10, h11, h12], [h20, h21, h22]]
ou / or {"matrix": [[...], [...], [...]]}
"""

from typing import Optional

from pydantic import ValidationError as PydanticValidationError

from contracts.registration_contracts import Calibration
from utils.errors import ContractError
from utils.files import read_json, write_json


def calibration_from_payload(payload) -> Calibration:
    matrix = payload.get("matrix") if isinstance(payload, dict) else payload
    try:
        return Calibration(matrix=matrix)
    except PydanticValidationError as e:
        raise ContractError(f"Calibração inválida: {e} / Invalid calibration: {e}") from e


def load_calibration(path: Optional[str]) -> Calibration:
    """No path means the identity calibration."""
    if not path:
        return Calibration.identity()
    return calibration_from_payload(read_json(path))


def save_calibration(calibration: Calibration, path: str) -> str:
    return write_json({"matrix": calibration.matrix}, path)
