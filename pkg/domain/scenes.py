"""
scenes.py
---------

Leitura e escrita de descritores de cena em JSON.
Reading and writing scene descriptors as JSON.

Formato / Format:
    { "workspace": [xmin, ymin, xmax, ymax],
      "objects": [ { "id", "class", "centroid": [x, y], "orientation",
                     "points": [[x, y], ...], "descriptor": [f, ...] } ] }
Unidades: metros e radianos / Units: meters and radians.
"""

from pydantic import ValidationError as PydanticValidationError

from contracts.domain_contracts import SceneDescriptor
from utils.errors import ContractError
from utils.files import read_json, write_json
from utils.logger import setup_logger

logger = setup_logger("domain_scenes")


def scene_to_dict(scene: SceneDescriptor) -> dict:
    payload = scene.model_dump(mode="json", by_alias=True)
    return {"workspace": payload["workspace"], "objects": payload["objects"]}


def scene_from_dict(payload: dict) -> SceneDescriptor:
    try:
        return SceneDescriptor.model_validate(payload)
    except PydanticValidationError as e:
        raise ContractError(f"Cena inválida: {e} / Invalid scene: {e}") from e


def save_scene(scene: SceneDescriptor, path: str) -> str:
    write_json(scene_to_dict(scene), path)
    logger.debug(f"Cena salva: {path} / Scene saved: {path}")
    return path


def load_scene(path: str) -> SceneDescriptor:
    return scene_from_dict(read_json(path))
