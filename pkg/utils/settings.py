"""
settings.py
-----------

Carregamento de configuração: variáveis de ambiente (.env) e arquivo de
configuração plano no formato chave=valor.
Configuration loading: environment variables (.env) and a flat key=value
configuration file.

Precedência / Precedence: defaults do modelo < arquivo < flags da CLI
                          model defaults < file < CLI flags

Formato do arquivo / File format:

    # comentário / comment
    generator.num_demos = 52
    mgsf.variant = full
    epochs = 30

Chaves sem prefixo valem para qualquer modelo que tenha o campo.
Unprefixed keys apply to any model that has the field.

Dependências / Dependencies:
- python-dotenv
- pydantic
"""

import os
from typing import Any, Mapping, Optional, Type, TypeVar

from dotenv import dotenv_values, load_dotenv
from pydantic import BaseModel
from pydantic import ValidationError as PydanticValidationError

from utils.errors import ContractError

load_dotenv()

ModelT = TypeVar("ModelT", bound=BaseModel)

DEFAULT_TIMEOUT_SECONDS = 30.0


def read_config_file(path: Optional[str]) -> dict[str, str]:
    """
    Lê um arquivo chave=valor e devolve um dicionário com chaves minúsculas.
    Read a key=value file and return a dict with lower-cased keys.
    """
    if not path:
        return {}
    if not os.path.exists(path):
        raise ContractError(f"Arquivo de configuração não encontrado: {path} / Config file not found: {path}")
    values = dotenv_values(path)
    return {k.strip().lower(): v for k, v in values.items() if v is not None}


def section_values(flat: Mapping[str, Any], section: str) -> dict[str, Any]:
    """Pick `section.key` entries and unprefixed keys; prefixed entries win."""
    plain = {k: v for k, v in flat.items() if "." not in k}
    scoped = {
        k.split(".", 1)[1]: v
        for k, v in flat.items()
        if k.startswith(section + ".")
    }
    return {**plain, **scoped}


def build_config(
    model: Type[ModelT],
    section: str,
    file_values: Optional[Mapping[str, Any]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> ModelT:
    """
    Monta um modelo de configuração aplicando a precedência documentada.
    Build a config model applying the documented precedence.
    """
    merged: dict[str, Any] = {}
    fields = model.model_fields
    for source in (section_values(file_values or {}, section), overrides or {}):
        for key, value in source.items():
            if key in fields and value is not None:
                merged[key] = value
    try:
        return model.model_validate(merged)
    except PydanticValidationError as e:
        raise ContractError(
            f"Configuração inválida para {model.__name__}: {e} / Invalid config for {model.__name__}: {e}"
        ) from e


def endpoint_settings() -> dict[str, Any]:
    """Endpoint settings of the external correction policy, read from the environment."""
    return {
        "endpoint_url": os.getenv("LAPVC_ENDPOINT_URL"),
        "auth_token": os.getenv("LAPVC_AUTH_TOKEN"),
        "timeout_seconds": float(os.getenv("LAPVC_TIMEOUT_SECONDS", DEFAULT_TIMEOUT_SECONDS)),
        "max_in_flight": int(os.getenv("LAPVC_MAX_IN_FLIGHT", "1")),
    }
