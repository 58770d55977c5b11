"""
pydantic_validation.py
-----------------------

Funções utilitárias para validação de DataFrames Polars com contratos Pydantic.
Utility functions for validating Polars DataFrames against Pydantic contracts.

Usado na leitura dos CSVs de demonstração (uma linha por timestep).
Used when loading demonstration CSV files (one row per timestep).

Dependências / Dependencies:
- pydantic
- polars
"""

from typing import Type

import polars as pl
from pydantic import BaseModel, TypeAdapter
from pydantic import ValidationError as PydanticValidationError

from utils.errors import ContractError


def check_columns(df: pl.DataFrame, model: Type[BaseModel], strict: bool = True) -> None:
    """
    Confere as colunas do DataFrame contra os campos do contrato.
    Check DataFrame columns against the contract fields.

    A ordem das colunas também precisa bater quando strict=True.
    Column order must also match when strict=True.
    """
    expected = list(model.model_fields.keys())
    received = list(df.columns)

    missing = [c for c in expected if c not in received]
    extra = [c for c in received if c not in expected]

    if missing:
        raise ContractError(
            f"Colunas obrigatórias ausentes: {missing} / Required columns missing: {missing}"
        )
    if strict and extra:
        raise ContractError(
            f"Colunas inesperadas encontradas: {extra} / Unexpected columns found: {extra}"
        )
    if strict and received != expected:
        raise ContractError(
            "Ordem de colunas diferente do contrato / Column order differs from contract"
        )


def validate_with_pydantic_batch(
    df: pl.DataFrame,
    model: Type[BaseModel],
    strict: bool = True,
) -> pl.DataFrame:
    """
    Valida um DataFrame Polars usando um modelo Pydantic em modo batch.
    Validate a Polars DataFrame using a Pydantic model in batch mode.

    Parâmetros / Parameters:
    - df: pl.DataFrame -> DataFrame de entrada / Input DataFrame
    - model: BaseModel -> Modelo Pydantic para validação / Pydantic model for validation
    - strict: bool -> Se True, rejeita colunas extras / If True, rejects unexpected columns

    Retorna / Returns:
    - pl.DataFrame validado, com a ordem de colunas do contrato
      validated pl.DataFrame, in contract column order
    """
    check_columns(df, model, strict=strict)

    adapter = TypeAdapter(list[model])
    try:
        validated = adapter.validate_python(df.select(list(model.model_fields)).to_dicts())
    except PydanticValidationError as e:
        first = e.errors()[0]
        row = first["loc"][0] if first["loc"] else "?"
        column = first["loc"][1] if len(first["loc"]) > 1 else "?"
        raise ContractError(
            f"Erro de validação Pydantic na linha {row}, coluna {column}: {first['msg']} / "
            f"Pydantic validation error at row {row}, column {column}: {first['msg']}"
        ) from e

    return pl.DataFrame(
        [item.model_dump() for item in validated],
        schema=df.select(list(model.model_fields)).schema,
    )
