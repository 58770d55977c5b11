"""
Conftest.py para configuração global dos testes

Este módulo define configurações globais para os testes automáticos,
utilizando Pytest Fixtures.

ORIENTAÇÕES:
- Carrega o arquivo .env automaticamente antes dos testes.
- Remove as variáveis do endpoint LAP-VC para que nenhum teste use a rede.
- Testes marcados com `slow` só rodam com --runslow.

INSTRUCTIONS:
- Automatically loads .env file before tests.
- Clears the LAP-VC endpoint variables so no test reaches the network.
- Tests marked `slow` only run with --runslow.

Dependências / Dependencies:
- pytest
- numpy
- python-dotenv
"""

import numpy as np
import pytest
from dotenv import load_dotenv

from contracts.domain_contracts import SceneDescriptor, SceneObject
from datagen.scene_generator import DEFAULT_WORKSPACE, identity_descriptor, object_points


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="precisa de --runslow / needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True, scope="session")
def setup_environment():
    """
    Fixture para configurar ambiente de testes / Fixture to set up the test environment.
    """
    load_dotenv()


@pytest.fixture(autouse=True)
def offline_endpoint(monkeypatch):
    for name in ("LAPVC_ENDPOINT_URL", "LAPVC_AUTH_TOKEN"):
        monkeypatch.delenv(name, raising=False)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_object(object_id: str, centroid, orientation: float = 0.0, half_length: float = 0.04, half_width: float = 0.015, seed: int = 0) -> SceneObject:
    return SceneObject(
        id=object_id,
        class_name="block",
        centroid=(float(centroid[0]), float(centroid[1])),
        orientation=orientation,
        points=[tuple(p) for p in object_points(centroid, orientation, half_length, half_width).tolist()],
        descriptor=identity_descriptor(seed, 0, int(object_id.split("_")[-1])).tolist(),
    )


@pytest.fixture
def two_object_scene() -> SceneDescriptor:
    return SceneDescriptor(
        workspace_bounds=DEFAULT_WORKSPACE,
        objects=[make_object("obj_0", (0.30, 0.30), 0.3), make_object("obj_1", (0.55, 0.35), -0.4)],
    )
