import os

import pytest

from gridmc.document import ModelDocument

EXAMPLES = os.path.join(os.path.dirname(__file__), "..", "examples")


def example_path(name: str) -> str:
    return os.path.abspath(os.path.join(EXAMPLES, name))


@pytest.fixture(scope="session")
def project_doc():
    return ModelDocument.load(example_path("project-npv.json"))


@pytest.fixture(scope="session")
def correlated_doc():
    return ModelDocument.load(example_path("project-npv-correlated.json"))


@pytest.fixture(scope="session")
def hardcode_doc():
    return ModelDocument.load(example_path("project-npv-hardcode.json"))


@pytest.fixture(scope="session")
def signflip_doc():
    return ModelDocument.load(example_path("project-npv-signflip.json"))


@pytest.fixture(scope="session")
def noclamp_doc():
    return ModelDocument.load(example_path("project-npv-noclamp.json"))


@pytest.fixture(scope="session")
def sqrt_trap_doc():
    return ModelDocument.load(example_path("sqrt-trap.json"))
