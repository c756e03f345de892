import json
from pathlib import Path

import pytest

from intentfw.context import load_context

REPO = Path(__file__).resolve().parent.parent
CORPUS = REPO / "corpus"


@pytest.fixture(scope="session")
def ecommerce():
    return load_context((CORPUS / "contexts" / "ecommerce.json").read_text("utf-8"))


@pytest.fixture(scope="session")
def smart_factory():
    return load_context((CORPUS / "contexts" / "smart-factory.json").read_text("utf-8"))


@pytest.fixture(scope="session")
def ecommerce_doc():
    return json.loads((CORPUS / "contexts" / "ecommerce.json").read_text("utf-8"))
