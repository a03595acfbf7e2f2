import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from kmf.ontology import default_library, default_library_path, default_taxonomy  # noqa: E402
from kmf.syntax import parse_model, print_canonical, print_rules  # noqa: E402
from kmf.terms import Model  # noqa: E402

DATA = Path(__file__).resolve().parents[1] / "src" / "kmf" / "data"
SCENARIOS = DATA / "scenarios"
GOLDEN = Path(__file__).parent / "golden"


def load(name: str) -> Model:
    return parse_model((SCENARIOS / f"{name}.kmf").read_text())


def split_parts(m: Model) -> dict:
    """The three documents the service accepts, rebuilt from one model."""
    parts = {
        "states": print_canonical(Model(m.states, {}, m.initial, m.goal)),
        "transitions": print_canonical(Model(transitions=m.transitions)),
    }
    if m.rules is not None:
        parts["rules"] = print_rules(m.rules)
    return {k: v.encode() for k, v in parts.items()}


@pytest.fixture(scope="session")
def bus():
    return load("bus")


@pytest.fixture(scope="session")
def truck():
    return load("truck")


@pytest.fixture(scope="session")
def taxonomy():
    return default_taxonomy()


@pytest.fixture(scope="session")
def library():
    return default_library()


@pytest.fixture(scope="session")
def library_dir():
    return default_library_path()
