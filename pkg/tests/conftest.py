import json
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from src.model import build_cgs  # noqa: E402

MODELS = ROOT / "models"


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run the long randomised campaigns")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long randomised campaigns")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def model_raw(name):
    return json.loads((MODELS / name).read_text(encoding="utf-8"))


@pytest.fixture
def models_dir():
    return MODELS


@pytest.fixture
def dirac_reach():
    return build_cgs(model_raw("dirac_reach.json"))


@pytest.fixture
def coin():
    return build_cgs(model_raw("coin.json"))


@pytest.fixture
def imperfect_guess():
    return build_cgs(model_raw("imperfect_guess.json"))


def single_agent_raw(n_states=2, actions=("y", "n"), observation=None):
    """Perfect-information one-agent model: action i in state s moves to state i mod n."""
    states = [f"s{i}" for i in range(n_states)]
    raw = {
        "agents": ["a"],
        "actions": list(actions),
        "atoms": ["p"],
        "states": [{"id": s, "atoms": ["p"] if i == n_states - 1 else []} for i, s in enumerate(states)],
        "legality": {s: {"a": list(actions)} for s in states},
        "transitions": [
            {"state": s, "action": {"a": c}, "dist": {states[i % n_states]: "1"}}
            for s in states
            for i, c in enumerate(actions)
        ],
    }
    if observation is not None:
        raw["observation"] = {"a": observation}
    return raw


def minimal_raw():
    return {
        "agents": ["a"],
        "actions": ["go"],
        "atoms": [],
        "states": [{"id": "s", "atoms": []}],
        "legality": {"s": {"a": ["go"]}},
        "transitions": [{"state": "s", "action": {"a": "go"}, "dist": {"s": "1"}}],
    }
