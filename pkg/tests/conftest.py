import os
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from mosaicverify import Network
from mosaicverify.parser import load

FIXTURES = Path(__file__).resolve().parent.parent / "src" / "mosaicverify" / "fixtures"

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# (query file, network file) pairs shipped with the package
FIXTURE_PAIRS = [
    ("abs_gt_half.txt", "abs.json"),
    ("abs_gt_two.txt", "abs.json"),
    ("abs_above_square.txt", "abs.json"),
    ("abs_below_square.txt", "abs.json"),
    ("argmax_disc.txt", "argmax_2x5x2.json"),
    ("acc.txt", "acc_brake.json"),
    ("acc.txt", "acc_accelerate.json"),
]


def fixture_spec(name):
    return load(FIXTURES / name)


def fixture_net(name):
    return Network.load(FIXTURES / name)


@pytest.fixture
def abs_net():
    return fixture_net("abs.json")


@pytest.fixture
def identity_net():
    return fixture_net("identity.json")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = mod.report_lines() if mod is not None else []
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
