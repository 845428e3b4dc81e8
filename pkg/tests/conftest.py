from __future__ import annotations

from pathlib import Path

import pytest

from gridbroker.scenario import load_scenario, parse_scenario

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"
GOLDEN = Path(__file__).resolve().parent / "golden"

MINIMAL = """
[config]
mode = meta

[user u1]
can_login = h1
can_use = h1.cpu

[broker b1]
property middleware=globus
hosts = h1
perf = dynamic

[host h1]
resource h1.cpu key=cpu_speed capacity=2.0 unit=GHz type=direct

[job j1]
user = u1
process p1 needs cpu_speed>=1.0 unit=GHz

[fault]
terminate process=p1 at=0
"""


@pytest.fixture
def minimal():
    return parse_scenario(MINIMAL)


@pytest.fixture
def walkthrough():
    return load_scenario(SCENARIOS / "walkthrough.scn")
