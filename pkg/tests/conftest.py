import os
from functools import lru_cache

import hypothesis
import pytest

from fnduality.fn_complex import parse_fnc
from fnduality.harness_cli import make_instance

hypothesis.settings.register_profile("default", max_examples=60, deadline=None, derandomize=True)
hypothesis.settings.register_profile("ci", max_examples=200, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

PAIR = """\
field Q
value_basis 2 1 sqrt2
gamma0_rank 2
omega 1 0
omega 0 1
gen u grading 1 action 3 0
gen v grading 0 action 1 0
bnd u v : 1@0 0
"""

SINGLE = """\
field Q
value_basis 2 1 sqrt2
gamma0_rank 2
omega 1 0
omega 0 1
gen p grading 0 action 2 0
"""

ACCEPTANCE: dict = {}


@pytest.fixture
def pair():
    return parse_fnc(PAIR)


@pytest.fixture
def single():
    return parse_fnc(SINGLE)


@lru_cache(maxsize=None)
def instance(seed: int, index: int, profile: str, field: str = "q", moves: int = 50):
    return make_instance(seed, index, profile, field, moves=moves)


def record(criterion: int, name: str, ok: bool, detail: str = "") -> None:
    line = f"criterion {criterion:2d} {name}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else "")
    ACCEPTANCE[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
