import pathlib
import sys

import numpy as np
import pytest

sys.path.insert(0, str(pathlib.Path(__file__).parent))

from credal_elicit import CredalSet, LossSpec, PropertyDomain  # noqa: E402
from credal_elicit.lab import default_domain, random_credal, random_space  # noqa: E402

ROOT = pathlib.Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"

_CRITERIA: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def scenarios_dir():
    return SCENARIOS


@pytest.fixture
def record_criterion():
    """Store a one-line pass/fail verdict printed in the terminal summary."""
    def record(name, ok, detail):
        _CRITERIA[name] = (bool(ok), detail)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA, key=lambda s: int(s.split()[1].rstrip(":"))):
        ok, detail = _CRITERIA[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name} {detail}")


def random_instance(rng, n_max=6, m_max=4, m_min=1):
    space = random_space(rng, n_max)
    credal = random_credal(rng, space, m_max, m_min)
    return credal, default_domain(space)


def random_spec(rng, kind):
    if kind == "pinball":
        return LossSpec.pinball(float(rng.uniform(0.1, 0.9)))
    if kind == "entropic":
        return LossSpec.entropic(float(rng.uniform(0.5, 2.0)))
    return LossSpec(kind)


@pytest.fixture
def z012():
    return (0.0, 1.0, 2.0)


@pytest.fixture
def counter_sets(z012):
    return {
        "P": CredalSet.from_weights(z012, [(1, 0, 0), (0.5, 0, 0.5)]),
        "Q": CredalSet.from_weights(z012, [(1, 0, 0), (0.25, 0.5, 0.25)]),
        "PQ": CredalSet.from_weights(z012, [(1, 0, 0)]),
    }


@pytest.fixture
def dom02():
    return PropertyDomain(0.0, 2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20251016)
