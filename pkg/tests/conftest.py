import random
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from probchar import PLTS, Dist, parse_plts  # noqa: E402
from probchar.generate import GenParams, random_plts  # noqa: E402

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def plts_from(text: str) -> PLTS:
    return parse_plts(text)


def seeded_plts(seed: int, **kw) -> PLTS:
    return random_plts(random.Random(seed), GenParams(**kw))


small_systems = st.integers(0, 10_000).map(lambda k: seeded_plts(k, states=3, actions=2))


@st.composite
def distributions(draw, states, max_support=3, denominator=6):
    states = list(states)
    k = draw(st.integers(1, min(max_support, len(states))))
    support = draw(st.permutations(states))[:k]
    weights = [draw(st.integers(1, denominator)) for _ in support]
    total = sum(weights)
    from fractions import Fraction

    return Dist({s: Fraction(w, total) for s, w in zip(support, weights)})


@pytest.fixture
def convexity():
    # s's single a-move is matched by t combining its two moves, not conversely
    return plts_from(
        """
        states: s t v w
        s a -> 1/2 v, 1/2 w
        t a -> v
        t a -> w
        v b -> v
        w c -> w
        """
    )


# one line per acceptance criterion, printed after the run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda l: int(l.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
