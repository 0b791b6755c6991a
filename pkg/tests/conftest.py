from __future__ import annotations

import pytest

from roomdecide import templates
from roomdecide.agents import default_heating_bindings
from roomdecide.decision.model import ChanceNode, DecisionNode, InfluenceDiagram, UtilityTable


@pytest.fixture(scope="session")
def heating_bindings():
    return default_heating_bindings(seed=0)


@pytest.fixture(scope="session")
def heating_diagram(heating_bindings):
    """The heating template with the default bindings filled in."""
    return templates.heating_template().instantiate(heating_bindings)


def coin_diagram(p_heads: float = 0.5) -> InfluenceDiagram:
    """Bet-or-pass on a coin: betting pays 10 on heads and 0 on tails, passing pays 4."""
    d = DecisionNode("act", ("bet", "pass"))
    coin = ChanceNode("coin", ("heads", "tails"), (), {(): (p_heads, 1.0 - p_heads)})
    u = UtilityTable(
        ("act", "coin"),
        {("bet", "heads"): 10.0, ("bet", "tails"): 0.0, ("pass", "heads"): 4.0, ("pass", "tails"): 4.0},
    )
    return InfluenceDiagram((d,), (coin,), u)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
