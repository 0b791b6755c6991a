"""Predefined decision templates.

The heating template has one decision (what to do with the radiators and
ventilation), an unobserved outside-temperature node with five bins, and the
resulting room temperature relative to the desired one. Utility depends on
the action (energy) and the result (comfort).
"""
from __future__ import annotations

from .decision.model import ChanceNode, DecisionNode, InfluenceDiagram, UtilityTable
from .pronouncer import NormFilter, Pronouncer, Slot, TemplateModel

HEATING = "heating"

ACTIONS = ("no-heat", "one-radiator", "both-radiators", "ventilate")
OUTSIDE_BINS = ("high-positive", "positive", "near-zero", "negative", "high-negative")
RESULTS = ("higher", "desired", "lower")

DECISION_NODE = "heating"
OUTSIDE_NODE = "outside"
ROOM_NODE = "room"

PRIOR_SLOT = "outside"


def cpt_slot(action: str, outside_bin: str) -> str:
    return f"room|{action}|{outside_bin}"


def utility_slot(action: str, result: str) -> str:
    return f"utility|{action}|{result}"


def heating_template(template_id: str = HEATING) -> TemplateModel:
    uniform5 = tuple([1 / 5] * 5)
    uniform3 = tuple([1 / 3] * 3)
    decision = DecisionNode(DECISION_NODE, ACTIONS)
    outside = ChanceNode(OUTSIDE_NODE, OUTSIDE_BINS, (), {(): uniform5})
    room = ChanceNode(
        ROOM_NODE,
        RESULTS,
        (DECISION_NODE, OUTSIDE_NODE),
        {(a, b): uniform3 for a in ACTIONS for b in OUTSIDE_BINS},
    )
    utility = UtilityTable((DECISION_NODE, ROOM_NODE), {(a, r): 0.0 for a in ACTIONS for r in RESULTS})
    skeleton = InfluenceDiagram((decision,), (outside, room), utility, (DECISION_NODE,))

    slots = {PRIOR_SLOT: Slot("cpt", OUTSIDE_NODE, ())}
    for a in ACTIONS:
        for b in OUTSIDE_BINS:
            slots[cpt_slot(a, b)] = Slot("cpt", ROOM_NODE, (a, b))
    for a in ACTIONS:
        for r in RESULTS:
            slots[utility_slot(a, r)] = Slot("utility", "utility", (a, r))
    return TemplateModel(template_id, skeleton, slots)


def default_pronouncer(forbidden: frozenset[str] | None = None) -> Pronouncer:
    """A pronouncer with the heating template registered.

    ``forbidden`` installs a static norm on the heating template.
    """
    p = Pronouncer()
    filters = [NormFilter(frozenset(forbidden))] if forbidden else []
    p.register_template(heating_template(), filters)
    return p
