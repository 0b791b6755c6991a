"""JSON reading and writing for diagrams and trees.

The format is documented in ``docs/formats.md`` and enforced with the JSON
schema shipped in ``roomdecide/data/schemas/diagram.schema.json``.
"""
from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema

from .model import ChanceNode, DecisionNode, InfluenceDiagram, UtilityTable
from .tree import Chance, Decision, DecisionTree, Terminal, TreeNode


class FormatError(ValueError):
    """File content does not follow the documented format."""


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    text = resources.files("roomdecide.data.schemas").joinpath(name).read_text("utf-8")
    return json.loads(text)


def check_schema(obj: Any, name: str) -> None:
    try:
        jsonschema.validate(obj, load_schema(name))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise FormatError(f"{where}: {exc.message}") from None


def _table(rows: list[dict], key: str, owner: str) -> dict:
    out = {}
    for row in rows:
        given = tuple(row["given"])
        if given in out:
            raise FormatError(f"{owner}: duplicate row for {list(given)!r}")
        out[given] = row[key]
    return out


def diagram_from_dict(obj: dict) -> InfluenceDiagram:
    check_schema(obj, "diagram.schema.json")
    if "tree" in obj:
        raise FormatError("expected an influence diagram, found a tree")
    decisions = [
        DecisionNode(x["id"], x["alternatives"], x.get("observed", ())) for x in obj["decisions"]
    ]
    chances = [
        ChanceNode(x["id"], x["outcomes"], x["parents"], _table(x["cpt"], "p", x["id"]))
        for x in obj["chances"]
    ]
    u = obj["utility"]
    utility = UtilityTable(u["parents"], _table(u["values"], "u", "utility"))
    return InfluenceDiagram(decisions, chances, utility, obj["decision_order"])


def diagram_to_dict(d: InfluenceDiagram) -> dict:
    decisions = []
    for x in d.decisions:
        entry = {"id": x.id, "alternatives": list(x.alternatives)}
        if x.observed:
            entry["observed"] = list(x.observed)
        decisions.append(entry)
    return {
        "decisions": decisions,
        "chances": [
            {
                "id": c.id,
                "outcomes": list(c.outcomes),
                "parents": list(c.parents),
                "cpt": [{"given": list(k), "p": list(row)} for k, row in c.cpt.items()],
            }
            for c in d.chances
        ],
        "utility": {
            "parents": list(d.utility.parents),
            "values": [{"given": list(k), "u": v} for k, v in d.utility.values.items()],
        },
        "decision_order": list(d.decision_order),
    }


def _node_from(obj: dict) -> TreeNode:
    if "utility" in obj:
        return Terminal(float(obj["utility"]))
    if "decision" in obj:
        kids = obj["children"]
        return Decision(
            obj["decision"],
            tuple(k["action"] for k in kids),
            tuple(_node_from(k["node"]) for k in kids),
        )
    branches = obj["branches"]
    return Chance(
        obj["chance"],
        tuple(b["outcome"] for b in branches),
        tuple(float(b["p"]) for b in branches),
        tuple(_node_from(b["node"]) for b in branches),
    )


def _node_to(node: TreeNode) -> dict:
    if isinstance(node, Terminal):
        return {"utility": node.utility}
    if isinstance(node, Decision):
        return {
            "decision": node.node,
            "children": [
                {"action": a, "node": _node_to(c)} for a, c in zip(node.alternatives, node.children)
            ],
        }
    return {
        "chance": node.node,
        "branches": [
            {"outcome": o, "p": p, "node": _node_to(c)}
            for o, p, c in zip(node.outcomes, node.probabilities, node.children)
        ],
    }


def tree_from_dict(obj: dict) -> DecisionTree:
    check_schema(obj, "diagram.schema.json")
    if "tree" not in obj:
        raise FormatError("expected a decision tree, found an influence diagram")
    return DecisionTree(_node_from(obj["tree"]))


def tree_to_dict(t: DecisionTree) -> dict:
    return {"tree": _node_to(t.root)}


def load_model(path: str | Path) -> InfluenceDiagram | DecisionTree:
    """Read a diagram or a tree, whichever the file holds."""
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from None
    if isinstance(obj, dict) and "tree" in obj:
        return tree_from_dict(obj)
    return diagram_from_dict(obj)


def load_diagram(path: str | Path) -> InfluenceDiagram:
    model = load_model(path)
    if isinstance(model, DecisionTree):
        raise FormatError(f"{path}: expected an influence diagram, found a tree")
    return model


def save_model(model: InfluenceDiagram | DecisionTree, path: str | Path) -> None:
    obj = tree_to_dict(model) if isinstance(model, DecisionTree) else diagram_to_dict(model)
    Path(path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")
