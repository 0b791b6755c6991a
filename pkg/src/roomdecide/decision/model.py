"""Influence diagram types and structural validation.

A diagram has one or more decision nodes, any number of discrete chance
nodes with tabular CPTs, and a single utility table. Tables are keyed by
the tuple of parent values, in the order the parents are listed.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from typing import Iterator, Mapping, Sequence

PROB_TOL = 1e-9

Assignment = tuple[str, ...]


class InvalidDiagramError(ValueError):
    """Raised when an operation needs a valid diagram and gets one that isn't."""

    def __init__(self, violations: Sequence["Violation"]):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations[:5])
        more = f" (+{len(self.violations) - 5} more)" if len(self.violations) > 5 else ""
        super().__init__(f"invalid influence diagram: {lines}{more}")


@dataclass(frozen=True)
class DecisionNode:
    id: str
    alternatives: tuple[str, ...]
    # chance nodes whose outcome is known when this decision is taken
    observed: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "alternatives", tuple(self.alternatives))
        object.__setattr__(self, "observed", tuple(self.observed))


@dataclass(frozen=True)
class ChanceNode:
    id: str
    outcomes: tuple[str, ...]
    parents: tuple[str, ...]
    cpt: Mapping[Assignment, tuple[float, ...]]

    def __post_init__(self):
        object.__setattr__(self, "outcomes", tuple(self.outcomes))
        object.__setattr__(self, "parents", tuple(self.parents))
        object.__setattr__(
            self, "cpt", {tuple(k): tuple(float(p) for p in row) for k, row in self.cpt.items()}
        )

    def row(self, assignment: Mapping[str, str]) -> tuple[float, ...]:
        return self.cpt[tuple(assignment[p] for p in self.parents)]


@dataclass(frozen=True)
class UtilityTable:
    parents: tuple[str, ...]
    values: Mapping[Assignment, float]

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(self.parents))
        object.__setattr__(self, "values", {tuple(k): float(v) for k, v in self.values.items()})

    def lookup(self, assignment: Mapping[str, str]) -> float:
        return self.values[tuple(assignment[p] for p in self.parents)]


@dataclass(frozen=True)
class InfluenceDiagram:
    decisions: tuple[DecisionNode, ...]
    chances: tuple[ChanceNode, ...]
    utility: UtilityTable
    decision_order: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "decisions", tuple(self.decisions))
        object.__setattr__(self, "chances", tuple(self.chances))
        order = tuple(self.decision_order) or tuple(d.id for d in self.decisions)
        object.__setattr__(self, "decision_order", order)

    def decision(self, node_id: str) -> DecisionNode:
        for d in self.decisions:
            if d.id == node_id:
                return d
        raise KeyError(node_id)

    def chance(self, node_id: str) -> ChanceNode:
        for c in self.chances:
            if c.id == node_id:
                return c
        raise KeyError(node_id)

    def states(self, node_id: str) -> tuple[str, ...]:
        """Labels a node can take: alternatives for decisions, outcomes for chance nodes."""
        for d in self.decisions:
            if d.id == node_id:
                return d.alternatives
        return self.chance(node_id).outcomes


@dataclass(frozen=True)
class Violation:
    node: str
    rule: str
    message: str

    def __str__(self):
        return f"{self.node}: {self.rule}: {self.message}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, node: str, rule: str, message: str) -> None:
        self.violations.append(Violation(node, rule, message))

    def raise_if_invalid(self) -> None:
        if self.violations:
            raise InvalidDiagramError(self.violations)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "violations": [
                {"node": v.node, "rule": v.rule, "message": v.message} for v in self.violations
            ],
        }


def joint_assignments(domains: Sequence[Sequence[str]]) -> Iterator[Assignment]:
    return itertools.product(*domains)


def _check_labels(report: ValidationReport, node: str, labels: Sequence[str], what: str) -> None:
    if len(labels) < 2:
        report.add(node, what, f"needs at least 2 {what}, got {len(labels)}")
    if any(not isinstance(lab, str) or not lab for lab in labels):
        report.add(node, what, f"{what} must be nonempty strings")
    if len(set(labels)) != len(labels):
        report.add(node, what, f"duplicate {what}")


def _check_table_keys(
    report: ValidationReport,
    node: str,
    keys: Sequence[Assignment],
    domains: Sequence[Sequence[str]],
    rule: str,
) -> list[Assignment]:
    expected = list(joint_assignments(domains))
    have = set(keys)
    missing = [a for a in expected if a not in have]
    extra = have.difference(expected)
    if missing:
        report.add(node, rule, f"missing row for parent assignment {missing[0]!r}"
                   + (f" and {len(missing) - 1} more" if len(missing) > 1 else ""))
    if extra:
        report.add(node, rule, f"row for unknown parent assignment {sorted(extra)[0]!r}")
    return expected


def validate_diagram(d: InfluenceDiagram) -> ValidationReport:
    """Check every structural and numeric invariant of ``d``.

    Never raises on a malformed diagram; problems are collected in the report,
    each naming the offending node and the rule it breaks.
    """
    report = ValidationReport()
    seen: set[str] = set()
    for node_id in [x.id for x in d.decisions] + [x.id for x in d.chances]:
        if node_id in seen:
            report.add(node_id, "duplicate-id", "node id used more than once")
        seen.add(node_id)

    if not d.decisions:
        report.add("<diagram>", "no-decision", "diagram needs at least one decision node")

    decision_ids = {x.id for x in d.decisions}
    chance_ids = {x.id for x in d.chances}
    known = decision_ids | chance_ids

    for dec in d.decisions:
        _check_labels(report, dec.id, dec.alternatives, "alternatives")
        for obs in dec.observed:
            if obs not in chance_ids:
                report.add(dec.id, "observation", f"observed node {obs!r} is not a chance node")

    for ch in d.chances:
        _check_labels(report, ch.id, ch.outcomes, "outcomes")
        for p in ch.parents:
            if p not in known:
                report.add(ch.id, "unknown-parent", f"parent {p!r} does not exist")

    for p in d.utility.parents:
        if p not in known:
            report.add("utility", "unknown-parent", f"parent {p!r} does not exist")

    if sorted(d.decision_order) != sorted(decision_ids) or len(d.decision_order) != len(decision_ids):
        report.add("<diagram>", "decision-order", "decision_order must list every decision exactly once")

    if not report.ok:
        # table checks need resolvable references
        return report

    graph: dict[str, set[str]] = {n: set() for n in known}
    for ch in d.chances:
        graph[ch.id].update(ch.parents)
    for dec in d.decisions:
        graph[dec.id].update(dec.observed)
    for before, after in zip(d.decision_order, d.decision_order[1:]):
        graph[after].add(before)
    try:
        order = list(TopologicalSorter(graph).static_order())
    except CycleError as exc:
        cycle = exc.args[1]
        report.add(cycle[0], "cycle", "parent graph has a cycle: " + " -> ".join(cycle))
        order = None

    for ch in d.chances:
        domains = [d.states(p) for p in ch.parents]
        _check_table_keys(report, ch.id, list(ch.cpt), domains, "cpt-rows")
        for key, row in ch.cpt.items():
            if len(row) != len(ch.outcomes):
                report.add(ch.id, "row-length", f"row {key!r} has {len(row)} entries for "
                           f"{len(ch.outcomes)} outcomes")
                continue
            if any(not math.isfinite(p) or p < 0.0 or p > 1.0 for p in row):
                report.add(ch.id, "probability-range", f"row {key!r} has an entry outside [0, 1]")
            total = math.fsum(row)
            if abs(total - 1.0) > PROB_TOL:
                report.add(ch.id, "row-sum", f"row sum ≠ 1 for {key!r} (sum={total!r})")

    domains = [d.states(p) for p in d.utility.parents]
    _check_table_keys(report, "utility", list(d.utility.values), domains, "utility-rows")
    for key, value in d.utility.values.items():
        if not math.isfinite(value):
            report.add("utility", "utility-nonfinite", f"value for {key!r} is not finite")

    if order is not None:
        _check_observations(d, report)
    return report


def _ancestors(d: InfluenceDiagram, node_id: str) -> set[str]:
    parents = {c.id: c.parents for c in d.chances}
    out: set[str] = set()
    stack = list(parents.get(node_id, ()))
    while stack:
        p = stack.pop()
        if p not in out:
            out.add(p)
            stack.extend(parents.get(p, ()))
    return out


def _check_observations(d: InfluenceDiagram, report: ValidationReport) -> None:
    # An observed chance node must be fully determined by what is already known:
    # its chance ancestors are observed too and its decision ancestors come earlier.
    decision_ids = {x.id for x in d.decisions}
    known: set[str] = set()
    earlier: set[str] = set()
    for dec_id in d.decision_order:
        known.update(d.decision(dec_id).observed)
        for obs in d.decision(dec_id).observed:
            for anc in _ancestors(d, obs):
                if anc in decision_ids and anc not in earlier:
                    report.add(dec_id, "observation",
                               f"observed node {obs!r} depends on decision {anc!r} not yet taken")
                elif anc not in decision_ids and anc not in known:
                    report.add(dec_id, "observation",
                               f"observed node {obs!r} has unobserved chance ancestor {anc!r}")
        earlier.add(dec_id)


def information_sets(d: InfluenceDiagram) -> dict[str, tuple[str, ...]]:
    """Chance nodes known at each decision, cumulative along ``decision_order``.

    Later decisions remember everything earlier ones saw. Each tuple is in
    dependency order so it can be used directly as a tree level order.
    """
    topo = chance_order(d)
    known: set[str] = set()
    out = {}
    for dec_id in d.decision_order:
        known.update(d.decision(dec_id).observed)
        out[dec_id] = tuple(c for c in topo if c in known)
    return out


def chance_order(d: InfluenceDiagram) -> list[str]:
    """Chance node ids in a topological order that respects chance-to-chance arcs.

    Ties keep declaration order so the result is deterministic.
    """
    chance_ids = [c.id for c in d.chances]
    ids = set(chance_ids)
    parents = {c.id: [p for p in c.parents if p in ids] for c in d.chances}
    placed: list[str] = []
    done: set[str] = set()
    while len(placed) < len(chance_ids):
        for cid in chance_ids:
            if cid not in done and all(p in done for p in parents[cid]):
                placed.append(cid)
                done.add(cid)
                break
        else:
            raise InvalidDiagramError([Violation("<diagram>", "cycle", "chance nodes form a cycle")])
    return placed
