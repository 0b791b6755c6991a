"""Decision trees: compilation from influence diagrams and fold-back evaluation."""
from __future__ import annotations

import math
from operator import itemgetter
from dataclasses import dataclass, field
from typing import NamedTuple, Union

from .model import PROB_TOL, InfluenceDiagram, information_sets, chance_order, validate_diagram

# Values this close to the best are treated as ties; the lowest index wins.
TIE_RTOL = 1e-12


class MalformedTreeError(ValueError):
    pass


class Terminal(NamedTuple):
    utility: float


class Chance(NamedTuple):
    node: str
    outcomes: tuple[str, ...]
    probabilities: tuple[float, ...]
    children: tuple["TreeNode", ...]


class Decision(NamedTuple):
    node: str
    alternatives: tuple[str, ...]
    children: tuple["TreeNode", ...]


TreeNode = Union[Terminal, Chance, Decision]


@dataclass(frozen=True)
class DecisionTree:
    root: TreeNode

    def leaves(self) -> int:
        stack, n = [self.root], 0
        while stack:
            node = stack.pop()
            if isinstance(node, Terminal):
                n += 1
            else:
                stack.extend(node.children)
        return n


InfoState = tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class Evaluation:
    """Result of solving a decision problem.

    ``action_values`` holds, for each alternative of the first decision, the
    expected utility of committing to it and acting optimally afterwards.
    ``policy`` maps ``(decision id, information state)`` to the chosen action,
    the information state being the tuple of ``(node, label)`` pairs known at
    that point.
    """

    best_action: str
    expected_utility: float
    action_values: dict[str, float]
    policy: dict[tuple[str, InfoState], str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "best_action": self.best_action,
            "expected_utility": self.expected_utility,
            "action_values": dict(self.action_values),
            "policy": [
                {"decision": dec, "state": [list(pair) for pair in state], "action": act}
                for (dec, state), act in self.policy.items()
            ],
        }


def pick_best(values) -> int:
    """Index of the first value within tie tolerance of the maximum."""
    top = max(values)
    slack = TIE_RTOL * max(1.0, abs(top))
    for i, v in enumerate(values):
        if v >= top - slack:
            return i
    raise AssertionError("unreachable")


def _key_getter(names: tuple[str, ...]):
    """Function mapping an assignment dict to the table key for ``names``."""
    if not names:
        return lambda _: ()
    if len(names) == 1:
        name = names[0]
        return lambda a: (a[name],)
    return itemgetter(*names)


def compile_to_tree(d: InfluenceDiagram, *, check: bool = True) -> DecisionTree:
    """Expand ``d`` into an equivalent decision tree.

    Levels follow ``decision_order``; before each decision come the chance
    nodes it newly observes, and all unobserved chance nodes come after the
    last decision in dependency order. Branch probabilities are CPT rows
    conditioned on the path so far, leaves are utility-table lookups.
    """
    if check:
        validate_diagram(d).raise_if_invalid()

    info = information_sets(d)
    levels: list[tuple[str, str]] = []
    placed: set[str] = set()
    for dec_id in d.decision_order:
        for cid in info[dec_id]:
            if cid not in placed:
                levels.append(("chance", cid))
                placed.add(cid)
        levels.append(("decision", dec_id))
    for cid in chance_order(d):
        if cid not in placed:
            levels.append(("chance", cid))

    decisions = {x.id: x for x in d.decisions}
    chances = {x.id: x for x in d.chances}
    u_values = d.utility.values
    u_key = _key_getter(d.utility.parents)
    row_keys = {x.id: _key_getter(x.parents) for x in d.chances}
    n_levels = len(levels)
    assignment: dict[str, str] = {}

    def build(depth: int) -> TreeNode:
        if depth == n_levels:
            return Terminal(u_values[u_key(assignment)])
        kind, node_id = levels[depth]
        if kind == "decision":
            dec = decisions[node_id]
            kids = []
            for alt in dec.alternatives:
                assignment[node_id] = alt
                kids.append(build(depth + 1))
            del assignment[node_id]
            return Decision(node_id, dec.alternatives, tuple(kids))
        ch = chances[node_id]
        probs = ch.cpt[row_keys[node_id](assignment)]
        kids = []
        for outcome in ch.outcomes:
            assignment[node_id] = outcome
            kids.append(build(depth + 1))
        del assignment[node_id]
        return Chance(node_id, ch.outcomes, probs, tuple(kids))

    return DecisionTree(build(0))


def _check_chance(node: Chance) -> None:
    if len(node.probabilities) != len(node.children) or len(node.outcomes) != len(node.children):
        raise MalformedTreeError(f"chance node {node.node!r}: branch count mismatch")
    if any(not (0.0 <= p <= 1.0) for p in node.probabilities):
        raise MalformedTreeError(f"chance node {node.node!r}: probability outside [0, 1]")
    if abs(math.fsum(node.probabilities) - 1.0) > PROB_TOL:
        raise MalformedTreeError(f"chance node {node.node!r}: branch probabilities sum to "
                                 f"{math.fsum(node.probabilities)!r}")


def _fold(node: TreeNode, path: InfoState, policy: dict, check: bool = True) -> float:
    if isinstance(node, Terminal):
        return node.utility
    if isinstance(node, Chance):
        if check:
            _check_chance(node)
        total = 0.0
        for outcome, p, child in zip(node.outcomes, node.probabilities, node.children):
            total += p * _fold(child, path + ((node.node, outcome),), policy, check)
        return total
    if isinstance(node, Decision):
        if len(node.alternatives) != len(node.children) or not node.children:
            raise MalformedTreeError(f"decision node {node.node!r}: branch count mismatch")
        values = [
            _fold(child, path + ((node.node, alt),), policy, check)
            for alt, child in zip(node.alternatives, node.children)
        ]
        best = pick_best(values)
        policy[(node.node, path)] = node.alternatives[best]
        return values[best]
    raise MalformedTreeError(f"unknown tree node {node!r}")


def _forced(node: TreeNode, decision: str, action: str, path: InfoState) -> float:
    # value when `decision` is pinned to `action` everywhere, optimal elsewhere
    if isinstance(node, Terminal):
        return node.utility
    if isinstance(node, Chance):
        return sum(
            p * _forced(child, decision, action, path + ((node.node, o),))
            for o, p, child in zip(node.outcomes, node.probabilities, node.children)
        )
    if node.node == decision:
        i = node.alternatives.index(action)
        return _fold(node.children[i], path + ((node.node, action),), {})
    return max(
        _forced(child, decision, action, path + ((node.node, alt),))
        for alt, child in zip(node.alternatives, node.children)
    )


def _first_decision(node: TreeNode) -> Decision | None:
    stack = [node]
    while stack:
        n = stack.pop(0)
        if isinstance(n, Decision):
            return n
        if isinstance(n, Chance):
            stack.extend(n.children)
    return None


def fold_back(t: DecisionTree, *, check: bool = True) -> Evaluation:
    """Average out chance nodes and fold back decisions (backward induction).

    ``check=False`` skips the per-node probability checks; only use it for
    trees that came out of :func:`compile_to_tree` on a validated diagram.

    Raises:
        MalformedTreeError: a chance node's branch probabilities do not sum to
            one, or the tree has no decision node.
    """
    policy: dict[tuple[str, InfoState], str] = {}
    root = t.root
    if isinstance(root, Decision):
        if len(root.alternatives) != len(root.children) or not root.children:
            raise MalformedTreeError(f"decision node {root.node!r}: branch count mismatch")
        values = [_fold(child, ((root.node, alt),), policy, check)
                  for alt, child in zip(root.alternatives, root.children)]
        i = pick_best(values)
        policy[(root.node, ())] = root.alternatives[i]
        return Evaluation(root.alternatives[i], values[i],
                          dict(zip(root.alternatives, values)), policy)

    eu = _fold(root, (), policy, check)
    first = _first_decision(root)
    if first is None:
        raise MalformedTreeError("tree has no decision node")
    values = [_forced(root, first.node, alt, ()) for alt in first.alternatives]
    best = first.alternatives[pick_best(values)]
    return Evaluation(best, eu, dict(zip(first.alternatives, values)), policy)


def evaluate_diagram(d: InfluenceDiagram) -> Evaluation:
    """Solve ``d`` by compiling it to a tree and folding back."""
    validate_diagram(d).raise_if_invalid()
    return fold_back(compile_to_tree(d, check=False), check=False)
