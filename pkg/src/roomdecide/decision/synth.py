"""Seeded random influence diagrams for cross-checking evaluators."""
from __future__ import annotations

import numpy as np

from .model import ChanceNode, DecisionNode, InfluenceDiagram, UtilityTable, joint_assignments


def _row(rng: np.random.Generator, n: int) -> tuple[float, ...]:
    if rng.random() < 0.15:
        row = np.zeros(n)
        row[rng.integers(n)] = 1.0
    else:
        row = rng.dirichlet(np.ones(n))
    return tuple(float(p) for p in row / row.sum())


def random_diagram(
    rng: np.random.Generator,
    max_decisions: int = 2,
    max_alternatives: int = 4,
    max_chances: int = 3,
    max_outcomes: int = 4,
    observe_prob: float = 0.3,
) -> InfluenceDiagram:
    """Draw a valid diagram within the given bounds.

    Chance nodes may depend on earlier chance nodes and on decisions. With
    probability ``observe_prob`` the last decision observes one chance node
    that has no parents, which always yields a valid information structure.
    """
    n_dec = int(rng.integers(1, max_decisions + 1))
    n_ch = int(rng.integers(1, max_chances + 1))
    dec_ids = [f"D{i}" for i in range(n_dec)]
    ch_ids = [f"X{i}" for i in range(n_ch)]

    alts = {d: tuple(f"a{j}" for j in range(int(rng.integers(2, max_alternatives + 1))))
            for d in dec_ids}
    outs = {c: tuple(f"o{j}" for j in range(int(rng.integers(2, max_outcomes + 1))))
            for c in ch_ids}
    states = {**alts, **outs}

    parents: dict[str, tuple[str, ...]] = {}
    for i, c in enumerate(ch_ids):
        pool = dec_ids + ch_ids[:i]
        parents[c] = tuple(p for p in pool if rng.random() < 0.4)

    # only the last decision may look at one parentless chance node; this keeps
    # the policy space small enough for exhaustive enumeration
    observed: dict[str, tuple[str, ...]] = {d: () for d in dec_ids}
    roots = [c for c in ch_ids if not parents[c]]
    if roots and rng.random() < observe_prob:
        observed[dec_ids[-1]] = (roots[int(rng.integers(len(roots)))],)

    chances = []
    for c in ch_ids:
        doms = [states[p] for p in parents[c]]
        cpt = {key: _row(rng, len(outs[c])) for key in joint_assignments(doms)}
        chances.append(ChanceNode(c, outs[c], parents[c], cpt))

    everything = dec_ids + ch_ids
    u_par = [n for n in everything if rng.random() < 0.5] or [dec_ids[0]]
    values = {
        key: float(np.round(rng.uniform(-10, 10), 3))
        for key in joint_assignments([states[p] for p in u_par])
    }
    decisions = [DecisionNode(d, alts[d], observed[d]) for d in dec_ids]
    return InfluenceDiagram(decisions, chances, UtilityTable(tuple(u_par), values), tuple(dec_ids))
