"""Exact policy enumeration for influence diagrams.

Works directly on the joint distribution, never on a tree, so it can be used
to cross-check :func:`roomdecide.decision.tree.evaluate_diagram`.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from .model import InfluenceDiagram, information_sets, validate_diagram
from .tree import Evaluation, pick_best

DEFAULT_STATE_CAP = 10**6


class StateSpaceError(ValueError):
    """The joint state space or the policy space is larger than the cap."""


def enumerate_policies(d: InfluenceDiagram, cap: int = DEFAULT_STATE_CAP) -> Evaluation:
    """Score every deterministic policy of ``d`` and return the best one.

    A policy fixes, for each decision and each combination of outcomes of the
    chance nodes it observes, one alternative. Its score is the sum over all
    joint chance outcomes of probability times utility. Policies are visited
    in lexicographic order of alternative indices (first decision most
    significant); the first one within tie tolerance of the maximum wins.
    """
    validate_diagram(d).raise_if_invalid()

    dec_ids = list(d.decision_order)
    alts = [d.decision(x).alternatives for x in dec_ids]
    chances = list(d.chances)
    ch_ids = [c.id for c in chances]
    outcome_counts = [len(c.outcomes) for c in chances]

    n_x = math.prod(outcome_counts)
    n_a = math.prod(len(a) for a in alts)
    if n_x * n_a > cap:
        raise StateSpaceError(f"{n_x * n_a} joint states exceed the cap of {cap}")

    info = information_sets(d)
    info_sizes = [math.prod(len(d.chance(c).outcomes) for c in info[x]) for x in dec_ids]
    n_policies = math.prod(len(a) ** k for a, k in zip(alts, info_sizes))
    if n_policies > cap:
        raise StateSpaceError(f"{n_policies} policies exceed the cap of {cap}")

    xs = list(itertools.product(*[c.outcomes for c in chances]))
    avs = list(itertools.product(*alts))

    # weights[j, i] = P(x_i | decisions a_j) * U(x_i, a_j)
    weights = np.empty((n_a, n_x))
    for j, av in enumerate(avs):
        for i, xv in enumerate(xs):
            env = dict(zip(dec_ids, av))
            env.update(zip(ch_ids, xv))
            p = 1.0
            for c in chances:
                p *= c.cpt[tuple(env[q] for q in c.parents)][c.outcomes.index(env[c.id])]
            weights[j, i] = p * d.utility.values[tuple(env[q] for q in d.utility.parents)]

    # for each decision, index of the information state seen under each joint outcome
    info_index = []
    info_labels = []
    for x in dec_ids:
        obs = info[x]
        cols = [ch_ids.index(c) for c in obs]
        states = list(itertools.product(*[d.chance(c).outcomes for c in obs]))
        lookup = {s: k for k, s in enumerate(states)}
        info_index.append(np.array([lookup[tuple(xv[c] for c in cols)] for xv in xs], dtype=np.intp))
        info_labels.append([tuple(zip(obs, s)) for s in states])

    strides = []
    s = 1
    for a in reversed(alts):
        strides.append(s)
        s *= len(a)
    strides.reverse()

    cols = np.arange(n_x)
    rule_spaces = [
        list(itertools.product(range(len(a)), repeat=k)) for a, k in zip(alts, info_sizes)
    ]
    policies = list(itertools.product(*rule_spaces))
    scores = np.empty(len(policies))
    for p_idx, rules in enumerate(policies):
        joint = np.zeros(n_x, dtype=np.intp)
        for rule, idx, stride in zip(rules, info_index, strides):
            joint += np.asarray(rule, dtype=np.intp)[idx] * stride
        scores[p_idx] = weights[joint, cols].sum()

    score_list = scores.tolist()
    best = pick_best(score_list)
    best_rules = policies[best]

    # first-decision values: best score among policies that pin it to one action
    first_alts = alts[0]
    action_values = {}
    for a_idx, alt in enumerate(first_alts):
        pinned = [v for v, rules in zip(score_list, policies) if all(r == a_idx for r in rules[0])]
        action_values[alt] = max(pinned)
    first_best = first_alts[pick_best(list(action_values.values()))]

    policy = {}
    for x, rule, labels, a in zip(dec_ids, best_rules, info_labels, alts):
        for k, state in enumerate(labels):
            policy[(x, state)] = a[rule[k]]

    return Evaluation(first_best, score_list[best], action_values, policy)
