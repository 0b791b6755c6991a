"""The pronouncer: a shared decision-support service for agents.

Agents never build decision models themselves. They pick a template that was
registered in advance, fill in its numeric slots (CPT rows and utility
values) and get back advice: the action with the highest expected utility
among those the template's norms allow.
"""
from __future__ import annotations

import math
import statistics
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Protocol, Sequence, Union

from .decision.model import PROB_TOL, ChanceNode, InfluenceDiagram, UtilityTable, validate_diagram
from .decision.tree import compile_to_tree, fold_back, pick_best

BindingValue = Union[float, Sequence[float]]


class PronouncerError(Exception):
    pass


class UnknownTemplateError(PronouncerError, LookupError):
    pass


class DuplicateTemplateError(PronouncerError):
    pass


class InvalidTemplateError(PronouncerError, ValueError):
    pass


class BindingError(PronouncerError, ValueError):
    pass


class NoPermissibleActionError(PronouncerError):
    pass


@dataclass(frozen=True)
class Slot:
    """Where a binding goes: one CPT row of a chance node, or one utility value."""

    kind: str  # "cpt" or "utility"
    node: str
    given: tuple[str, ...]


@dataclass(frozen=True)
class TemplateModel:
    id: str
    skeleton: InfluenceDiagram
    slots: Mapping[str, Slot]

    @property
    def required_bindings(self) -> tuple[str, ...]:
        return tuple(self.slots)

    @property
    def first_decision(self) -> str:
        return self.skeleton.decision_order[0]

    def instantiate(self, bindings: Mapping[str, BindingValue]) -> InfluenceDiagram:
        """Return the skeleton with every slot replaced by its bound value."""
        rows: dict[str, dict] = {}
        values = None
        for name, slot in self.slots.items():
            value = bindings[name]
            if slot.kind == "cpt":
                rows.setdefault(slot.node, {})[slot.given] = tuple(value)
            else:
                if values is None:
                    values = dict(self.skeleton.utility.values)
                values[slot.given] = value
        chances = []
        for ch in self.skeleton.chances:
            if ch.id in rows:
                cpt = dict(ch.cpt)
                cpt.update(rows[ch.id])
                ch = ChanceNode(ch.id, ch.outcomes, ch.parents, cpt)
            chances.append(ch)
        utility = self.skeleton.utility
        if values is not None:
            utility = UtilityTable(utility.parents, values)
        return InfluenceDiagram(self.skeleton.decisions, chances, utility,
                                self.skeleton.decision_order)

    def placeholder_bindings(self) -> dict[str, BindingValue]:
        """Legal filler values: uniform CPT rows and zero utilities."""
        out: dict[str, BindingValue] = {}
        for name, slot in self.slots.items():
            if slot.kind == "cpt":
                n = len(self.skeleton.chance(slot.node).outcomes)
                out[name] = [1.0 / n] * n
            else:
                out[name] = 0.0
        return out


class ActionFilter(Protocol):
    def __call__(self, action_values: Mapping[str, float]) -> Iterable[str]:
        """Return the actions to remove from consideration."""


@dataclass(frozen=True)
class NormFilter:
    """Static norm: a fixed set of actions that must never be advised."""

    forbidden: frozenset[str]

    def __call__(self, action_values: Mapping[str, float]) -> frozenset[str]:
        return self.forbidden & frozenset(action_values)


@dataclass(frozen=True)
class PredicateFilter:
    """Removes every action for which ``keep(action, value)`` is false.

    This is the hook for constraint-style filters (e.g. risk limits); no
    particular constraint semantics are built in.
    """

    keep: Callable[[str, float], bool]

    def __call__(self, action_values: Mapping[str, float]) -> list[str]:
        return [a for a, v in action_values.items() if not self.keep(a, v)]


@dataclass(frozen=True)
class Query:
    template_id: str
    bindings: Mapping[str, BindingValue]
    requester: str = "anonymous"


@dataclass(frozen=True)
class Advice:
    action: str
    expected_utility: float
    action_values: dict[str, float]
    filtered_out: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "action": self.action,
            "eu": self.expected_utility,
            "action_values": dict(self.action_values),
            "filtered_out": list(self.filtered_out),
        }


@dataclass(frozen=True)
class BenchStats:
    runs: int
    mean_ms: float
    stddev_ms: float

    def csv_row(self) -> str:
        return f"{self.runs},{self.mean_ms:.6f},{self.stddev_ms:.6f}"


def check_bindings(template: TemplateModel, bindings: Mapping[str, BindingValue]) -> None:
    missing = [s for s in template.slots if s not in bindings]
    extra = [s for s in bindings if s not in template.slots]
    if missing:
        raise BindingError(f"missing bindings: {', '.join(sorted(missing))}")
    if extra:
        raise BindingError(f"unknown bindings: {', '.join(sorted(extra))}")
    for name, slot in template.slots.items():
        value = bindings[name]
        if slot.kind == "cpt":
            n = len(template.skeleton.chance(slot.node).outcomes)
            try:
                row = [float(p) for p in value]
            except (TypeError, ValueError):
                raise BindingError(f"{name}: expected a probability row") from None
            if len(row) != n:
                raise BindingError(f"{name}: expected {n} probabilities, got {len(row)}")
            if any(not (0.0 <= p <= 1.0) for p in row):
                raise BindingError(f"{name}: probabilities must lie in [0, 1]")
            if abs(math.fsum(row) - 1.0) > PROB_TOL:
                raise BindingError(f"{name}: row sums to {math.fsum(row)!r}, not 1")
        else:
            if isinstance(value, (list, tuple)) or not isinstance(value, (int, float)):
                raise BindingError(f"{name}: expected a number")
            if not math.isfinite(value):
                raise BindingError(f"{name}: utility must be finite")


class Pronouncer:
    """Template registry plus evaluation.

    Registration takes a lock; entries are never replaced afterwards, so
    ``pronounce`` and ``benchmark`` need no locking and can be called from
    any number of threads.
    """

    def __init__(self):
        self._templates: dict[str, TemplateModel] = {}
        self._filters: dict[str, tuple[ActionFilter, ...]] = {}
        self._lock = threading.Lock()

    def register_template(
        self, t: TemplateModel, filters: Sequence[ActionFilter] = ()
    ) -> str:
        for name, slot in t.slots.items():
            if slot.kind == "cpt":
                try:
                    ch = t.skeleton.chance(slot.node)
                except KeyError:
                    raise InvalidTemplateError(f"slot {name!r}: no chance node {slot.node!r}") from None
                if slot.given not in ch.cpt:
                    raise InvalidTemplateError(f"slot {name!r}: no CPT row {slot.given!r}")
            elif slot.kind == "utility":
                if slot.given not in t.skeleton.utility.values:
                    raise InvalidTemplateError(f"slot {name!r}: no utility entry {slot.given!r}")
            else:
                raise InvalidTemplateError(f"slot {name!r}: unknown kind {slot.kind!r}")

        report = validate_diagram(t.instantiate(t.placeholder_bindings()))
        if not report.ok:
            raise InvalidTemplateError(
                f"template {t.id!r} skeleton is invalid: "
                + "; ".join(str(v) for v in report.violations)
            )

        alternatives = t.skeleton.decision(t.first_decision).alternatives
        for f in filters:
            if isinstance(f, NormFilter):
                unknown = f.forbidden - set(alternatives)
                if unknown:
                    raise InvalidTemplateError(f"norm forbids unknown actions {sorted(unknown)}")
                if f.forbidden >= set(alternatives):
                    raise InvalidTemplateError("norm forbids every alternative")

        with self._lock:
            if t.id in self._templates:
                raise DuplicateTemplateError(f"template {t.id!r} already registered")
            self._templates[t.id] = t
            self._filters[t.id] = tuple(filters)
        return t.id

    def template(self, template_id: str) -> TemplateModel:
        try:
            return self._templates[template_id]
        except KeyError:
            raise UnknownTemplateError(f"unknown template {template_id!r}") from None

    def templates(self) -> list[str]:
        return sorted(self._templates)

    def pronounce(self, q: Query) -> Advice:
        t = self.template(q.template_id)
        return self._advise(t, self._filters[t.id], q.bindings)

    @staticmethod
    def _advise(
        t: TemplateModel, filters: Sequence[ActionFilter], bindings: Mapping[str, BindingValue]
    ) -> Advice:
        # set all values, then evaluate the whole model
        check_bindings(t, bindings)
        diagram = t.instantiate(bindings)
        validate_diagram(diagram).raise_if_invalid()
        ev = fold_back(compile_to_tree(diagram, check=False), check=False)

        removed: set[str] = set()
        for f in filters:
            removed.update(f(ev.action_values))
        alternatives = [a for a in ev.action_values if a not in removed]
        if not alternatives:
            raise NoPermissibleActionError("filters removed every action")
        if removed:
            best = alternatives[pick_best([ev.action_values[a] for a in alternatives])]
        else:
            best = ev.best_action
        filtered = [a for a in ev.action_values if a in removed]
        return Advice(best, ev.action_values[best], dict(ev.action_values), filtered)

    def benchmark(
        self,
        template_id: str,
        bindings: Mapping[str, BindingValue],
        n: int,
        *,
        warmup: int = 0,
    ) -> BenchStats:
        """Time ``n`` set-and-evaluate runs of a template.

        Each run binds the values into the template and evaluates it, exactly
        as :meth:`pronounce` does; the registry lookup happens once up front.
        ``warmup`` extra runs are executed first and not recorded. With a
        single run the standard deviation is reported as 0.
        """
        if n < 1:
            raise ValueError("n must be >= 1")
        t = self.template(template_id)
        filters = self._filters[t.id]
        for _ in range(warmup):
            self._advise(t, filters, bindings)
        samples = []
        clock = time.perf_counter_ns
        for _ in range(n):
            start = clock()
            self._advise(t, filters, bindings)
            samples.append((clock() - start) / 1e6)
        mean = statistics.fmean(samples)
        std = statistics.stdev(samples) if n > 1 else 0.0
        return BenchStats(n, mean, std)
