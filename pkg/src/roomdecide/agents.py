"""Room, EP and Personal Comfort agent behaviour.

Everything here is a function of explicit inputs; the simulator owns agent
state and calls these at the right times.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import templates
from .pronouncer import Query
from .thermal import (
    T_MAX,
    T_MIN,
    UNREACHABLE,
    HeatInput,
    ThermalParams,
    time_to_target,
)

SETBACK = 16.0
DESIRED_BAND = 0.5
RADIATOR_POWER = 1000.0
VENT_CONDUCTANCE = 50.0
RENEGOTIATION_DELAY = 300.0

# (t_out - desired) intervals in degC, from high positive to high negative difference
DEFAULT_BINS = (
    ("high-positive", 10.0, 40.0),
    ("positive", 2.0, 10.0),
    ("near-zero", -2.0, 2.0),
    ("negative", -10.0, -2.0),
    ("high-negative", -40.0, -10.0),
)


@dataclass(frozen=True)
class ComfortProfile:
    person: str
    preferred: float
    weight: float = 1.0

    def __post_init__(self):
        if not 10.0 <= self.preferred <= 35.0:
            raise ValueError(f"{self.person}: preferred temperature must be in [10, 35] degC")
        if not (math.isfinite(self.weight) and self.weight > 0):
            raise ValueError(f"{self.person}: weight must be > 0")


@dataclass(frozen=True)
class CalendarEntry:
    meeting: str
    room: str
    start: float
    duration: float
    attendees: tuple[tuple[str, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "attendees", tuple((p, float(q)) for p, q in self.attendees))
        if not self.duration > 0:
            raise ValueError(f"{self.meeting}: duration must be > 0")
        for person, prob in self.attendees:
            if not 0.0 <= prob <= 1.0:
                raise ValueError(f"{self.meeting}: show-up probability of {person} not in [0, 1]")

    @property
    def end(self) -> float:
        return self.start + self.duration

    @property
    def people(self) -> tuple[str, ...]:
        return tuple(p for p, _ in self.attendees)


@dataclass(frozen=True)
class BadgeEvent:
    time: float
    person: str
    room: str
    kind: str  # "enter" | "leave"

    def __post_init__(self):
        if self.kind not in ("enter", "leave"):
            raise ValueError(f"badge event kind must be 'enter' or 'leave', got {self.kind!r}")


@dataclass(frozen=True)
class OverrideEvent:
    """A manual override: forces a radiator power or a setpoint until ``expiry``."""

    time: float
    room: str
    expiry: float
    power: float | None = None
    setpoint: float | None = None

    def __post_init__(self):
        if not self.expiry > self.time:
            raise ValueError("override expiry must be after its start time")
        if (self.power is None) == (self.setpoint is None):
            raise ValueError("override needs exactly one of power or setpoint")
        if self.power is not None and self.power < 0:
            raise ValueError("override power must be >= 0")

    def active(self, now: float) -> bool:
        return self.time <= now < self.expiry


@dataclass(frozen=True)
class Command:
    """What the room agent asks its EP agent to do.

    The EP agent runs a bang-bang thermostat towards ``setpoint`` with at most
    ``max_power`` watts, ventilating with ``vent_conductance`` W/K while the
    room is above the setpoint. ``forced_power`` bypasses the thermostat.
    """

    setpoint: float
    max_power: float
    vent_conductance: float = 0.0
    forced_power: float | None = None


def actuate(cmd: Command, temperature: float) -> HeatInput:
    """EP agent control law: the heat input for the next interval."""
    if cmd.forced_power is not None:
        return HeatInput(cmd.forced_power, 0.0)
    power = cmd.max_power if temperature < cmd.setpoint else 0.0
    vent = cmd.vent_conductance if temperature > cmd.setpoint else 0.0
    return HeatInput(power, vent)


@dataclass(frozen=True)
class HeatingContext:
    """Everything the room agent needs to fill in the heating template.

    ``comfort_penalties`` are ``(higher, lower)`` in utiles; landing in the
    desired band costs nothing. ``energy_weight`` is utiles per kWh.
    """

    params: ThermalParams = field(default_factory=ThermalParams)
    current: float = SETBACK
    desired: float = 22.0
    horizon: float = 4 * 3600.0
    bins: tuple[tuple[str, float, float], ...] = DEFAULT_BINS
    prior: tuple[float, ...] = (0.0, 0.05, 0.15, 0.5, 0.3)
    energy_weight: float = 1.0
    comfort_penalties: tuple[float, float] = (2.0, 3.0)
    radiator_power: float = RADIATOR_POWER
    vent_conductance: float = VENT_CONDUCTANCE
    band: float = DESIRED_BAND
    cpt_dt: float = 60.0

    def __post_init__(self):
        object.__setattr__(self, "bins", tuple(tuple(b) for b in self.bins))
        object.__setattr__(self, "prior", tuple(float(p) for p in self.prior))
        object.__setattr__(self, "comfort_penalties", tuple(self.comfort_penalties))
        if [b[0] for b in self.bins] != list(templates.OUTSIDE_BINS):
            raise ValueError(f"bins must be labelled {templates.OUTSIDE_BINS}")
        spans = sorted((lo, hi) for _, lo, hi in self.bins)
        if any(lo > hi for lo, hi in spans):
            raise ValueError("bin lower bound above upper bound")
        if any(a[1] != b[0] for a, b in zip(spans, spans[1:])):
            raise ValueError("bins must partition a contiguous range")
        if len(self.prior) != len(self.bins) or any(p < 0 for p in self.prior):
            raise ValueError("prior needs one non-negative probability per bin")
        if abs(math.fsum(self.prior) - 1.0) > 1e-9:
            raise ValueError("prior must sum to 1")
        if any(p < 0 for p in self.comfort_penalties) or self.energy_weight < 0:
            raise ValueError("penalties and energy weight must be >= 0")
        if self.horizon < 0 or self.cpt_dt <= 0 or self.band < 0:
            raise ValueError("horizon >= 0, cpt_dt > 0 and band >= 0 required")

    def heat_input(self, action: str) -> HeatInput:
        if action == "no-heat":
            return HeatInput()
        if action == "one-radiator":
            return HeatInput(self.radiator_power)
        if action == "both-radiators":
            return HeatInput(2 * self.radiator_power)
        if action == "ventilate":
            return HeatInput(0.0, self.vent_conductance)
        raise ValueError(f"unknown heating action {action!r}")

    def energy_kwh(self, action: str) -> float:
        """Nominal radiator energy of running ``action`` for the whole horizon."""
        return self.heat_input(action).power * self.horizon / 3.6e6


# -- negotiation --------------------------------------------------------------

def negotiate_setpoint(profiles: Sequence[ComfortProfile]) -> float:
    """Weighted mean of preferred temperatures, rounded half-up to 0.1 degC.

    The weighted mean minimises the weighted sum of squared deviations from
    everyone's preference.
    """
    if not profiles:
        raise ValueError("cannot negotiate a setpoint with nobody")
    total = math.fsum(p.weight for p in profiles)
    mean = math.fsum(p.weight * p.preferred for p in profiles) / total
    # snap away float noise before the half-up rounding
    snapped = Decimal(repr(mean)).quantize(Decimal("1e-9"), rounding=ROUND_HALF_UP)
    return float(snapped.quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def expected_attendance(e: CalendarEntry) -> float:
    return math.fsum(p for _, p in e.attendees)


def renegotiate(
    e: CalendarEntry,
    present: Iterable[str],
    profiles: Mapping[str, ComfortProfile],
) -> float | None:
    """New setpoint from the people actually in the room.

    Returns ``None`` when nobody with a comfort profile is present; the room
    should then be vacated back to the setback temperature.
    """
    here = [profiles[p] for p in sorted(set(present)) if p in profiles]
    if not here:
        return None
    return negotiate_setpoint(here)


# -- pre-heat planning ---------------------------------------------------------

@dataclass(frozen=True)
class PreheatPlan:
    start: float
    power: float
    duration: float
    shortfall: bool = False

    @property
    def energy_kwh(self) -> float:
        return self.power * self.duration / 3.6e6


def plan_preheat(
    e: CalendarEntry,
    ctx: HeatingContext,
    setpoint: float,
    t_out_estimate: float,
    now: float = 0.0,
    levels: Sequence[float] | None = None,
) -> PreheatPlan:
    """Latest-start pre-heat that brings the room to ``setpoint`` by ``e.start``.

    Among the power levels (default: one and both radiators) that reach the
    setpoint in time, the one with the least delivered energy is chosen; ties
    go to the lower power. If none makes it, heat at the highest level from
    ``now`` and flag a shortfall.
    """
    if e.start < now:
        raise ValueError(f"meeting {e.meeting} starts before the planning time")
    if ctx.current >= setpoint:
        return PreheatPlan(e.start, 0.0, 0.0)
    if levels is None:
        levels = (ctx.radiator_power, 2 * ctx.radiator_power)
    available = e.start - now
    feasible = []
    for power in sorted(levels):
        needed = time_to_target(ctx.params, ctx.current, setpoint, HeatInput(power), t_out_estimate)
        if needed <= available:
            feasible.append((power * needed, power, needed))
    if not feasible:
        top = max(levels)
        return PreheatPlan(now, top, available, shortfall=True)
    _, power, needed = min(feasible, key=lambda x: (x[0], x[1]))
    return PreheatPlan(e.start - needed, power, needed)


def negotiation_lead(
    params: ThermalParams,
    current: float,
    setpoint: float,
    t_out: float,
    radiator_power: float = RADIATOR_POWER,
    margin: float = 600.0,
    cap: float = 4 * 3600.0,
) -> float:
    """How long before a meeting the room agent starts planning for it."""
    needed = time_to_target(params, current, setpoint, HeatInput(radiator_power), t_out)
    if needed == UNREACHABLE:
        return cap
    return min(needed + margin, cap)


# -- decision query -----------------------------------------------------------

def _exact_unit_sum(row: list[float]) -> tuple[float, ...]:
    # push the rounding residue into the largest entry so sum(row) == 1.0
    for _ in range(4):
        s = sum(row)
        if s == 1.0:
            break
        i = max(range(len(row)), key=row.__getitem__)
        row[i] = min(1.0, max(0.0, row[i] + (1.0 - s)))
    return tuple(row)


def forecast_prior(
    diff: float,
    bins: Sequence[tuple[str, float, float]] = DEFAULT_BINS,
    spread: float = 3.0,
) -> tuple[float, ...]:
    """Bin probabilities for a normal forecast of ``t_out - desired``.

    Mass beyond the outermost bins is folded into them.
    """
    if spread <= 0:
        raise ValueError("spread must be > 0")

    def cdf(x: float) -> float:
        return 0.5 * (1.0 + math.erf((x - diff) / (spread * math.sqrt(2.0))))

    lo_edge = min(lo for _, lo, _ in bins)
    hi_edge = max(hi for _, _, hi in bins)
    mass = []
    for _, lo, hi in bins:
        a = 0.0 if lo == lo_edge else cdf(lo)
        b = 1.0 if hi == hi_edge else cdf(hi)
        mass.append(max(b - a, 0.0))
    total = sum(mass)
    return _exact_unit_sum([m / total for m in mass])


def _classify(temps: np.ndarray, desired: float, band: float) -> np.ndarray:
    counts = np.array([
        np.count_nonzero(temps > desired + band),
        np.count_nonzero((temps >= desired - band) & (temps <= desired + band)),
        np.count_nonzero(temps < desired - band),
    ])
    return counts


def generate_cpt(
    actions: Sequence[str],
    ctx: HeatingContext,
    samples: int,
    seed: int,
) -> dict[tuple[str, str], tuple[float, ...]]:
    """Monte Carlo rows of P(result | action, outside bin).

    For each bin, ``samples`` outside temperatures are drawn uniformly from
    the bin (one draw shared by all actions). Each sample runs the room over
    the horizon under the action's thermostat control towards the desired
    temperature (see :func:`actuate`), stepping the exact solution every
    ``ctx.cpt_dt`` seconds. The final temperature is classified as higher,
    desired or lower using ``ctx.band``; rows are the outcome frequencies in
    the order of ``templates.RESULTS``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    draws = {
        label: rng.uniform(ctx.desired + lo, ctx.desired + hi, samples)
        for label, lo, hi in ctx.bins
    }
    p = ctx.params
    n_full, rest = divmod(ctx.horizon, ctx.cpt_dt)
    steps = [ctx.cpt_dt] * int(n_full) + ([rest] if rest > 0 else [])

    out = {}
    for action in actions:
        heat = ctx.heat_input(action)
        cmd = Command(ctx.desired, heat.power, heat.vent_extra_conductance)
        for label, _, _ in ctx.bins:
            t_out = draws[label]
            temps = np.full(samples, float(ctx.current))
            for dt in steps:
                power = np.where(temps < cmd.setpoint, cmd.max_power, 0.0)
                vent = np.where(temps > cmd.setpoint, cmd.vent_conductance, 0.0)
                k = 1.0 / p.resistance + vent
                t_inf = t_out + power / k
                temps = t_inf + (temps - t_inf) * np.exp(-dt * k / p.capacitance)
                np.clip(temps, T_MIN, T_MAX, out=temps)
            counts = _classify(temps, ctx.desired, ctx.band)
            out[(action, label)] = _exact_unit_sum([c / samples for c in counts.tolist()])
    return out


def build_heating_query(
    ctx: HeatingContext,
    *,
    samples: int = 200,
    seed: int = 0,
    requester: str = "room",
    template_id: str = templates.HEATING,
) -> Query:
    """Fill every slot of the heating template from ``ctx``.

    Utility of (action, result) is ``-energy_weight * kWh(action) - penalty(result)``
    with no penalty for the desired result.
    """
    bindings: dict[str, object] = {templates.PRIOR_SLOT: list(ctx.prior)}
    cpt = generate_cpt(templates.ACTIONS, ctx, samples, seed)
    for (action, label), row in cpt.items():
        bindings[templates.cpt_slot(action, label)] = list(row)
    higher, lower = ctx.comfort_penalties
    penalty = {"higher": higher, "desired": 0.0, "lower": lower}
    for action in templates.ACTIONS:
        energy = ctx.energy_weight * ctx.energy_kwh(action)
        for result in templates.RESULTS:
            bindings[templates.utility_slot(action, result)] = -energy - penalty[result]
    return Query(template_id, bindings, requester)


def default_heating_bindings(seed: int = 0) -> dict:
    """Bindings for the heating template from the default context."""
    return dict(build_heating_query(HeatingContext(), seed=seed).bindings)


# -- overrides -----------------------------------------------------------------

def apply_override(control: Command, o: OverrideEvent, now: float) -> Command:
    """Replace the agent's command while ``o`` is in force."""
    if not o.active(now):
        return control
    if o.power is not None:
        return replace(control, forced_power=o.power, vent_conductance=0.0)
    return Command(o.setpoint, control.max_power)


def effective_command(
    control: Command, overrides: Iterable[OverrideEvent], now: float
) -> tuple[Command, bool]:
    """Apply all overrides in time order; the latest active one wins."""
    active = False
    for o in sorted(overrides, key=lambda x: x.time):
        if o.active(now):
            control = apply_override(control, o, now)
            active = True
    return control, active
