"""Deterministic fixed-tick simulation of rooms, people, agents and the pronouncer.

Within a tick the order is fixed: weather, badge events, agent decisions,
overrides, physics. Identical scenario and configuration give identical
metrics and trace, down to the bytes written.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from . import templates
from .agents import (
    DEFAULT_BINS,
    CalendarEntry,
    Command,
    HeatingContext,
    PreheatPlan,
    actuate,
    build_heating_query,
    effective_command,
    expected_attendance,
    forecast_prior,
    negotiate_setpoint,
    negotiation_lead,
    plan_preheat,
    renegotiate,
)
from .pronouncer import Pronouncer
from .scenario import Room, Scenario
from .thermal import RoomThermalState, step

log = logging.getLogger(__name__)

TRACE_COLUMNS = ("time", "room", "temp", "setpoint", "power", "occupants", "override_active", "vent")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    """Simulation and room-agent settings.

    Comfort penalties are in utiles per expected occupant-hour of the meeting
    being prepared; the room agent scales them by expected attendance and
    meeting length before querying the pronouncer.
    """

    dt: float = 60.0
    setback: float = 16.0
    renegotiation_delay: float = 300.0
    lead_margin: float = 600.0
    lead_cap: float = 4 * 3600.0
    preheat: bool = True
    attendance_threshold: float = 0.5
    energy_weight: float = 1.0
    penalty_higher: float = 2.0
    penalty_lower: float = 3.0
    forecast_spread: float = 3.0
    cpt_samples: int = 200
    cpt_dt: float = 60.0
    band: float = 0.5
    bins: tuple[tuple[str, float, float], ...] = DEFAULT_BINS
    forbidden_actions: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "bins", tuple(tuple(b) for b in self.bins))
        object.__setattr__(self, "forbidden_actions", tuple(self.forbidden_actions))
        if not self.dt > 0:
            raise ConfigError("dt must be > 0")
        if self.renegotiation_delay < 0:
            raise ConfigError("renegotiation_delay must be >= 0")
        if self.cpt_samples < 1:
            raise ConfigError("cpt_samples must be >= 1")

    @classmethod
    def from_dict(cls, obj: dict) -> "SimConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(obj) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["bins"] = [list(b) for b in self.bins]
        d["forbidden_actions"] = list(self.forbidden_actions)
        return d


def load_config(path: str | Path | None) -> SimConfig:
    if path is None:
        return SimConfig()
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return SimConfig.from_dict(obj)


@dataclass
class Metrics:
    heating_energy: float = 0.0     # kWh
    comfort_deviation: float = 0.0  # degree-hours while occupied
    advice_count: int = 0
    shortfalls: int = 0
    occupied_hours: float = 0.0

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "Metrics":
        return cls(**{f.name: obj[f.name] for f in dataclasses.fields(cls) if f.name in obj})


@dataclass(frozen=True)
class TraceRow:
    time: float
    room: str
    temp: float
    setpoint: float
    power: float
    occupants: int
    override_active: bool
    vent: float


@dataclass
class _MeetingState:
    entry: CalendarEntry
    # pending -> scheduled -> planned -> running -> renegotiated -> done
    phase: str = "pending"
    setpoint: float = 0.0
    decide_at: float = math.inf
    plan: PreheatPlan | None = None
    advice: str | None = None
    vacated: bool = False


@dataclass
class _RoomState:
    room: Room
    temp: float
    meetings: list[_MeetingState] = field(default_factory=list)
    occupants: set[str] = field(default_factory=set)


def _ticks(horizon: float, dt: float) -> Iterable[tuple[float, float]]:
    n = math.ceil(horizon / dt) if horizon > 0 else 0
    for k in range(n):
        t = k * dt
        yield t, min(dt, horizon - t)


class _Weather:
    def __init__(self, s: Scenario):
        self.times = np.array([w[0] for w in s.weather])
        self.temps = np.array([w[1] for w in s.weather])

    def __call__(self, t: float) -> float:
        return float(np.interp(t, self.times, self.temps))


class _Badges:
    def __init__(self, s: Scenario, rooms: dict[str, _RoomState]):
        self.events = list(s.badges)
        self.i = 0
        self.rooms = rooms

    def advance(self, t: float) -> None:
        while self.i < len(self.events) and self.events[self.i].time <= t:
            ev = self.events[self.i]
            occ = self.rooms[ev.room].occupants
            if ev.kind == "enter":
                # a badge-in elsewhere means the person left their previous room
                for other in self.rooms.values():
                    other.occupants.discard(ev.person)
                occ.add(ev.person)
            else:
                occ.discard(ev.person)
            self.i += 1


def _query_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


class _RoomAgent:
    """Room agent for one room: schedules, plans, queries and re-negotiates."""

    def __init__(self, scenario: Scenario, config: SimConfig, pronouncer: Pronouncer, metrics: Metrics):
        self.s = scenario
        self.c = config
        self.pronouncer = pronouncer
        self.metrics = metrics
        self.profiles = scenario.profile_map()

    def _attendee_profiles(self, e: CalendarEntry):
        return [self.profiles[p] for p in e.people if p in self.profiles]

    def decide(self, rs: _RoomState, t: float, t_out: float) -> Command:
        c = self.c
        room = rs.room
        for m in rs.meetings:
            e = m.entry
            if m.phase == "pending" and t >= e.start - c.lead_cap:
                people = self._attendee_profiles(e)
                m.setpoint = negotiate_setpoint(people) if people else c.setback
                lead = negotiation_lead(room.params, rs.temp, m.setpoint, t_out,
                                        room.radiator_power, c.lead_margin, c.lead_cap)
                m.decide_at = e.start - lead
                m.phase = "scheduled"
            if m.phase == "scheduled" and t >= m.decide_at:
                if c.preheat and t < e.start and expected_attendance(e) >= c.attendance_threshold:
                    self._plan(m, rs, t, t_out)
                m.phase = "planned"
            if m.phase == "planned" and t >= e.start:
                m.phase = "running"
            if m.phase == "running" and t >= e.start + c.renegotiation_delay:
                new = renegotiate(e, rs.occupants, self.profiles)
                if new is None:
                    m.vacated = True
                    log.debug("%s vacated at t=%s", e.meeting, t)
                else:
                    m.setpoint = new
                m.phase = "renegotiated"
            # stragglers keep the meeting setpoint until the room is empty
            if m.phase in ("running", "renegotiated") and t >= e.end and not rs.occupants:
                m.phase = "done"

        for m in rs.meetings:
            if m.phase in ("running", "renegotiated"):
                sp = c.setback if m.vacated else m.setpoint
                return Command(sp, room.max_power)
        for m in rs.meetings:
            if m.phase == "planned" and m.plan is not None and m.plan.start <= t < m.entry.start:
                vent = room.vent_conductance if m.advice == "ventilate" else 0.0
                return Command(m.setpoint, m.plan.power, vent)
        return Command(c.setback, room.max_power)

    def _plan(self, m: _MeetingState, rs: _RoomState, t: float, t_out: float) -> None:
        c = self.c
        room = rs.room
        e = m.entry
        occupant_hours = expected_attendance(e) * e.duration / 3600.0
        ctx = HeatingContext(
            params=room.params,
            current=rs.temp,
            desired=m.setpoint,
            horizon=e.start - t,
            bins=c.bins,
            prior=forecast_prior(t_out - m.setpoint, c.bins, c.forecast_spread),
            energy_weight=c.energy_weight,
            comfort_penalties=(c.penalty_higher * occupant_hours, c.penalty_lower * occupant_hours),
            radiator_power=room.radiator_power,
            vent_conductance=room.vent_conductance,
            band=c.band,
            cpt_dt=c.cpt_dt,
        )
        seed = _query_seed(self.s.seed, self.metrics.advice_count)
        query = build_heating_query(ctx, samples=c.cpt_samples, seed=seed, requester=room.id)
        advice = self.pronouncer.pronounce(query)
        self.metrics.advice_count += 1
        m.advice = advice.action
        log.debug("%s: advice %s (eu=%.3f)", e.meeting, advice.action, advice.expected_utility)

        if advice.action in ("one-radiator", "both-radiators"):
            power = ctx.heat_input(advice.action).power
            m.plan = plan_preheat(e, ctx, m.setpoint, t_out, now=t, levels=(power,))
            if m.plan.shortfall:
                self.metrics.shortfalls += 1
        elif advice.action == "ventilate":
            m.plan = PreheatPlan(t, 0.0, e.start - t)


def _setup(s: Scenario) -> tuple[dict[str, _RoomState], dict[str, list]]:
    rooms = {r.id: _RoomState(r, r.initial_temp) for r in s.rooms}
    for e in sorted(s.calendar, key=lambda e: e.start):
        rooms[e.room].meetings.append(_MeetingState(e))
    overrides: dict[str, list] = {r.id: [] for r in s.rooms}
    for o in s.overrides:
        overrides[o.room].append(o)
    return rooms, overrides


def _advance(rs: _RoomState, cmd: Command, t_out: float, dt: float, metrics: Metrics,
             trace: list[TraceRow], t: float, override: bool) -> None:
    heat = actuate(cmd, rs.temp)
    n_occ = len(rs.occupants)
    trace.append(TraceRow(t, rs.room.id, rs.temp, cmd.setpoint, heat.power, n_occ, override,
                          heat.vent_extra_conductance))
    metrics.heating_energy += heat.power * dt / 3.6e6
    if n_occ:
        metrics.comfort_deviation += abs(rs.temp - cmd.setpoint) * dt / 3600.0
        metrics.occupied_hours += dt / 3600.0
    rs.temp = step(RoomThermalState(rs.temp), rs.room.params, heat, t_out, dt).temperature


def run(
    s: Scenario, c: SimConfig | None = None, pronouncer: Pronouncer | None = None
) -> tuple[Metrics, list[TraceRow]]:
    """Simulate the agent-controlled building over the scenario horizon."""
    c = c or SimConfig()
    if pronouncer is None:
        pronouncer = templates.default_pronouncer(frozenset(c.forbidden_actions) or None)
    metrics = Metrics()
    trace: list[TraceRow] = []
    rooms, overrides = _setup(s)
    weather = _Weather(s)
    badges = _Badges(s, rooms)
    agent = _RoomAgent(s, c, pronouncer, metrics)

    for t, dt in _ticks(s.horizon, c.dt):
        t_out = weather(t)
        badges.advance(t)
        for rs in rooms.values():
            cmd = agent.decide(rs, t, t_out)
            cmd, active = effective_command(cmd, overrides[rs.room.id], t)
            _advance(rs, cmd, t_out, dt, metrics, trace, t, active)
    return metrics, trace


def run_baseline(
    s: Scenario, c: SimConfig | None = None, constant_setpoint: float = 22.0
) -> tuple[Metrics, list[TraceRow]]:
    """Plain thermostat at ``constant_setpoint`` with full radiator power; no agents."""
    c = c or SimConfig()
    metrics = Metrics()
    trace: list[TraceRow] = []
    rooms, _ = _setup(s)
    weather = _Weather(s)
    badges = _Badges(s, rooms)
    for t, dt in _ticks(s.horizon, c.dt):
        t_out = weather(t)
        badges.advance(t)
        for rs in rooms.values():
            _advance(rs, Command(constant_setpoint, rs.room.max_power), t_out, dt, metrics,
                     trace, t, False)
    return metrics, trace


@dataclass(frozen=True)
class Savings:
    percent_energy_saved: float
    comfort_delta: float  # agent minus baseline, degree-hours
    agent_energy: float
    baseline_energy: float

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def compare(agent: Metrics, baseline: Metrics) -> Savings:
    if not baseline.heating_energy > 0:
        raise ZeroDivisionError("baseline used no heating energy; savings are undefined")
    pct = 100.0 * (1.0 - agent.heating_energy / baseline.heating_energy)
    return Savings(pct, agent.comfort_deviation - baseline.comfort_deviation,
                   agent.heating_energy, baseline.heating_energy)


def write_trace(trace: Iterable[TraceRow], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in trace:
            w.writerow([repr(r.time), r.room, repr(r.temp), repr(r.setpoint), repr(r.power),
                        r.occupants, int(r.override_active), repr(r.vent)])


def read_trace(path: str | Path) -> list[TraceRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [
        TraceRow(float(r["time"]), r["room"], float(r["temp"]), float(r["setpoint"]),
                 float(r["power"]), int(r["occupants"]), r["override_active"] == "1",
                 float(r["vent"]))
        for r in rows
    ]


def write_metrics(m: Metrics, path: str | Path) -> None:
    Path(path).write_text(json.dumps(m.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8")


def read_metrics(path: str | Path) -> Metrics:
    return Metrics.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
