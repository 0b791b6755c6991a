"""Scenario files: rooms, people, calendar, badge and override traces, weather.

Times are seconds from the start of the scenario. See ``docs/formats.md``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .agents import (
    RADIATOR_POWER,
    SETBACK,
    VENT_CONDUCTANCE,
    BadgeEvent,
    CalendarEntry,
    ComfortProfile,
    OverrideEvent,
)
from .decision.io import FormatError, check_schema
from .thermal import ThermalParams


class ScenarioError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid scenario: " + "; ".join(problems))


@dataclass(frozen=True)
class Room:
    id: str
    params: ThermalParams = field(default_factory=ThermalParams)
    initial_temp: float = SETBACK
    radiator_power: float = RADIATOR_POWER  # per radiator; every room has two
    vent_conductance: float = VENT_CONDUCTANCE

    @property
    def max_power(self) -> float:
        return 2 * self.radiator_power


@dataclass(frozen=True)
class Scenario:
    rooms: tuple[Room, ...]
    weather: tuple[tuple[float, float], ...]
    horizon: float
    calendar: tuple[CalendarEntry, ...] = ()
    profiles: tuple[ComfortProfile, ...] = ()
    badges: tuple[BadgeEvent, ...] = ()
    overrides: tuple[OverrideEvent, ...] = ()
    seed: int = 0
    description: str = ""

    def outdoor(self, t: float) -> float:
        """Outdoor temperature, linearly interpolated and held flat past the ends."""
        times = [w[0] for w in self.weather]
        temps = [w[1] for w in self.weather]
        return float(np.interp(t, times, temps))

    def profile_map(self) -> dict[str, ComfortProfile]:
        return {p.person: p for p in self.profiles}


def validate_scenario(s: Scenario) -> list[str]:
    """Cross-reference and chronology checks; returns a list of problems."""
    problems = []
    rooms = [r.id for r in s.rooms]
    if len(set(rooms)) != len(rooms):
        problems.append("duplicate room id")
    people = [p.person for p in s.profiles]
    if len(set(people)) != len(people):
        problems.append("duplicate comfort profile")
    room_set, people_set = set(rooms), set(people)

    times = [w[0] for w in s.weather]
    if any(b <= a for a, b in zip(times, times[1:])):
        problems.append("weather trace is not strictly chronological")

    meetings = set()
    for e in s.calendar:
        if e.meeting in meetings:
            problems.append(f"duplicate meeting id {e.meeting!r}")
        meetings.add(e.meeting)
        if e.room not in room_set:
            problems.append(f"meeting {e.meeting!r} references unknown room {e.room!r}")
        for person in e.people:
            if person not in people_set:
                problems.append(f"meeting {e.meeting!r} references unknown person {person!r}")
    by_room: dict[str, list[CalendarEntry]] = {}
    for e in s.calendar:
        by_room.setdefault(e.room, []).append(e)
    for room, entries in by_room.items():
        entries.sort(key=lambda e: e.start)
        for a, b in zip(entries, entries[1:]):
            if b.start < a.end:
                problems.append(f"meetings {a.meeting!r} and {b.meeting!r} overlap in {room!r}")

    for i, b in enumerate(s.badges):
        if b.room not in room_set:
            problems.append(f"badge event {i} references unknown room {b.room!r}")
        if b.person not in people_set:
            problems.append(f"badge event {i} references unknown person {b.person!r}")
    if any(b.time < a.time for a, b in zip(s.badges, s.badges[1:])):
        problems.append("badge trace is not chronological")

    for i, o in enumerate(s.overrides):
        if o.room not in room_set:
            problems.append(f"override {i} references unknown room {o.room!r}")
    if any(b.time < a.time for a, b in zip(s.overrides, s.overrides[1:])):
        problems.append("override trace is not chronological")
    return problems


def scenario_from_dict(obj: dict) -> Scenario:
    check_schema(obj, "scenario.schema.json")
    try:
        rooms = tuple(
            Room(
                r["id"],
                ThermalParams(
                    r.get("resistance", ThermalParams().resistance),
                    r.get("capacitance", ThermalParams().capacitance),
                ),
                float(r.get("initial_temp", SETBACK)),
                float(r.get("radiator_power", RADIATOR_POWER)),
                float(r.get("vent_conductance", VENT_CONDUCTANCE)),
            )
            for r in obj["rooms"]
        )
        s = Scenario(
            rooms=rooms,
            weather=tuple((float(w["time"]), float(w["temp"])) for w in obj["weather"]),
            horizon=float(obj["horizon"]),
            calendar=tuple(
                CalendarEntry(
                    e["meeting"], e["room"], float(e["start"]), float(e["duration"]),
                    tuple((a["person"], a["p"]) for a in e["attendees"]),
                )
                for e in obj.get("calendar", ())
            ),
            profiles=tuple(
                ComfortProfile(p["person"], float(p["preferred"]), float(p.get("weight", 1.0)))
                for p in obj.get("profiles", ())
            ),
            badges=tuple(
                BadgeEvent(float(b["time"]), b["person"], b["room"], b["kind"])
                for b in obj.get("badges", ())
            ),
            overrides=tuple(
                OverrideEvent(float(o["time"]), o["room"], float(o["expiry"]),
                              o.get("power"), o.get("setpoint"))
                for o in obj.get("overrides", ())
            ),
            seed=int(obj.get("seed", 0)),
            description=obj.get("description", ""),
        )
    except ValueError as exc:
        raise ScenarioError([str(exc)]) from None
    problems = validate_scenario(s)
    if problems:
        raise ScenarioError(problems)
    return s


def scenario_to_dict(s: Scenario) -> dict:
    out: dict = {}
    if s.description:
        out["description"] = s.description
    out.update({
        "seed": s.seed,
        "horizon": s.horizon,
        "rooms": [
            {
                "id": r.id,
                "resistance": r.params.resistance,
                "capacitance": r.params.capacitance,
                "initial_temp": r.initial_temp,
                "radiator_power": r.radiator_power,
                "vent_conductance": r.vent_conductance,
            }
            for r in s.rooms
        ],
        "profiles": [
            {"person": p.person, "preferred": p.preferred, "weight": p.weight} for p in s.profiles
        ],
        "calendar": [
            {
                "meeting": e.meeting,
                "room": e.room,
                "start": e.start,
                "duration": e.duration,
                "attendees": [{"person": a, "p": q} for a, q in e.attendees],
            }
            for e in s.calendar
        ],
        "badges": [
            {"time": b.time, "person": b.person, "room": b.room, "kind": b.kind} for b in s.badges
        ],
        "overrides": [
            {"time": o.time, "room": o.room, "expiry": o.expiry,
             **({"power": o.power} if o.power is not None else {"setpoint": o.setpoint})}
            for o in s.overrides
        ],
        "weather": [{"time": t, "temp": v} for t, v in s.weather],
    })
    return out


def load_scenario(path: str | Path) -> Scenario:
    """Read and fully validate a scenario file.

    Raises:
        FileNotFoundError: no such file.
        FormatError: not JSON, or not matching the schema.
        ScenarioError: cross-reference or chronology problems.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from None
    return scenario_from_dict(obj)


def default_week_path() -> Path:
    return Path(str(resources.files("roomdecide.data").joinpath("default_week.json")))


def default_week() -> Scenario:
    return load_scenario(default_week_path())
