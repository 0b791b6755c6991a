from __future__ import annotations

import json

import pytest

from roomdecide.agents import BadgeEvent, CalendarEntry, ComfortProfile, OverrideEvent, negotiate_setpoint
from roomdecide.decision.io import FormatError
from roomdecide.scenario import (
    Room,
    Scenario,
    ScenarioError,
    default_week,
    load_scenario,
    scenario_from_dict,
    scenario_to_dict,
)
from roomdecide.simulator import (
    ConfigError,
    Metrics,
    SimConfig,
    compare,
    load_config,
    read_metrics,
    read_trace,
    run,
    run_baseline,
    write_metrics,
    write_trace,
)
from roomdecide.thermal import ThermalParams

HOUR = 3600.0
ROOM = Room("r1", ThermalParams(0.025, 1.5e6))
PEOPLE = (ComfortProfile("ann", 21.0), ComfortProfile("bob", 23.0), ComfortProfile("cid", 24.0, 2.0))


def _scenario(calendar=(), badges=(), overrides=(), weather=((0.0, 10.0),), horizon=12 * HOUR,
              room=ROOM) -> Scenario:
    return Scenario((room,), tuple(weather), horizon, tuple(calendar), PEOPLE, tuple(badges),
                    tuple(overrides), seed=3)


def _meeting(start=6 * HOUR, who=("ann", "bob", "cid")):
    return CalendarEntry("m1", "r1", start, 2 * HOUR, tuple((p, 0.9) for p in who))


def _visit(start, who, stay=2 * HOUR):
    out = [BadgeEvent(start, p, "r1", "enter") for p in who]
    out += [BadgeEvent(start + stay, p, "r1", "leave") for p in who]
    return sorted(out, key=lambda b: b.time)


def _rows_at(trace, t):
    return [r for r in trace if r.time == t]


@pytest.fixture(scope="module")
def week():
    return default_week()


@pytest.fixture(scope="module")
def week_runs(week):
    return run(week), run_baseline(week)


def test_default_week_loads(week):
    assert len(week.rooms) == 1
    assert week.rooms[0].radiator_power == 1000.0 and week.rooms[0].max_power == 2000.0
    assert len(week.calendar) == 5
    assert all(e.duration == 2 * HOUR for e in week.calendar)
    assert week.seed == 7


def test_scenario_round_trip(week):
    assert scenario_from_dict(json.loads(json.dumps(scenario_to_dict(week)))) == week


def test_unknown_room_in_badge_trace():
    obj = scenario_to_dict(_scenario())
    obj["badges"] = [{"time": 0, "person": "ann", "room": "attic", "kind": "enter"}]
    with pytest.raises(ScenarioError, match="unknown room"):
        scenario_from_dict(obj)


def test_scenario_load_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_scenario(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text('{"rooms": []}', encoding="utf-8")
    with pytest.raises(FormatError):
        load_scenario(bad)
    obj = scenario_to_dict(_scenario(badges=_visit(100.0, ["ann"])))
    obj["badges"].reverse()
    with pytest.raises(ScenarioError, match="chronological"):
        scenario_from_dict(obj)


def test_empty_calendar_relaxes_towards_the_weather():
    s = _scenario(weather=((0.0, 20.0),), horizon=6 * HOUR)
    metrics, trace = run(s)
    assert metrics.advice_count == 0 and metrics.heating_energy == 0.0
    temps = [r.temp for r in trace]
    assert temps[0] == 16.0
    assert all(a < b < 20.0 for a, b in zip(temps, temps[1:]))


def test_zero_horizon():
    metrics, trace = run(_scenario(horizon=0.0))
    assert metrics == Metrics() and trace == []
    assert run_baseline(_scenario(horizon=0.0))[0] == Metrics()


def test_baseline_at_equilibrium_uses_nothing():
    room = Room("r1", ROOM.params, initial_temp=22.0)
    metrics, _ = run_baseline(_scenario(weather=((0.0, 22.0),), room=room), constant_setpoint=22.0)
    assert metrics.heating_energy == 0.0


def test_agent_run_is_deterministic(tmp_path, week):
    for name in ("a", "b"):
        m, trace = run(week)
        write_trace(trace, tmp_path / f"{name}.csv")
        write_metrics(m, tmp_path / f"{name}.json")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_trace_and_metrics_files_round_trip(tmp_path, week_runs):
    (m, trace), _ = week_runs
    write_trace(trace, tmp_path / "t.csv")
    write_metrics(m, tmp_path / "m.json")
    assert read_trace(tmp_path / "t.csv") == trace
    assert read_metrics(tmp_path / "m.json") == m
    header = (tmp_path / "t.csv").read_text().splitlines()[0]
    assert header.startswith("time,room,temp,setpoint,power,occupants,override_active")


def test_nobody_shows_up():
    e = _meeting()
    _, trace = run(_scenario(calendar=[e]))
    agreed = negotiate_setpoint(PEOPLE)
    assert _rows_at(trace, e.start + 240)[0].setpoint == agreed
    assert _rows_at(trace, e.start + 300)[0].setpoint == 16.0
    assert all(r.setpoint == 16.0 for r in trace if r.time >= e.start + 300)


def test_renegotiation_with_a_subset():
    e = _meeting()
    badges = _visit(e.start - 60, ["ann", "bob"])
    _, trace = run(_scenario(calendar=[e], badges=badges))
    before = _rows_at(trace, e.start + 240)[0].setpoint
    after = _rows_at(trace, e.start + 300)[0].setpoint
    assert before == negotiate_setpoint(PEOPLE)
    assert after == negotiate_setpoint(PEOPLE[:2]) == 22.0


def test_unlikely_meetings_are_not_preheated():
    e = CalendarEntry("m1", "r1", 6 * HOUR, 2 * HOUR, (("ann", 0.2), ("bob", 0.2)))
    metrics, _ = run(_scenario(calendar=[e]))
    assert metrics.advice_count == 0


def test_physics_replay(week, week_runs):
    (_, trace), _ = week_runs
    dt = SimConfig().dt
    p = week.rooms[0].params
    for a, b in zip(trace, trace[1:]):
        # the update equation written out, not the library step
        k = 1.0 / p.resistance + a.vent
        expect = a.temp + dt / p.capacitance * (a.power - (a.temp - week.outdoor(a.time)) * k)
        assert b.temp == pytest.approx(expect, abs=1e-12)


def test_overrides_dominate(week, week_runs):
    (_, trace), _ = week_runs
    seen = 0
    for o in week.overrides:
        rows = [r for r in trace if o.time <= r.time < o.expiry]
        assert rows and all(r.override_active for r in rows)
        for r in rows:
            if o.power is not None:
                assert r.power == o.power
            else:
                assert r.setpoint == o.setpoint
            seen += 1
    assert seen > 0
    active = sum(r.override_active for r in trace)
    assert active == seen


def test_power_override_during_preheat():
    e = _meeting()
    plain, trace = run(_scenario(calendar=[e], badges=_visit(e.start, ["ann", "bob", "cid"])))
    heating = [r.time for r in trace if r.power > 0 and r.time < e.start]
    assert heating, "the agent should preheat before the meeting"
    window = OverrideEvent(heating[0], "r1", e.start, power=0.0)
    m2, trace2 = run(_scenario(calendar=[e], badges=_visit(e.start, ["ann", "bob", "cid"]),
                               overrides=[window]))
    assert all(r.power == 0.0 for r in trace2 if window.active(r.time))
    assert m2.heating_energy < plain.heating_energy


def test_preheating_beats_no_preheating(week):
    agent, _ = run(week)
    cold, _ = run(week, SimConfig(preheat=False))
    assert agent.occupied_hours == cold.occupied_hours > 0
    assert agent.comfort_deviation / agent.occupied_hours < cold.comfort_deviation / cold.occupied_hours


def test_agent_uses_less_than_the_baseline(week_runs):
    (agent, _), (base, _) = week_runs
    assert base.heating_energy > agent.heating_energy
    assert agent.advice_count == 5


def test_compare():
    assert compare(Metrics(heating_energy=6.0), Metrics(heating_energy=10.0)).percent_energy_saved == pytest.approx(40.0)
    same = Metrics(heating_energy=3.0, comfort_deviation=1.0)
    s = compare(same, same)
    assert s.percent_energy_saved == 0.0 and s.comfort_delta == 0.0
    with pytest.raises(ZeroDivisionError):
        compare(same, Metrics())


def test_config(tmp_path):
    assert load_config(None) == SimConfig()
    path = tmp_path / "c.json"
    path.write_text(json.dumps(SimConfig(dt=30.0).to_dict()), encoding="utf-8")
    assert load_config(path) == SimConfig(dt=30.0)
    path.write_text('{"dt": 60, "colour": "blue"}', encoding="utf-8")
    with pytest.raises(ConfigError, match="colour"):
        load_config(path)
    with pytest.raises(ConfigError):
        SimConfig(dt=0.0)
    with pytest.raises(ConfigError):
        SimConfig(renegotiation_delay=-1.0)
