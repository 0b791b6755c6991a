"""Regenerate src/roomdecide/data/default_week.json.

One meeting room with two 1000 W radiators, five two-hour meetings in a week,
16 degC setback, outdoor temperature averaging 10 degC with a daily swing.
"""
import json
import math
from pathlib import Path

DAY = 86400
HOUR = 3600

profiles = [
    {"person": "anna", "preferred": 22.0, "weight": 1.0},
    {"person": "bertil", "preferred": 21.0, "weight": 1.0},
    {"person": "cecilia", "preferred": 23.0, "weight": 1.0},
    {"person": "david", "preferred": 21.5, "weight": 1.0},
    {"person": "eva", "preferred": 22.5, "weight": 1.5},
]

# (id, day, start hour, attendees with show-up probability, who actually comes)
meetings = [
    ("mon-planning", 0, 10.0, [("anna", 0.95), ("bertil", 0.9), ("cecilia", 0.85)], None),
    ("tue-review", 1, 13.0, [("anna", 0.9), ("david", 0.8), ("eva", 0.9), ("bertil", 0.7)], None),
    ("wed-design", 2, 9.0, [("cecilia", 0.9), ("david", 0.9), ("eva", 0.85)], None),
    ("thu-budget", 3, 14.0, [("anna", 0.95), ("bertil", 0.9), ("eva", 0.8)], ["anna", "bertil"]),
    ("fri-retro", 4, 10.5, [("bertil", 0.9), ("cecilia", 0.9), ("david", 0.95), ("eva", 0.9)], None),
]

calendar, badges = [], []
arrive = [-120, 0, 60, 180]
depart = [-60, 0, 120, 30]
for mid, day, hour, attendees, came in meetings:
    start = day * DAY + int(hour * HOUR)
    duration = 2 * HOUR
    calendar.append({
        "meeting": mid, "room": "meeting-room", "start": start, "duration": duration,
        "attendees": [{"person": p, "p": q} for p, q in attendees],
    })
    present = came if came is not None else [p for p, _ in attendees]
    for i, person in enumerate(present):
        badges.append({"time": start + arrive[i % 4], "person": person,
                       "room": "meeting-room", "kind": "enter"})
        badges.append({"time": start + duration + depart[i % 4], "person": person,
                       "room": "meeting-room", "kind": "leave"})
badges.sort(key=lambda b: (b["time"], b["person"]))

weather = [
    {"time": h * HOUR, "temp": round(10.0 + 2.5 * math.sin(2 * math.pi * (h - 9) / 24), 2)}
    for h in range(0, 7 * 24 + 1)
]

scenario = {
    "description": "Default week: one meeting room, five two-hour meetings, 10 degC mean outdoor",
    "seed": 7,
    "horizon": 7 * DAY,
    "rooms": [{
        "id": "meeting-room",
        "resistance": 0.025,
        "capacitance": 1.5e6,
        "initial_temp": 16.0,
        "radiator_power": 1000.0,
        "vent_conductance": 50.0,
    }],
    "profiles": profiles,
    "calendar": calendar,
    "badges": badges,
    "overrides": [
        {"time": 1 * DAY + 20 * HOUR, "room": "meeting-room", "expiry": 1 * DAY + 21 * HOUR,
         "power": 0.0},
        {"time": 5 * DAY + 12 * HOUR, "room": "meeting-room", "expiry": 5 * DAY + 14 * HOUR,
         "setpoint": 20.0},
    ],
    "weather": weather,
}

out = Path(__file__).resolve().parents[1] / "src" / "roomdecide" / "data" / "default_week.json"
out.write_text(json.dumps(scenario, indent=1) + "\n", encoding="utf-8")
print(out)
