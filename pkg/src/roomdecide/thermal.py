"""First-order lumped RC model of a room.

The room air and contents form one thermal mass ``C`` (J/K) connected to the
outdoors through a resistance ``R`` (K/W). Radiators add power ``P`` (W);
ventilation adds an extra loss conductance ``G`` (W/K)::

    C dT/dt = P - (T - T_out) * (1/R + G)

Sun, occupants, equipment and radiator losses are not modelled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

T_MIN = -50.0
T_MAX = 60.0

# defaults for a meeting room; invented, override per scenario
DEFAULT_CAPACITANCE = 2.0e6
DEFAULT_RESISTANCE = 1.0e-2

UNREACHABLE = math.inf
J_PER_KWH = 3.6e6


class StabilityError(ValueError):
    """Forward-Euler step too large for the room's time constant."""


def _finite_positive(name: str, value: float) -> None:
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be finite and > 0, got {value!r}")


@dataclass(frozen=True)
class ThermalParams:
    resistance: float = DEFAULT_RESISTANCE    # K/W
    capacitance: float = DEFAULT_CAPACITANCE  # J/K

    def __post_init__(self):
        _finite_positive("resistance", self.resistance)
        _finite_positive("capacitance", self.capacitance)

    def conductance(self, heat: "HeatInput | None" = None) -> float:
        """Total loss conductance to outdoors in W/K."""
        extra = heat.vent_extra_conductance if heat is not None else 0.0
        return 1.0 / self.resistance + extra

    def time_constant(self, heat: "HeatInput | None" = None) -> float:
        return self.capacitance / self.conductance(heat)


@dataclass(frozen=True)
class HeatInput:
    power: float = 0.0                   # W
    vent_extra_conductance: float = 0.0  # W/K

    def __post_init__(self):
        for name in ("power", "vent_extra_conductance"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v!r}")


@dataclass(frozen=True)
class RoomThermalState:
    temperature: float  # degC
    clamped: bool = False

    def __post_init__(self):
        t = self.temperature
        if not math.isfinite(t) or t < T_MIN or t > T_MAX:
            raise ValueError(f"temperature {t!r} outside [{T_MIN}, {T_MAX}] degC")


def steady_state(p: ThermalParams, h: HeatInput, t_out: float) -> float:
    return t_out + h.power / p.conductance(h)


def analytic_temp(p: ThermalParams, t0: float, h: HeatInput, t_out: float, t: float) -> float:
    """Exact temperature after ``t`` seconds of constant input."""
    if t < 0:
        raise ValueError("t must be >= 0")
    k = p.conductance(h)
    t_inf = t_out + h.power / k
    return t_inf + (t0 - t_inf) * math.exp(-t * k / p.capacitance)


def step(
    s: RoomThermalState,
    p: ThermalParams,
    h: HeatInput,
    t_out: float,
    dt: float,
    *,
    exact: bool = False,
) -> RoomThermalState:
    """Advance the room by ``dt`` seconds.

    Uses forward Euler unless ``exact`` is set, in which case the closed-form
    solution is used for the interval. The result is clamped to the physical
    bounds and ``clamped`` records whether that happened.

    Raises:
        StabilityError: if ``dt`` exceeds a tenth of the effective time
            constant (Euler only).
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    k = p.conductance(h)
    if exact:
        t_new = analytic_temp(p, s.temperature, h, t_out, dt)
    else:
        if dt > p.capacitance / k / 10.0:
            raise StabilityError(
                f"dt={dt} s exceeds a tenth of the time constant ({p.capacitance / k:.1f} s)"
            )
        t_new = s.temperature + (dt / p.capacitance) * (h.power - (s.temperature - t_out) * k)
    if t_new < T_MIN or t_new > T_MAX:
        return RoomThermalState(min(max(t_new, T_MIN), T_MAX), clamped=True)
    return RoomThermalState(t_new)


def time_to_target(
    p: ThermalParams, t0: float, target: float, h: HeatInput, t_out: float
) -> float:
    """Seconds until the room, starting at ``t0``, first reaches ``target``.

    Returns ``UNREACHABLE`` (infinity) when the target lies on the far side of
    the steady state, on the wrong side of ``t0``, or exactly at the steady
    state, which is only approached asymptotically.
    """
    if target == t0:
        return 0.0
    t_inf = steady_state(p, h, t_out)
    start_gap = t0 - t_inf
    end_gap = target - t_inf
    if end_gap == 0 or start_gap * end_gap <= 0 or abs(end_gap) >= abs(start_gap):
        return UNREACHABLE
    return p.time_constant(h) * math.log(start_gap / end_gap)


def energy_of_schedule(schedule: Iterable[tuple[float, float]]) -> float:
    """Energy in kWh of a list of ``(power W, duration s)`` segments."""
    total = 0.0
    for power, duration in schedule:
        if duration < 0:
            raise ValueError("durations must be >= 0")
        total += power * duration
    return total / J_PER_KWH
