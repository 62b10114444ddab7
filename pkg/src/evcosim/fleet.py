"""EV data model: battery, charging curve, V2G parameters, behavior knobs.

Consumption is a flat kWh-per-meter draw; charging follows a segmented
power curve that is constant below 80% SoC and decays linearly above it.
Station-side energy is metered at the grid connector, battery-side energy
after the charge/discharge efficiency, and the charge/discharge helpers
return both so callers can keep an exact energy ledger.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np


class EvStatus(enum.Enum):
    DRIVING = "driving"
    PARKING = "parking"
    CHARGING_FAST = "charging_fast"
    CHARGING_SLOW = "charging_slow"
    QUEUED = "queued"
    LOW_BATTERY = "low_battery"


@dataclass(frozen=True)
class EvPrototype:
    name: str
    battery_capacity: float        # kWh
    discharge_rate: float          # kWh per meter
    fast_charge_power: float       # kW at the pile, SoC < 0.8
    slow_charge_power: float       # kW at the pile, SoC < 0.8
    v2g_power: float = 20.0        # kW
    accel: float = 2.6             # m/s^2
    decel: float = 4.5             # m/s^2
    length: float = 5.0            # m
    v_max: float = 55.0            # m/s
    # optional override: sorted (soc, power multiplier) breakpoints
    charge_curve: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        for name in ("battery_capacity", "discharge_rate", "fast_charge_power",
                     "slow_charge_power", "v2g_power", "accel", "decel",
                     "length", "v_max"):
            if getattr(self, name) <= 0:
                raise ValueError(f"prototype {self.name}: {name} must be > 0")


# Six stock prototypes; discharge rate given in Wh/m in source tables and
# converted to kWh/m the same way the JSON loader does.
STOCK_PROTOTYPES: dict[str, EvPrototype] = {
    p.name: p for p in (
        EvPrototype("P1", 100.0, 0.159 / 1000.0, 200.0, 5.98),
        EvPrototype("P2", 55.9, 0.151 / 1000.0, 60.0, 7.0),
        EvPrototype("P3", 84.0, 0.210 / 1000.0, 7.0, 7.0),
        EvPrototype("P4", 76.8, 0.171 / 1000.0, 100.0, 7.0),
        EvPrototype("P5", 90.3, 0.181 / 1000.0, 60.0, 7.0),
        EvPrototype("P6", 100.0, 0.196 / 1000.0, 100.0, 7.0),
    )
}

DEFAULT_EFFICIENCY = 0.95

# behavioral coefficient sampling defaults: (low, high) of uniform draws
COEFFICIENT_RANGES = {
    "value_of_time": (5.0, 10.0),       # $/h
    "range_buffer": (1.0, 1.2),         # reachability safety factor
    "slow_threshold": (0.4, 0.6),       # SoC below which to plug in at an SCS
    "detour_threshold": (0.2, 0.25),    # SoC below which to detour via an FCS
    "v2g_floor": (0.65, 0.75),          # SoC floor for V2G participation
}


@dataclass
class ElectricVehicle:
    id: str
    proto: EvPrototype
    soc: float
    home_edge: str
    value_of_time: float = 7.5
    range_buffer: float = 1.1
    slow_threshold: float = 0.5
    detour_threshold: float = 0.22
    v2g_floor: float = 0.7
    charge_eff: float = DEFAULT_EFFICIENCY
    discharge_eff: float = DEFAULT_EFFICIENCY
    status: EvStatus = EvStatus.PARKING
    edge: str | None = None        # None while off-network (low battery)
    lane: int = 0
    offset: float = 0.0
    speed: float = 0.0
    route: list[str] = field(default_factory=list)
    route_pos: int = 0
    trip_index: int = 0
    target_fcs: str | None = None   # FCS detour in progress
    final_dest: str | None = None   # destination of the active trip

    def __post_init__(self):
        if not 0.0 <= self.soc <= 1.0:
            raise ValueError(f"ev {self.id}: soc must be within [0, 1]")

    @property
    def range_m(self) -> float:
        return self.soc * self.proto.battery_capacity / self.proto.discharge_rate

    @property
    def stored_kwh(self) -> float:
        return self.soc * self.proto.battery_capacity


def charging_power(ev: ElectricVehicle, mode: str) -> float:
    """Pile power in kW for the EV's current SoC ('fast' or 'slow').

    Constant at the rated power below 0.8 SoC, then linear decay to 40%
    of it at SoC 1.0 (continuous at the knee).  A prototype charge-curve
    override replaces the decay shape entirely.
    """
    p0 = ev.proto.fast_charge_power if mode == "fast" else ev.proto.slow_charge_power
    x = ev.soc
    curve = ev.proto.charge_curve
    if curve is not None:
        return p0 * _interp_curve(curve, x)
    if x < 0.8:
        return p0
    # 3.4 - 3x, written around the knee so the curve is exactly
    # continuous at soc = 0.8 in floating point
    return p0 - 3.0 * p0 * (x - 0.8)


def _interp_curve(curve, x):
    socs = [p[0] for p in curve]
    mults = [p[1] for p in curve]
    return float(np.interp(x, socs, mults))


def consume(ev: ElectricVehicle, distance: float) -> tuple[float, bool]:
    """Drain the battery for `distance` meters driven.

    Returns (battery kWh actually consumed, depleted flag).  SoC clamps
    at zero; the flag tells the decision layer to pull the EV into the
    low-battery set.
    """
    if distance < 0:
        raise ValueError("distance must be >= 0")
    need = distance * ev.proto.discharge_rate
    avail = ev.soc * ev.proto.battery_capacity
    used = min(need, avail)
    ev.soc = max(0.0, ev.soc - need / ev.proto.battery_capacity)
    depleted = need >= avail and need > 0
    if depleted:
        ev.soc = 0.0
    return used, depleted


def charge(ev: ElectricVehicle, power_kw: float, dt_s: float) -> tuple[float, float]:
    """Charge at `power_kw` (grid side) for dt_s seconds.

    Returns (grid kWh delivered, battery kWh gained); the step is cut
    short at SoC 1.0 so the two stay exactly proportional by the charge
    efficiency.
    """
    cap = ev.proto.battery_capacity
    gain = power_kw * (dt_s / 3600.0) * ev.charge_eff
    room = (1.0 - ev.soc) * cap
    gain = min(gain, room)
    if gain <= 0:
        return 0.0, 0.0
    ev.soc = min(1.0, ev.soc + gain / cap)
    return gain / ev.charge_eff, gain


def discharge_v2g(ev: ElectricVehicle, power_kw: float, dt_s: float) -> tuple[float, float]:
    """Discharge to the grid at `power_kw` (grid side) for dt_s seconds.

    Returns (grid kWh exported, battery kWh drawn), clamped to the
    battery's remaining energy.
    """
    cap = ev.proto.battery_capacity
    drawn = power_kw * (dt_s / 3600.0) / ev.discharge_eff
    avail = ev.soc * cap
    drawn = min(drawn, avail)
    if drawn <= 0:
        return 0.0, 0.0
    ev.soc = max(0.0, ev.soc - drawn / cap)
    return drawn * ev.discharge_eff, drawn


def v2g_eligible(ev: ElectricVehicle) -> bool:
    """SoC at or above the EV's participation floor.  A dispatcher command
    is still required before any discharge happens."""
    return ev.soc >= ev.v2g_floor


def sample_fleet(n: int, home_edges: list[str], rng: np.random.Generator,
                 prototypes: list[EvPrototype] | None = None,
                 initial_soc: tuple[float, float] = (0.4, 0.8),
                 coefficient_ranges: dict | None = None) -> list[ElectricVehicle]:
    """Draw a fleet with uniform behavioral coefficients and home edges."""
    protos = prototypes or list(STOCK_PROTOTYPES.values())
    ranges = dict(COEFFICIENT_RANGES)
    if coefficient_ranges:
        ranges.update(coefficient_ranges)
    evs = []
    for i in range(n):
        proto = protos[int(rng.integers(len(protos)))]
        coeffs = {k: float(rng.uniform(lo, hi)) for k, (lo, hi) in ranges.items()}
        evs.append(ElectricVehicle(
            id=f"ev{i}",
            proto=proto,
            soc=float(rng.uniform(*initial_soc)),
            home_edge=home_edges[int(rng.integers(len(home_edges)))],
            **coeffs,
        ))
    return evs


# -- JSON round-trip -------------------------------------------------------

def prototypes_to_json_obj(protos: dict[str, EvPrototype]) -> list[dict]:
    out = []
    for p in protos.values():
        d = {"id": p.name, "battery_kwh": p.battery_capacity,
             "discharge_wh_per_m": p.discharge_rate * 1000.0,
             "fast_charge_kw": p.fast_charge_power,
             "slow_charge_kw": p.slow_charge_power,
             "v2g_kw": p.v2g_power, "accel": p.accel, "decel": p.decel,
             "length_m": p.length, "v_max": p.v_max}
        if p.charge_curve is not None:
            d["charge_curve"] = [list(pt) for pt in p.charge_curve]
        out.append(d)
    return out


def prototypes_from_json_obj(obj: list[dict]) -> dict[str, EvPrototype]:
    protos = {}
    for d in obj:
        curve = d.get("charge_curve")
        protos[d["id"]] = EvPrototype(
            name=d["id"], battery_capacity=float(d["battery_kwh"]),
            discharge_rate=float(d["discharge_wh_per_m"]) / 1000.0,
            fast_charge_power=float(d["fast_charge_kw"]),
            slow_charge_power=float(d["slow_charge_kw"]),
            v2g_power=float(d.get("v2g_kw", 20.0)),
            accel=float(d.get("accel", 2.6)), decel=float(d.get("decel", 4.5)),
            length=float(d.get("length_m", 5.0)), v_max=float(d.get("v_max", 55.0)),
            charge_curve=tuple(tuple(pt) for pt in curve) if curve else None)
    return protos


def fleet_to_json_obj(evs: list[ElectricVehicle]) -> list[dict]:
    return [{"id": ev.id, "prototype": ev.proto.name, "soc": ev.soc,
             "home_edge": ev.home_edge, "value_of_time": ev.value_of_time,
             "range_buffer": ev.range_buffer, "slow_threshold": ev.slow_threshold,
             "detour_threshold": ev.detour_threshold, "v2g_floor": ev.v2g_floor,
             "charge_eff": ev.charge_eff, "discharge_eff": ev.discharge_eff}
            for ev in evs]


def fleet_from_json_obj(obj: list[dict],
                        protos: dict[str, EvPrototype]) -> list[ElectricVehicle]:
    return [ElectricVehicle(
        id=d["id"], proto=protos[d["prototype"]], soc=float(d["soc"]),
        home_edge=d["home_edge"], value_of_time=float(d["value_of_time"]),
        range_buffer=float(d["range_buffer"]),
        slow_threshold=float(d["slow_threshold"]),
        detour_threshold=float(d["detour_threshold"]),
        v2g_floor=float(d["v2g_floor"]),
        charge_eff=float(d.get("charge_eff", DEFAULT_EFFICIENCY)),
        discharge_eff=float(d.get("discharge_eff", DEFAULT_EFFICIENCY)),
    ) for d in obj]


def load_prototypes(path) -> dict[str, EvPrototype]:
    with open(path) as f:
        return prototypes_from_json_obj(json.load(f))


def load_fleet(path, protos) -> list[ElectricVehicle]:
    with open(path) as f:
        return fleet_from_json_obj(json.load(f), protos)
