"""Charging stations with distinct fast/slow semantics.

An FCS serves piles first-come-first-served with an unbounded FIFO queue
and EVs leave the moment they are full.  An SCS hands a pile to an
arriving EV for its entire stay (even after reaching full charge); when
all piles are taken, later arrivals park unplugged instead of queueing.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

from .fleet import ElectricVehicle, charge, charging_power


class StationOffline(Exception):
    pass


class UnknownStation(Exception):
    pass


@dataclass
class ChargingStation:
    id: str
    kind: str                  # 'fcs' | 'scs'
    edge: str
    pile_count: int
    upp: float                 # $/kWh user purchase price
    pdn_bus: str | None = None
    online: bool = True
    v2g_enabled: bool = False  # SCS only
    occupants: list[str] = field(default_factory=list)
    queue: deque = field(default_factory=deque)

    def __post_init__(self):
        if self.kind not in ("fcs", "scs"):
            raise ValueError(f"station {self.id}: kind must be fcs or scs")
        if self.pile_count < 0:
            raise ValueError(f"station {self.id}: pile_count must be >= 0")

    @property
    def free_piles(self) -> int:
        return self.pile_count - len(self.occupants)

    def waiting_count(self) -> int:
        return len(self.queue)


@dataclass
class StationStepResult:
    # (ev id, grid kWh, battery kWh) per charging occupant this step
    delivered: list[tuple[str, float, float]] = field(default_factory=list)
    departures: list[str] = field(default_factory=list)   # FCS: finished EVs
    promoted: list[str] = field(default_factory=list)     # FCS: queue -> pile
    load_kw: float = 0.0          # sum of pile powers at step start
    energy_kwh: float = 0.0       # grid-side energy this step
    battery_kwh: float = 0.0      # battery-side energy this step


def fcs_arrive(station: ChargingStation, ev: ElectricVehicle) -> str:
    """Returns 'pile' or 'queued'; offline stations refuse arrivals."""
    if station.kind != "fcs":
        raise ValueError(f"{station.id} is not an FCS")
    if not station.online:
        raise StationOffline(station.id)
    if station.free_piles > 0:
        station.occupants.append(ev.id)
        return "pile"
    station.queue.append(ev.id)
    return "queued"


def fcs_step(station: ChargingStation, evs: dict[str, ElectricVehicle],
             dt: float) -> StationStepResult:
    """Charge piled EVs for dt seconds; full EVs free their pile and the
    queue head takes it within the same step."""
    res = StationStepResult()
    if not station.online:
        return res
    still = []
    dt_h = dt / 3600.0
    for ev_id in station.occupants:
        ev = evs[ev_id]
        # inlined charging_power/charge fast path (equivalence is pinned
        # by tests); prototypes with a custom curve take the slow path
        soc = ev.soc
        proto = ev.proto
        if proto.charge_curve is not None:
            power = charging_power(ev, "fast")
        else:
            p0 = proto.fast_charge_power
            power = p0 if soc < 0.8 else p0 - 3.0 * p0 * (soc - 0.8)
        res.load_kw += power
        grid, battery = charge(ev, power, dt)
        if grid > 0:
            res.delivered.append((ev_id, grid, battery))
            res.energy_kwh += grid
            res.battery_kwh += battery
        if ev.soc >= 1.0:
            res.departures.append(ev_id)
        else:
            still.append(ev_id)
    station.occupants = still
    while station.queue and station.free_piles > 0:
        nxt = station.queue.popleft()
        station.occupants.append(nxt)
        res.promoted.append(nxt)
    return res


def scs_arrive(station: ChargingStation, ev: ElectricVehicle) -> str:
    """Returns 'pile' or 'rejected'; SCS arrivals never queue."""
    if station.kind != "scs":
        raise ValueError(f"{station.id} is not an SCS")
    if station.online and station.free_piles > 0:
        station.occupants.append(ev.id)
        return "pile"
    return "rejected"


def scs_release(station: ChargingStation, ev_id: str) -> None:
    if ev_id in station.occupants:
        station.occupants.remove(ev_id)


def scs_step(station: ChargingStation, evs: dict[str, ElectricVehicle],
             dt: float, v2g_active: bool = False,
             charging: list[str] | None = None) -> StationStepResult:
    """Charge piled EVs for dt seconds.  While a V2G window is active an
    EV only draws power when its SoC is below its participation floor.

    `charging` narrows the sweep to a pre-maintained active subset of the
    occupants (a performance aid for the engine); EVs that finish are
    dropped from that list in place.
    """
    res = StationStepResult()
    if not station.online:
        return res
    pool = station.occupants if charging is None else charging
    finished = []
    dt_h = dt / 3600.0
    for ev_id in pool:
        ev = evs[ev_id]
        soc = ev.soc
        if soc >= 1.0:
            finished.append(ev_id)
            continue
        if v2g_active and soc >= ev.v2g_floor:
            continue
        # inlined charging_power/charge fast path, see fcs_step
        proto = ev.proto
        if proto.charge_curve is not None:
            power = charging_power(ev, "slow")
        else:
            p0 = proto.slow_charge_power
            power = p0 if soc < 0.8 else p0 - 3.0 * p0 * (soc - 0.8)
        res.load_kw += power
        cap = proto.battery_capacity
        eff = ev.charge_eff
        gain = power * dt_h * eff
        room = (1.0 - soc) * cap
        if gain > room:
            gain = room
        if gain <= 0:
            continue
        new_soc = soc + gain / cap
        ev.soc = 1.0 if new_soc > 1.0 else new_soc
        grid = gain / eff
        res.delivered.append((ev_id, grid, gain))
        res.energy_kwh += grid
        res.battery_kwh += gain
        if ev.soc >= 1.0:
            finished.append(ev_id)
    if charging is not None:
        for ev_id in finished:
            charging.remove(ev_id)
    return res


# -- runtime schedule --------------------------------------------------------

ACTIONS = ("set_online", "set_offline", "set_price", "set_piles",
           "set_departure_strategy")


@dataclass(frozen=True)
class ScheduleEvent:
    t: float
    station: str        # station id, or '*' for global events
    action: str
    value: float | str | None = None

    def __post_init__(self):
        if self.action not in ACTIONS:
            raise ValueError(f"unknown schedule action {self.action!r}")


@dataclass
class ScheduleApplication:
    applied: list[ScheduleEvent] = field(default_factory=list)
    # EVs bumped off piles or flushed from queues; the decision layer
    # re-runs station selection for them
    evicted_piled: list[str] = field(default_factory=list)
    flushed_queue: list[str] = field(default_factory=list)
    promoted: list[str] = field(default_factory=list)
    strategy_switch: str | None = None


class Schedule:
    """Timed station events, applied monotonically in time order."""

    def __init__(self, events: list[ScheduleEvent]):
        self.events = sorted(events, key=lambda e: (e.t, e.station, e.action))
        self._next = 0

    @classmethod
    def from_json_obj(cls, obj: list[dict]) -> "Schedule":
        return cls([ScheduleEvent(t=float(d["t"]), station=d.get("station", "*"),
                                  action=d["action"], value=d.get("value"))
                    for d in obj])

    @classmethod
    def load(cls, path) -> "Schedule":
        with open(path) as f:
            return cls.from_json_obj(json.load(f))

    def apply_due(self, stations: dict[str, ChargingStation],
                  t: float) -> ScheduleApplication:
        out = ScheduleApplication()
        while self._next < len(self.events) and self.events[self._next].t <= t:
            ev = self.events[self._next]
            self._next += 1
            self._apply_one(stations, ev, out)
            out.applied.append(ev)
        return out

    @staticmethod
    def _apply_one(stations, event: ScheduleEvent, out: "ScheduleApplication"):
        if event.action == "set_departure_strategy":
            out.strategy_switch = str(event.value)
            return
        st = stations.get(event.station)
        if st is None:
            raise UnknownStation(event.station)
        if event.action == "set_online":
            st.online = True
        elif event.action == "set_offline":
            st.online = False
            if st.kind == "fcs":
                out.flushed_queue.extend(st.queue)
                st.queue.clear()
                out.evicted_piled.extend(st.occupants)
                st.occupants.clear()
        elif event.action == "set_price":
            st.upp = float(event.value)
        elif event.action == "set_piles":
            st.pile_count = int(event.value)
            while len(st.occupants) > st.pile_count:
                out.evicted_piled.append(st.occupants.pop())
            while st.kind == "fcs" and st.queue and st.free_piles > 0:
                nxt = st.queue.popleft()
                st.occupants.append(nxt)
                out.promoted.append(nxt)


def stations_to_json_obj(stations: dict[str, ChargingStation]) -> list[dict]:
    return [{"id": s.id, "kind": s.kind, "edge": s.edge, "piles": s.pile_count,
             "upp": s.upp, "pdn_bus": s.pdn_bus, "v2g": s.v2g_enabled}
            for s in stations.values()]


def stations_from_json_obj(obj: list[dict]) -> dict[str, ChargingStation]:
    stations = {}
    for d in obj:
        stations[d["id"]] = ChargingStation(
            id=d["id"], kind=d["kind"], edge=d["edge"],
            pile_count=int(d["piles"]), upp=float(d["upp"]),
            pdn_bus=d.get("pdn_bus"), v2g_enabled=bool(d.get("v2g", False)))
    return stations


def load_stations(path) -> dict[str, ChargingStation]:
    with open(path) as f:
        return stations_from_json_obj(json.load(f))
