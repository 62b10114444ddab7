"""Per-EV choice logic: when to detour for a fast charge, which station
to pick, whether to plug in on arrival, and the low-battery teleport set.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import roadnet
from .fleet import ElectricVehicle
from .roadnet import EdgeWeights, RoadNetwork, Unreachable, path_length, path_time
from .stations import ChargingStation, fcs_arrive, scs_arrive

DEFAULT_NEARBY_M = 10_000.0
DEFAULT_FULL_CHARGE_S = 1800.0


class NoFeasibleFcs(Exception):
    """No nearby, online, reachable fast station: EV drops to low-battery."""


@dataclass
class DecisionContext:
    net: RoadNetwork
    weights: EdgeWeights
    nearby_m: float = DEFAULT_NEARBY_M
    full_charge_s: float = DEFAULT_FULL_CHARGE_S
    algo: str = "dijkstra"
    route_fn: object = None   # optional override, e.g. a CH-backed router

    def fastest(self, origin: str, dest: str) -> list[str]:
        if self.route_fn is not None:
            return self.route_fn(origin, dest)
        return roadnet.route(self.net, origin, dest, self.weights, self.algo)


def remaining_length(net: RoadNetwork, path: list[str]) -> float:
    """Meters to travel beyond the edge the EV currently occupies."""
    return path_length(net, path[1:])


def reachable(ev: ElectricVehicle, origin: str, dest: str,
              ctx: DecisionContext) -> bool:
    """User's reachability judgment: buffered fastest-path length within
    the EV's remaining range."""
    try:
        path = ctx.fastest(origin, dest)
    except Unreachable:
        return False
    return ev.range_buffer * remaining_length(ctx.net, path) <= ev.range_m


def station_score(ev: ElectricVehicle, station: ChargingStation,
                  travel_s: float, full_charge_s: float) -> float:
    """Cost of choosing a station: time valued in $/h plus the bill for a
    full recharge at the station's price."""
    waiting = station.waiting_count()
    time_cost = ev.value_of_time * (travel_s + waiting * full_charge_s) / 3600.0
    refill_kwh = (1.0 - ev.soc) * ev.proto.battery_capacity / ev.charge_eff
    return time_cost + station.upp * refill_kwh


def select_fcs(ev: ElectricVehicle, position: str,
               candidates: list[ChargingStation],
               ctx: DecisionContext) -> tuple[str, list[str]]:
    """Lowest-score nearby/online/reachable FCS and the route to it.

    Ties go to the smallest station id.  Raises NoFeasibleFcs when the
    filtered candidate set is empty.
    """
    have_coords = ctx.net.has_coordinates
    if have_coords:
        pos_xy = ctx.net.edge_midpoint(position)
    best = None
    for st in sorted(candidates, key=lambda s: s.id):
        if st.kind != "fcs" or not st.online:
            continue
        if have_coords:
            sx, sy = ctx.net.edge_midpoint(st.edge)
            if math.hypot(sx - pos_xy[0], sy - pos_xy[1]) >= ctx.nearby_m:
                continue
        try:
            path = ctx.fastest(position, st.edge)
        except Unreachable:
            continue
        if ev.range_buffer * remaining_length(ctx.net, path) > ev.range_m:
            continue
        travel_s = path_time(ctx.net, path[1:], ctx.weights)
        score = station_score(ev, st, travel_s, ctx.full_charge_s)
        if best is None or score < best[0]:
            best = (score, st.id, path)
    if best is None:
        raise NoFeasibleFcs(ev.id)
    return best[1], best[2]


@dataclass
class Departure:
    kind: str                 # 'direct' | 'detour'
    route: list[str]
    fcs: str | None = None
    final_dest: str | None = None


def plan_departure(ev: ElectricVehicle, origin: str, dest: str, strategy: str,
                   fcs_list: list[ChargingStation],
                   ctx: DecisionContext) -> Departure:
    """Departure decision under the active strategy.

    'threshold': detour for a full fast charge when SoC is below the EV's
    detour threshold.  'distance': detour when the destination is judged
    unreachable.  The chosen route never changes mid-way; a detour's
    second leg is planned when the EV leaves the station.
    """
    if strategy == "threshold":
        needs_fcs = ev.soc < ev.detour_threshold
    elif strategy == "distance":
        needs_fcs = not reachable(ev, origin, dest, ctx)
    else:
        raise ValueError(f"unknown departure strategy {strategy!r}")
    if not needs_fcs:
        return Departure("direct", ctx.fastest(origin, dest), final_dest=dest)
    fcs_id, path = select_fcs(ev, origin, fcs_list, ctx)
    return Departure("detour", path, fcs=fcs_id, final_dest=dest)


def on_arrival(ev: ElectricVehicle, scs: ChargingStation | None) -> str:
    """Plug-in decision at the destination: 'charge_slow' or 'park_only'."""
    if scs is None or ev.soc >= ev.slow_threshold:
        return "park_only"
    return "charge_slow" if scs_arrive(scs, ev) == "pile" else "park_only"


@dataclass
class LowBatteryEntry:
    ev_id: str
    t_removed: float
    removal_edge: str
    target_fcs: str
    t_teleport: float


@dataclass
class LowBatterySet:
    """EVs pulled off the road with an empty battery.  Each waits twice
    its normal driving time to the nearest fast station, then materializes
    there and joins the queue."""
    entries: list[LowBatteryEntry] = field(default_factory=list)

    def add(self, ev: ElectricVehicle, t: float, removal_edge: str,
            fcs_list: list[ChargingStation], ctx: DecisionContext) -> LowBatteryEntry | None:
        found = self._nearest(removal_edge, fcs_list, ctx)
        if found is None:
            entry = LowBatteryEntry(ev.id, t, removal_edge, "", t + ctx.full_charge_s)
        else:
            fcs_id, drive_s = found
            entry = LowBatteryEntry(ev.id, t, removal_edge, fcs_id, t + 2.0 * drive_s)
        self.entries.append(entry)
        return entry

    @staticmethod
    def _nearest(edge: str, fcs_list: list[ChargingStation],
                 ctx: DecisionContext) -> tuple[str, float] | None:
        best = None
        for st in sorted(fcs_list, key=lambda s: s.id):
            if not st.online:
                continue
            try:
                path = ctx.fastest(edge, st.edge)
            except Unreachable:
                continue
            drive = path_time(ctx.net, path[1:], ctx.weights)
            if best is None or drive < best[1]:
                best = (st.id, drive)
        return best

    def step(self, t: float, stations: dict[str, ChargingStation],
             evs: dict[str, ElectricVehicle], fcs_list: list[ChargingStation],
             ctx: DecisionContext) -> list[tuple[str, str, str]]:
        """Teleport due entries; returns (ev id, station id, 'pile'|'queued').

        An offline target at teleport time triggers re-selection from the
        original removal point and a timer reset.
        """
        done: list[tuple[str, str, str]] = []
        keep: list[LowBatteryEntry] = []
        for entry in self.entries:
            if t < entry.t_teleport:
                keep.append(entry)
                continue
            st = stations.get(entry.target_fcs)
            if st is None or not st.online:
                found = self._nearest(entry.removal_edge, fcs_list, ctx)
                if found is None:
                    entry.t_teleport = t + ctx.full_charge_s
                else:
                    entry.target_fcs = found[0]
                    entry.t_teleport = t + 2.0 * found[1]
                keep.append(entry)
                continue
            outcome = fcs_arrive(st, evs[entry.ev_id])
            done.append((entry.ev_id, st.id, outcome))
        self.entries = keep
        return done
