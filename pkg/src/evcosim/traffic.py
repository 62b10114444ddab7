"""Discrete-time movement kernel.

Every driving EV is advanced once per step: speed from the crash-free
car-following update against its lane leader, position by speed * dt,
plus a gap-acceptance lane change when the current lane is blocking.
Edge transitions feed passing-time observations back into the routing
weights.  Single-threaded and fully deterministic for a fixed RNG.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

from .fleet import ElectricVehicle, consume
from .roadnet import EdgeWeights, RoadNetwork

MIN_GAP = 0.5  # m kept free between bumpers on insertion / lane change


@dataclass
class StepConfig:
    dt: float = 1.0             # s
    reaction_time: float = 1.0  # s
    dawdle_max: float = 0.5     # m/s random speed drop ceiling

    def __post_init__(self):
        if self.dt <= 0 or self.reaction_time < 0 or self.dawdle_max < 0:
            raise ValueError("invalid step configuration")


def safe_speed(leader_speed: float, gap: float, reaction_time: float,
               follower_speed: float, decel: float) -> float:
    """Maximum crash-free speed behind a leader `gap` meters ahead.

    Degenerates to the leader speed when both parties are stationary with
    no reaction time (no closing speed possible).
    """
    denom = (leader_speed + follower_speed) / (2.0 * decel) + reaction_time
    if denom <= 0:
        return max(0.0, leader_speed)
    v = leader_speed + (gap - leader_speed * reaction_time) / denom
    return max(0.0, v)


def step_speed(v: float, v_max: float, accel: float, dt: float,
               v_safe: float, dawdle: float) -> float:
    """One speed update: accelerate, cap by v_max and v_safe, dawdle."""
    return max(0.0, min(v_max, v + accel * dt, v_safe) - dawdle)


@dataclass
class StepReport:
    arrivals: list[tuple[str, str]] = field(default_factory=list)    # (ev, edge)
    depletions: list[tuple[str, str]] = field(default_factory=list)  # (ev, edge)
    observations: list[tuple[str, float]] = field(default_factory=list)
    inserted: list[str] = field(default_factory=list)
    driving_kwh: float = 0.0
    moved: int = 0


class TrafficWorld:
    """Owns lane occupancy and the per-step movement of driving EVs."""

    def __init__(self, net: RoadNetwork, weights: EdgeWeights,
                 config: StepConfig | None = None):
        self.net = net
        self.weights = weights
        self.config = config or StepConfig()
        self.vehicles: dict[str, ElectricVehicle] = {}
        # (edge, lane) -> vehicle ids ordered rear to front by offset
        self.lanes: dict[tuple[str, int], list[str]] = {}
        self.entry_time: dict[str, float] = {}
        # per-edge FIFO of EVs waiting to start their trip on that edge
        self.pending: dict[str, list[ElectricVehicle]] = {}

    # -- occupancy helpers ----------------------------------------------
    _EMPTY: tuple = ()

    def _lane(self, edge: str, lane: int):
        return self.lanes.get((edge, lane), self._EMPTY)

    def _lane_insert(self, ev: ElectricVehicle) -> None:
        ids = self.lanes.setdefault((ev.edge, ev.lane), [])
        offsets = [self.vehicles[i].offset for i in ids]
        ids.insert(bisect.bisect_left(offsets, ev.offset), ev.id)

    def _lane_remove(self, ev: ElectricVehicle) -> None:
        key = (ev.edge, ev.lane)
        ids = self.lanes[key]
        ids.remove(ev.id)
        if not ids:
            del self.lanes[key]

    def _rear_vehicle(self, edge: str, lane: int) -> ElectricVehicle | None:
        ids = self._lane(edge, lane)
        return self.vehicles[ids[0]] if ids else None

    def _front_gap(self, ev: ElectricVehicle):
        """Gap and speed of the same-lane leader, if any."""
        ids = self._lane(ev.edge, ev.lane)
        i = ids.index(ev.id)
        if i + 1 < len(ids):
            lead = self.vehicles[ids[i + 1]]
            return lead.offset - (ev.offset + ev.proto.length), lead
        return None, None

    # -- insertion -------------------------------------------------------
    def request_insert(self, ev: ElectricVehicle) -> None:
        """Queue an EV for entering the network on its route's first edge."""
        self.pending.setdefault(ev.route[0], []).append(ev)

    def _admission_lane(self, edge_id: str, need: float) -> int | None:
        """Lane on `edge_id` whose rearmost vehicle leaves `need` meters
        free at the edge start; picks the largest rear gap."""
        e = self.net.edges[edge_id]
        best, best_gap = None, -1.0
        for lane in range(e.lane_count):
            rv = self._rear_vehicle(edge_id, lane)
            gap = rv.offset if rv is not None else e.length
            if gap >= need and gap > best_gap:
                best, best_gap = lane, gap
        return best

    def _try_insertions(self, report: StepReport) -> None:
        for edge_id in sorted(self.pending):
            queue = self.pending[edge_id]
            while queue:
                ev = queue[0]
                lane = self._admission_lane(edge_id, ev.proto.length + MIN_GAP)
                if lane is None:
                    break
                queue.pop(0)
                ev.edge, ev.lane, ev.offset, ev.speed = edge_id, lane, 0.0, 0.0
                ev.route_pos = 0
                self.vehicles[ev.id] = ev
                self._lane_insert(ev)
                self.entry_time[ev.id] = self._now
                report.inserted.append(ev.id)
        self.pending = {k: v for k, v in self.pending.items() if v}

    def remove(self, ev: ElectricVehicle) -> None:
        """Take an EV off the network (arrival, depletion, teleport)."""
        if ev.id in self.vehicles:
            self._lane_remove(ev)
            del self.vehicles[ev.id]
            self.entry_time.pop(ev.id, None)
        ev.edge, ev.offset, ev.speed = None, 0.0, 0.0

    # -- stepping ----------------------------------------------------------
    def advance_all(self, t: float, rng: np.random.Generator) -> StepReport:
        """Advance every driving EV by one step starting at time t."""
        cfg = self.config
        report = StepReport()
        self._now = t
        self._try_insertions(report)

        order = [ev_id for key in sorted(self.lanes) for ev_id in self.lanes[key]]
        self._lane_changes(order)

        new_speed: dict[str, float] = {}
        for ev_id in order:
            ev = self.vehicles[ev_id]
            dawdle = float(rng.uniform(0.0, cfg.dawdle_max)) if cfg.dawdle_max > 0 else 0.0
            new_speed[ev_id] = self._plan_speed(ev, dawdle)

        for ev_id in order:
            ev = self.vehicles.get(ev_id)
            if ev is None:
                continue
            self._move(ev, new_speed[ev_id], t, report)
        report.moved = len(order)
        return report

    def _plan_speed(self, ev: ElectricVehicle, dawdle: float) -> float:
        cfg = self.config
        e = self.net.edges[ev.edge]
        v_cap = min(ev.proto.v_max, e.speed_limit)
        gap, lead = self._front_gap(ev)
        if lead is not None:
            v_safe = safe_speed(lead.speed, max(0.0, gap), cfg.reaction_time,
                                ev.speed, ev.proto.decel)
        else:
            v_safe = self._end_constraint(ev, e)
        return step_speed(ev.speed, v_cap, ev.proto.accel, cfg.dt, v_safe, dawdle)

    def _end_constraint(self, ev: ElectricVehicle, e) -> float:
        """Virtual leader for the lane's front vehicle: the rear vehicle on
        the next route edge, or a wall at the edge end when blocked."""
        cfg = self.config
        if ev.route_pos + 1 >= len(ev.route):
            return float("inf")  # arriving on this edge, run to its end
        head = e.length - (ev.offset + ev.proto.length)
        nxt = ev.route[ev.route_pos + 1]
        best_gap, best_speed = None, 0.0
        for lane in range(self.net.edges[nxt].lane_count):
            rv = self._rear_vehicle(nxt, lane)
            gap = head + (rv.offset if rv is not None else self.net.edges[nxt].length)
            if best_gap is None or gap > best_gap:
                best_gap = gap
                best_speed = rv.speed if rv is not None else 0.0
        if best_gap is None or best_gap <= head + ev.proto.length + MIN_GAP:
            # nothing admits us: brake toward a wall at the edge end
            return safe_speed(0.0, max(0.0, head), cfg.reaction_time,
                              ev.speed, ev.proto.decel)
        return safe_speed(best_speed, max(0.0, best_gap), cfg.reaction_time,
                          ev.speed, ev.proto.decel)

    def _lane_changes(self, order: list[str]) -> None:
        """Gap-acceptance lane change for vehicles blocked by their leader."""
        cfg = self.config
        for ev_id in order:
            ev = self.vehicles[ev_id]
            e = self.net.edges[ev.edge]
            if e.lane_count < 2:
                continue
            gap, lead = self._front_gap(ev)
            if lead is None:
                continue
            free = min(ev.proto.v_max, e.speed_limit, ev.speed + ev.proto.accel * cfg.dt)
            blocked = safe_speed(lead.speed, max(0.0, gap), cfg.reaction_time,
                                 ev.speed, ev.proto.decel) < free
            if not blocked:
                continue
            for target in self._adjacent_lanes(ev.lane, e.lane_count):
                if self._lane_change_ok(ev, target, gap):
                    self._lane_remove(ev)
                    ev.lane = target
                    self._lane_insert(ev)
                    break

    @staticmethod
    def _adjacent_lanes(lane: int, count: int):
        return [l for l in (lane + 1, lane - 1) if 0 <= l < count]

    def _lane_change_ok(self, ev: ElectricVehicle, target: int,
                        cur_gap: float) -> bool:
        cfg = self.config
        ids = self._lane(ev.edge, target)
        offsets = [self.vehicles[i].offset for i in ids]
        i = bisect.bisect_left(offsets, ev.offset)
        front = self.vehicles[ids[i]] if i < len(ids) else None
        rear = self.vehicles[ids[i - 1]] if i > 0 else None
        if front is not None:
            fgap = front.offset - (ev.offset + ev.proto.length)
            brake = max(0.0, (ev.speed ** 2 - front.speed ** 2) / (2 * ev.proto.decel))
            if fgap < max(MIN_GAP, ev.speed * cfg.reaction_time + brake) or fgap <= cur_gap:
                return False
        if rear is not None:
            rgap = ev.offset - (rear.offset + rear.proto.length)
            brake = max(0.0, (rear.speed ** 2 - ev.speed ** 2) / (2 * rear.proto.decel))
            if rgap < max(MIN_GAP, rear.speed * cfg.reaction_time + brake):
                return False
        return True

    def _move(self, ev: ElectricVehicle, speed: float, t: float,
              report: StepReport) -> None:
        cfg = self.config
        e = self.net.edges[ev.edge]
        old_offset = ev.offset
        ev.speed = speed
        target = ev.offset + speed * cfg.dt
        distance = 0.0
        in_lane = True

        while True:
            final = ev.route_pos + 1 >= len(ev.route)
            if target < e.length or final:
                new_off = min(target, e.length) if final else target
                distance += new_off - old_offset
                ev.offset = new_off
                break
            nxt = ev.route[ev.route_pos + 1]
            need = ev.proto.length + MIN_GAP \
                + speed * max(cfg.reaction_time, cfg.dt)
            lane = self._admission_lane(nxt, need)
            if lane is None:
                distance += e.length - old_offset
                ev.offset = e.length
                ev.speed = 0.0
                break
            # this edge is fully traversed: observe its passing time, hop on
            distance += e.length - old_offset
            enter = self.entry_time.pop(ev.id, None)
            if enter is not None:
                report.observations.append((ev.edge, (t + cfg.dt) - enter))
            if in_lane:
                self._lane_remove(ev)
                in_lane = False
            target -= e.length
            old_offset = 0.0
            ev.edge, ev.lane, ev.offset = nxt, lane, 0.0
            ev.route_pos += 1
            self.entry_time[ev.id] = t + cfg.dt
            e = self.net.edges[ev.edge]

        if not in_lane:
            self._lane_insert(ev)

        if distance > 0:
            kwh, depleted = consume(ev, distance)
            report.driving_kwh += kwh
            if depleted:
                edge = ev.edge
                self.remove(ev)
                report.depletions.append((ev.id, edge))
                return

        if ev.route_pos + 1 >= len(ev.route) and ev.offset >= e.length:
            enter = self.entry_time.pop(ev.id, None)
            if enter is not None:
                report.observations.append((ev.edge, (t + cfg.dt) - enter))
            edge = ev.edge
            self.remove(ev)
            report.arrivals.append((ev.id, edge))
