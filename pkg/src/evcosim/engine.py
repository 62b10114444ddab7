"""Co-simulation engine: clock, plugin lifecycle, per-step orchestration
of traffic / stations / decisions, and result recording.

A case is strictly single-threaded and deterministic: one master seed
derives labelled RNG streams, every collection is iterated in a stable
order, and outputs carry no wall-clock state.  The grid optimizer and the
V2G dispatcher ship as built-in plugins; the V2G plugin refuses to run
without the grid plugin.
"""
from __future__ import annotations

import csv
import heapq
import json
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import CaseSpec, ConfigError, Scenario, load_scenario
from .decisions import (DecisionContext, LowBatterySet, NoFeasibleFcs,
                        on_arrival, plan_departure, select_fcs)
from .fleet import ElectricVehicle, EvStatus
from .pdn import DistflowSolver, Infeasible, attach_loads
from .plugins import Plugin, PluginRegistry
from .roadnet import CHOverlay, EdgeWeights, ch_preprocess, route
from .stations import (ChargingStation, StationOffline, fcs_arrive, fcs_step,
                       scs_release, scs_step)
from .traffic import StepConfig, TrafficWorld
from .v2g import allocate, apply_discharge, station_capacity


class EngineError(RuntimeError):
    pass


def stream_rng(seed: int, label: str) -> np.random.Generator:
    """Independent, reproducible RNG stream for one subsystem."""
    return np.random.default_rng([seed & 0xFFFFFFFF, zlib.crc32(label.encode())])


class RoutingService:
    """Routing frontend used by all decisions: live weights for Dijkstra
    and A*, a periodically rebuilt overlay for CH."""

    def __init__(self, net, mode: str, algo: str, ch_rebuild_s: float):
        self.net = net
        self.weights = EdgeWeights(net, mode)
        self.algo = algo
        self.ch_rebuild_s = ch_rebuild_s
        self._overlay: CHOverlay | None = None
        self._overlay_built_at = -1e18

    def maybe_rebuild(self, t: float) -> None:
        if self.algo != "ch":
            return
        stale = t - self._overlay_built_at >= self.ch_rebuild_s
        if self._overlay is None or (self.weights.mode == "fastest" and stale):
            self._overlay = ch_preprocess(self.net, self.weights)
            self._overlay_built_at = t

    def route(self, origin: str, dest: str) -> list[str]:
        if self.algo == "ch":
            if self._overlay is None:
                self.maybe_rebuild(0.0)
            return self._overlay.route(origin, dest)
        return route(self.net, origin, dest, self.weights, self.algo)


@dataclass
class EnergyLedger:
    initial_battery_kwh: float = 0.0
    final_battery_kwh: float = 0.0
    fast_grid_kwh: float = 0.0
    slow_grid_kwh: float = 0.0
    battery_gain_kwh: float = 0.0
    v2g_grid_kwh: float = 0.0
    v2g_battery_kwh: float = 0.0
    driving_kwh: float = 0.0

    def to_json_obj(self) -> dict:
        return dict(self.__dict__)


class RunRecorder:
    """Owns the output directory: headered CSV streams at the recording
    cadence plus the manifest and the final energy ledger."""

    def __init__(self, out_dir: Path, fcs_ids: list[str], scs_ids: list[str]):
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.fcs_ids = fcs_ids
        self.scs_ids = scs_ids
        self._files = []
        self.fcs_csv = self._open("fcs_load.csv", ["t", *fcs_ids, "total"])
        self.scs_csv = self._open(
            "scs_load.csv",
            ["t", *scs_ids, "total_charge_kw", "total_v2g_kw", "total_net_kw"])
        self.ev_csv = self._open(
            "ev_state.csv", ["t", "driving", "parking", "charging_fast",
                             "charging_slow", "queued", "low_battery", "mean_soc"])
        self.fcs_kwh = {s: 0.0 for s in fcs_ids}
        self.scs_kwh = {s: 0.0 for s in scs_ids}
        self.scs_v2g_kwh = {s: 0.0 for s in scs_ids}

    def _open(self, name: str, header: list[str]):
        f = open(self.out / name, "w", newline="")
        self._files.append(f)
        w = csv.writer(f)
        w.writerow(header)
        return w

    def open_stream(self, name: str, header: list[str]):
        return self._open(name, header)

    def flush_loads(self, t_row: float, interval_s: float, evs, counts) -> None:
        k = 3600.0 / interval_s
        fcs_kw = [self.fcs_kwh[s] * k for s in self.fcs_ids]
        self.fcs_csv.writerow(
            [f"{t_row:.1f}", *(f"{v:.6f}" for v in fcs_kw),
             f"{sum(fcs_kw):.6f}"])
        charge = [self.scs_kwh[s] * k for s in self.scs_ids]
        v2g = [self.scs_v2g_kwh[s] * k for s in self.scs_ids]
        net = [c - g for c, g in zip(charge, v2g)]
        self.scs_csv.writerow(
            [f"{t_row:.1f}", *(f"{v:.6f}" for v in net),
             f"{sum(charge):.6f}", f"{sum(v2g):.6f}", f"{sum(net):.6f}"])
        mean_soc = sum(ev.soc for ev in evs) / len(evs) if evs else 0.0
        self.ev_csv.writerow(
            [f"{t_row:.1f}", counts.get(EvStatus.DRIVING, 0),
             counts.get(EvStatus.PARKING, 0),
             counts.get(EvStatus.CHARGING_FAST, 0),
             counts.get(EvStatus.CHARGING_SLOW, 0),
             counts.get(EvStatus.QUEUED, 0),
             counts.get(EvStatus.LOW_BATTERY, 0), f"{mean_soc:.6f}"])
        for d in (self.fcs_kwh, self.scs_kwh, self.scs_v2g_kwh):
            for key in d:
                d[key] = 0.0

    def close(self, manifest: dict, ledger: EnergyLedger) -> None:
        with open(self.out / "manifest.json", "w") as f:
            json.dump(manifest, f, indent=1, sort_keys=True)
        with open(self.out / "energy.json", "w") as f:
            json.dump(ledger.to_json_obj(), f, indent=1, sort_keys=True)
        for fh in self._files:
            fh.close()


class PdnPlugin(Plugin):
    """Solves the distribution network at its own cadence with the
    interval-averaged station loads; V2G capacities become dispatchable
    injections.  Falls back to the linearized model on infeasibility,
    aborts after two consecutive failures."""

    name = "pdn"

    def __init__(self, dt_pdn: float):
        self.step_interval_s = dt_pdn
        self.dt_pdn = dt_pdn

    def init(self, sim: "Simulation") -> None:
        base = sim.scenario.pdn_case
        self.eps = float(sim.scenario.setting("pdn", "eps", default=1e-6))
        self.max_iter = int(sim.scenario.setting("pdn", "max_iter", default=20000))
        self.station_buses = {s.id: s.pdn_bus for s in sim.stations.values()
                              if s.pdn_bus is not None}
        self.v2g_station_ids = sorted(
            s.id for s in sim.stations.values()
            if s.kind == "scs" and s.v2g_enabled and s.pdn_bus is not None
            and sim.run_v2g)
        template = attach_loads(base, {}, self.station_buses,
                                {s: 0.0 for s in self.v2g_station_ids})
        self.case = template
        self.solver = DistflowSolver(template, dt_s=self.dt_pdn, conic=True)
        self.lin_solver = DistflowSolver(template, dt_s=self.dt_pdn, conic=False)
        self.base_p = np.array([b.p_load_kw for b in template.buses])
        self.base_q = np.array([b.q_load_kvar for b in template.buses])
        self.bus_row = {b.id: i for i, b in enumerate(template.buses)}
        self.kwh_acc = {s: 0.0 for s in sim.stations}
        self.failures = 0
        gens = [g.id for g in template.generators]
        buses = [b.id for b in template.buses]
        self.csv = sim.recorder.open_stream(
            "pdn.csv", ["t", "model", "status", "iterations", "objective",
                        "cone_gap", *(f"gen_{g}_kw" for g in gens),
                        *(f"v_{b}" for b in buses),
                        *(f"vcr_{s}_kw" for s in self.v2g_station_ids)])

    def accumulate(self, station_id: str, kwh: float) -> None:
        self.kwh_acc[station_id] += kwh

    def post_step(self, sim: "Simulation", t_end: float) -> None:
        p = self.base_p.copy()
        for sid, kwh in sorted(self.kwh_acc.items()):
            bus = self.station_buses.get(sid)
            if bus is not None and kwh > 0:
                p[self.bus_row[bus]] += kwh * 3600.0 / self.dt_pdn
            self.kwh_acc[sid] = 0.0
        offers = sim.collect_v2g_offers(t_end)
        caps = np.array([offers[s].capacity_kw if s in offers else 0.0
                         for s in self.v2g_station_ids])
        sol = None
        model = "socp"
        try:
            sol = self.solver.solve(p, self.base_q, caps,
                                    max_iter=self.max_iter, eps=self.eps)
        except Infeasible as e:
            sim.log(f"t={t_end:.0f}: conic solve infeasible ({e}); linear fallback")
            model = "linear"
            try:
                sol = self.lin_solver.solve(p, self.base_q, caps,
                                            max_iter=self.max_iter, eps=self.eps)
            except Infeasible as e2:
                self.failures += 1
                model = "failed"
                sim.log(f"t={t_end:.0f}: linear solve infeasible ({e2})")
                if self.failures >= 2:
                    raise EngineError(
                        f"PDN infeasible twice in a row at t={t_end:.0f}: {e2}") from None
        if sol is not None:
            self.failures = 0
        sim.pdn_solution = sol
        sim.current_offers = offers
        row = [f"{t_end:.1f}", model]
        if sol is None:
            row += ["failed", 0, "", "", *[""] * (len(self.bus_row)
                    + len(self.case.generators) + len(self.v2g_station_ids))]
        else:
            row += [sol.status, sol.iterations, f"{sol.objective:.6f}",
                    f"{sol.cone_gap:.3e}"]
            row += [f"{sol.gen_p_kw[g.id]:.6f}" for g in self.case.generators]
            row += [f"{sol.bus_v[b.id]:.8f}" for b in self.case.buses]
            row += [f"{sol.v2g_p_kw.get(s, 0.0):.6f}" for s in self.v2g_station_ids]
        self.csv.writerow(row)


class V2gPlugin(Plugin):
    """Turns the grid's dispatched V2G power into per-EV allocations for
    the next interval."""

    name = "v2g"
    dependencies = ("pdn",)

    def __init__(self, dt_pdn: float, strategy: str = "proportional"):
        self.step_interval_s = dt_pdn
        self.dt_pdn = dt_pdn
        self.strategy = strategy

    def init(self, sim: "Simulation") -> None:
        self.csv = sim.recorder.open_stream(
            "v2g.csv", ["t", "station", "capacity_kw", "dispatched_kw",
                        "allocated_kw", "delivered_prev_kw", "participants"])
        self.delivered_acc = {s.id: 0.0 for s in sim.stations.values()
                              if s.kind == "scs"}

    def accumulate(self, station_id: str, kwh: float) -> None:
        self.delivered_acc[station_id] += kwh

    def post_step(self, sim: "Simulation", t_end: float) -> None:
        sol = sim.pdn_solution
        allocations = {}
        for sid, offer in sorted(sim.current_offers.items()):
            dispatched = 0.0
            if sol is not None:
                # the optimizer may carry solver-tolerance dust past the
                # box bounds; the dispatcher assures 0 <= P <= capacity
                dispatched = min(max(sol.v2g_p_kw.get(sid, 0.0), 0.0),
                                 offer.capacity_kw)
            allocs = allocate(offer, dispatched, self.strategy)
            if dispatched > 0:
                allocations[sid] = (allocs, dict(offer.participants))
            delivered = self.delivered_acc.get(sid, 0.0) * 3600.0 / self.dt_pdn
            self.delivered_acc[sid] = 0.0
            self.csv.writerow([f"{t_end:.1f}", sid, f"{offer.capacity_kw:.9f}",
                               f"{dispatched:.9f}",
                               f"{sum(kw for _, kw in allocs):.9f}",
                               f"{delivered:.6f}", len(offer.participants)])
        touched = set(allocations) | set(sim.active_allocations)
        sim.active_allocations = allocations
        for sid in sorted(touched):
            sim.rebuild_scs_charging(sid)


@dataclass
class RunRecord:
    out_dir: Path
    manifest: dict
    ledger: dict


class Simulation:
    def __init__(self, scenario: Scenario, spec: CaseSpec):
        self.scenario = scenario
        self.spec = spec
        cfg = scenario.setting

        self.dt = float(spec.dt_traffic or cfg("traffic", "dt"))
        self.dt_pdn = float(spec.dt_pdn or cfg("pdn", "dt"))
        self.days = float(spec.days if spec.days is not None else cfg("days"))
        self.record_interval = float(spec.record_interval
                                     or cfg("record_interval"))
        self.strategy = spec.strategy or cfg("departure_strategy")
        if self.strategy not in ("threshold", "distance"):
            raise ConfigError(f"departure strategy {self.strategy!r} unknown")
        self.run_pdn = bool(spec.pdn and cfg("pdn", "enabled")
                            and scenario.pdn_case is not None)
        self.run_v2g = bool(spec.v2g and cfg("v2g", "enabled") and self.run_pdn)
        if round(self.dt_pdn / self.dt) != self.dt_pdn / self.dt:
            raise ConfigError("pdn.dt must be an integer multiple of traffic.dt")

        algo = spec.routing_algo or cfg("routing", "algo")
        self.routing = RoutingService(scenario.net, cfg("routing", "mode"),
                                      algo, float(cfg("routing", "ch_rebuild_s")))
        self.ctx = DecisionContext(
            net=scenario.net, weights=self.routing.weights,
            nearby_m=float(cfg("nearby_m")),
            full_charge_s=float(cfg("full_charge_s")),
            route_fn=self.routing.route)

        self.world = TrafficWorld(
            scenario.net, self.routing.weights,
            StepConfig(dt=self.dt,
                       reaction_time=float(cfg("traffic", "reaction_time")),
                       dawdle_max=float(cfg("traffic", "dawdle_max"))))
        self.evs: dict[str, ElectricVehicle] = {ev.id: ev for ev in scenario.evs}
        self.stations: dict[str, ChargingStation] = scenario.stations
        self.scs_by_edge = {s.edge: s.id for s in self.stations.values()
                            if s.kind == "scs"}
        self.fcs_list = [self.stations[k] for k in sorted(self.stations)
                         if self.stations[k].kind == "fcs"]
        self.fcs_by_edge = {s.edge: s.id for s in self.fcs_list}
        self.windows = scenario.windows
        self.schedule = scenario.schedule
        self.lowbat = LowBatterySet()
        self.ledger = EnergyLedger()
        self.rng_dawdle = stream_rng(spec.seed, "dawdle")
        self.scs_charging: dict[str, list[str]] = {}
        self.active_fcs: set[str] = set()
        self.active_allocations: dict = {}
        self.pdn_solution = None
        self.current_offers: dict = {}
        self._log_lines: list[str] = []
        self._departures: list[tuple[float, int, str]] = []

        fcs_ids = sorted(s.id for s in self.stations.values() if s.kind == "fcs")
        scs_ids = sorted(s.id for s in self.stations.values() if s.kind == "scs")
        self.recorder = RunRecorder(Path(spec.out), fcs_ids, scs_ids)

        self.plugins = PluginRegistry()
        if self.run_pdn:
            self.pdn_plugin = PdnPlugin(self.dt_pdn)
            self.plugins.register(self.pdn_plugin)
            if self.run_v2g:
                self.v2g_plugin = V2gPlugin(self.dt_pdn, cfg("v2g", "strategy"))
                self.plugins.register(self.v2g_plugin)

    # -- helpers ------------------------------------------------------------
    def log(self, msg: str) -> None:
        self._log_lines.append(msg)

    def register_plugin(self, plugin: Plugin) -> None:
        self.plugins.register(plugin)

    def window_active(self, t: float) -> bool:
        return self.run_v2g and self.windows.active(t)

    def collect_v2g_offers(self, t: float) -> dict:
        if not self.run_v2g:
            return {}
        active = self.windows.active(t)
        offers = {}
        for sid in sorted(self.stations):
            st = self.stations[sid]
            if st.kind == "scs" and st.v2g_enabled and st.pdn_bus is not None:
                offer = station_capacity(st, self.evs, active)
                if offer.capacity_kw > 0:
                    offers[sid] = offer
        return offers

    def rebuild_scs_charging(self, sid: str) -> None:
        """Recompute which piled EVs may draw power at an SCS.  EVs with a
        live discharge allocation are excluded (charging and discharging
        are mutually exclusive within an interval); the per-step window
        gate stays inside scs_step so gated EVs resume on their own."""
        st = self.stations[sid]
        allocated = set()
        if sid in self.active_allocations:
            allocated = {e for e, kw in self.active_allocations[sid][0] if kw > 0}
        lst = [e for e in st.occupants
               if self.evs[e].soc < 1.0 and e not in allocated]
        if lst:
            self.scs_charging[sid] = lst
        else:
            self.scs_charging.pop(sid, None)

    def _plug_in(self, ev: ElectricVehicle, sid: str) -> None:
        if ev.soc < 1.0:
            self.scs_charging.setdefault(sid, []).append(ev.id)

    def _unplug(self, ev: ElectricVehicle, sid: str) -> None:
        scs_release(self.stations[sid], ev.id)
        lst = self.scs_charging.get(sid)
        if lst and ev.id in lst:
            lst.remove(ev.id)
            if not lst:
                del self.scs_charging[sid]

    # -- lifecycle ------------------------------------------------------------
    def _init_state(self) -> None:
        self._t = 0.0
        for ev in self.scenario.evs:
            ev.edge = ev.home_edge
            ev.status = EvStatus.PARKING
            scs_id = self.scs_by_edge.get(ev.home_edge)
            scs = self.stations.get(scs_id) if scs_id else None
            if on_arrival(ev, scs) == "charge_slow":
                ev.status = EvStatus.CHARGING_SLOW
                self._plug_in(ev, scs_id)
            chain = self.scenario.chains[ev.id]
            if chain.trips:
                heapq.heappush(self._departures,
                               (chain.trips[0].t, ev.trip_index, ev.id))
            self.ledger.initial_battery_kwh += ev.stored_kwh

    # -- decision handlers ----------------------------------------------------
    def _handle_departures(self, t: float) -> None:
        while self._departures and self._departures[0][0] <= t:
            _, trip_idx, ev_id = heapq.heappop(self._departures)
            ev = self.evs[ev_id]
            if ev.trip_index != trip_idx or ev.status not in (
                    EvStatus.PARKING, EvStatus.CHARGING_SLOW):
                continue
            trip = self.scenario.chains[ev_id].trips[trip_idx]
            origin = ev.edge or trip.origin
            if ev.status == EvStatus.CHARGING_SLOW:
                sid = self.scs_by_edge.get(origin)
                if sid:
                    self._unplug(ev, sid)
            ev.final_dest = trip.dest
            try:
                dep = plan_departure(ev, origin, trip.dest, self.strategy,
                                     self.fcs_list, self.ctx)
            except NoFeasibleFcs:
                self._to_low_battery(ev, t, origin)
                continue
            ev.route = dep.route
            ev.route_pos = 0
            ev.target_fcs = dep.fcs
            ev.status = EvStatus.DRIVING
            self.world.request_insert(ev)

    def _handle_arrival(self, ev_id: str, edge: str, t: float) -> None:
        ev = self.evs[ev_id]
        ev.edge = edge
        if ev.target_fcs is not None:
            st = self.stations[ev.target_fcs]
            try:
                outcome = fcs_arrive(st, ev)
            except StationOffline:
                self._reselect_fcs(ev, edge, t)
                return
            ev.status = (EvStatus.CHARGING_FAST if outcome == "pile"
                         else EvStatus.QUEUED)
            self.active_fcs.add(st.id)
            return
        # trip complete
        sid = self.scs_by_edge.get(edge)
        scs = self.stations.get(sid) if sid else None
        if on_arrival(ev, scs) == "charge_slow":
            ev.status = EvStatus.CHARGING_SLOW
            self._plug_in(ev, sid)
        else:
            ev.status = EvStatus.PARKING
        ev.trip_index += 1
        ev.target_fcs = None
        ev.final_dest = None
        chain = self.scenario.chains[ev_id]
        if ev.trip_index < len(chain.trips):
            heapq.heappush(self._departures,
                           (chain.trips[ev.trip_index].t, ev.trip_index, ev_id))

    def _reselect_fcs(self, ev: ElectricVehicle, edge: str, t: float) -> None:
        try:
            fcs_id, path = select_fcs(ev, edge, self.fcs_list, self.ctx)
        except NoFeasibleFcs:
            self._to_low_battery(ev, t, edge)
            return
        ev.target_fcs = fcs_id
        ev.route = path
        ev.route_pos = 0
        ev.status = EvStatus.DRIVING
        self.world.request_insert(ev)

    def _to_low_battery(self, ev: ElectricVehicle, t: float, edge: str) -> None:
        ev.status = EvStatus.LOW_BATTERY
        ev.edge = None
        ev.target_fcs = None
        self.lowbat.add(ev, t, edge, self.fcs_list, self.ctx)

    def _depart_fcs(self, ev: ElectricVehicle, st: ChargingStation, t: float) -> None:
        ev.target_fcs = None
        dest = ev.final_dest
        if dest is None or dest == st.edge:
            self._handle_arrival(ev.id, st.edge, t)
            return
        ev.edge = st.edge
        ev.route = self.ctx.fastest(st.edge, dest)
        ev.route_pos = 0
        ev.status = EvStatus.DRIVING
        self.world.request_insert(ev)

    def _apply_schedule(self, t: float) -> None:
        if self.schedule is None:
            return
        app = self.schedule.apply_due(self.stations, t)
        if app.strategy_switch:
            if app.strategy_switch not in ("threshold", "distance"):
                raise ConfigError(
                    f"schedule strategy {app.strategy_switch!r} unknown")
            self.strategy = app.strategy_switch
        for ev_id in app.promoted:
            self.evs[ev_id].status = EvStatus.CHARGING_FAST
        for ev_id in app.flushed_queue + app.evicted_piled:
            ev = self.evs[ev_id]
            if ev.status in (EvStatus.QUEUED, EvStatus.CHARGING_FAST):
                self._reselect_fcs(ev, ev.edge, t)
            elif ev.status == EvStatus.CHARGING_SLOW:
                sid = self.scs_by_edge.get(ev.edge)
                if sid:
                    self._unplug(ev, sid)
                ev.status = EvStatus.PARKING

    # -- main loop --------------------------------------------------------------
    def run(self) -> RunRecord:
        self._init_state()
        for plugin in self.plugins.ordered():
            plugin.init(self)
        steps = int(round(self.days * 86400.0 / self.dt))
        pdn_steps = max(1, int(round(self.dt_pdn / self.dt)))
        rec_steps = max(1, int(round(self.record_interval / self.dt)))
        order = self.plugins.ordered()
        intervals = [max(1, int(round((p.step_interval_s or self.dt) / self.dt)))
                     for p in order]

        for k in range(steps):
            t = k * self.dt
            self._t = t
            self.routing.maybe_rebuild(t)
            for p, iv in zip(order, intervals):
                if k % iv == 0:
                    p.pre_step(self, t)

            report = self.world.advance_all(t, self.rng_dawdle)
            for edge, seconds in report.observations:
                self.routing.weights.observe(edge, seconds)
            self.ledger.driving_kwh += report.driving_kwh

            self._step_stations(t)
            self._step_v2g(t)

            self._apply_schedule(t)
            for ev_id, edge in report.arrivals:
                self._handle_arrival(ev_id, edge, t)
            for ev_id, edge in report.depletions:
                self._to_low_battery(self.evs[ev_id], t, edge)
            self._handle_departures(t)
            for ev_id, sid, outcome in self.lowbat.step(
                    t, self.stations, self.evs, self.fcs_list, self.ctx):
                ev = self.evs[ev_id]
                ev.edge = self.stations[sid].edge
                ev.target_fcs = sid
                ev.status = (EvStatus.CHARGING_FAST if outcome == "pile"
                             else EvStatus.QUEUED)
                self.active_fcs.add(sid)

            for p, iv in zip(order, intervals):
                if (k + 1) % iv == 0:
                    p.post_step(self, t + self.dt)
            if (k + 1) % rec_steps == 0:
                counts: dict = {}
                for ev in self.evs.values():
                    counts[ev.status] = counts.get(ev.status, 0) + 1
                self.recorder.flush_loads((k + 1) * self.dt - self.record_interval,
                                          self.record_interval,
                                          list(self.evs.values()), counts)

        for ev in self.evs.values():
            self.ledger.final_battery_kwh += ev.stored_kwh
        manifest = {
            "seed": self.spec.seed, "label": self.spec.label,
            "scenario": str(self.scenario.dir), "days": self.days,
            "dt_traffic": self.dt, "dt_pdn": self.dt_pdn,
            "strategy": self.strategy, "v2g": self.run_v2g,
            "pdn": self.run_pdn, "record_interval": self.record_interval,
            "config_hash": self.scenario.config_hash, "version": __version__,
        }
        self.recorder.close(manifest, self.ledger)
        if self._log_lines:
            (self.recorder.out / "engine.log").write_text(
                "\n".join(self._log_lines) + "\n")
        return RunRecord(self.recorder.out, manifest, self.ledger.to_json_obj())

    def _step_stations(self, t: float) -> None:
        done_fcs = []
        for sid in sorted(self.active_fcs):
            st = self.stations[sid]
            res = fcs_step(st, self.evs, self.dt)
            if res.energy_kwh > 0:
                self.recorder.fcs_kwh[sid] += res.energy_kwh
                self.ledger.fast_grid_kwh += res.energy_kwh
                self.ledger.battery_gain_kwh += res.battery_kwh
                if self.run_pdn:
                    self.pdn_plugin.accumulate(sid, res.energy_kwh)
            for ev_id in res.promoted:
                self.evs[ev_id].status = EvStatus.CHARGING_FAST
            for ev_id in res.departures:
                self._depart_fcs(self.evs[ev_id], st, t)
            if not st.occupants and not st.queue:
                done_fcs.append(sid)
        for sid in done_fcs:
            self.active_fcs.discard(sid)

        window = self.window_active(t)
        for sid in sorted(self.scs_charging):
            st = self.stations[sid]
            res = scs_step(st, self.evs, self.dt,
                           v2g_active=window and st.v2g_enabled,
                           charging=self.scs_charging[sid])
            if not self.scs_charging.get(sid):
                self.scs_charging.pop(sid, None)
            if res.energy_kwh > 0:
                self.recorder.scs_kwh[sid] += res.energy_kwh
                self.ledger.slow_grid_kwh += res.energy_kwh
                self.ledger.battery_gain_kwh += res.battery_kwh
                if self.run_pdn:
                    self.pdn_plugin.accumulate(sid, res.energy_kwh)

    def _step_v2g(self, t: float) -> None:
        if not self.active_allocations or not self.windows.active(t):
            return
        for sid in sorted(self.active_allocations):
            allocs, rated = self.active_allocations[sid]
            st = self.stations[sid]
            res = apply_discharge(allocs, st, self.evs, rated, self.dt)
            if res.grid_kwh > 0:
                self.recorder.scs_v2g_kwh[sid] += res.grid_kwh
                self.ledger.v2g_grid_kwh += res.grid_kwh
                self.ledger.v2g_battery_kwh += res.battery_kwh
                if self.run_v2g:
                    self.v2g_plugin.accumulate(sid, res.grid_kwh)


def run_case(spec: CaseSpec) -> RunRecord:
    """Load the scenario, run one deterministic case, write its record."""
    scenario = load_scenario(spec.scenario)
    return Simulation(scenario, spec).run()
