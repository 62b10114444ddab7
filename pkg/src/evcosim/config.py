"""Scenario directory loading, validation and the per-run case spec."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

from . import fleet, stations as stations_mod, tripgen
from .pdn import PdnCase
from .roadnet import RoadNetwork
from .v2g import V2gWindow


class ConfigError(Exception):
    """Raised with the offending file/field named in the message."""


@dataclass
class CaseSpec:
    scenario: str
    out: str
    seed: int = 0
    days: float | None = None
    dt_traffic: float | None = None
    dt_pdn: float | None = None
    strategy: str | None = None
    v2g: bool = True
    pdn: bool = True
    record_interval: float | None = None
    routing_algo: str | None = None
    label: str = ""

    def to_json_obj(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json_obj(cls, obj: dict) -> "CaseSpec":
        return cls(**obj)


DEFAULTS = {
    "departure_strategy": "threshold",
    "nearby_m": 10_000.0,
    "full_charge_s": 1800.0,
    "record_interval": 60.0,
    "start_weekday": 0,
    "days": 1.0,
    "routing": {"mode": "fastest", "algo": "dijkstra", "ch_rebuild_s": 900.0},
    "traffic": {"dt": 1.0, "reaction_time": 1.0, "dawdle_max": 0.5},
    "pdn": {"dt": 300.0, "enabled": True, "eps": 1e-6, "max_iter": 20000},
    "v2g": {"windows": [[28800.0, 36000.0], [46800.0, 57600.0]],
            "strategy": "proportional", "enabled": True},
}


@dataclass
class Scenario:
    dir: Path
    cfg: dict
    net: RoadNetwork
    protos: dict[str, fleet.EvPrototype]
    evs: list[fleet.ElectricVehicle]
    chains: dict[str, tripgen.TripChain]
    stations: dict[str, stations_mod.ChargingStation]
    pdn_case: PdnCase | None
    schedule: stations_mod.Schedule | None
    windows: V2gWindow
    config_hash: str = ""

    def setting(self, *keys, default=None):
        node = self.cfg
        for k in keys:
            if not isinstance(node, dict) or k not in node:
                return default
            node = node[k]
        return node


def _merged(cfg: dict) -> dict:
    out = json.loads(json.dumps(DEFAULTS))
    for k, v in cfg.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k].update(v)
        else:
            out[k] = v
    return out


def _require(path: Path) -> Path:
    if not path.exists():
        raise ConfigError(f"missing scenario file: {path.name}")
    return path


def load_scenario(scenario_dir) -> Scenario:
    d = Path(scenario_dir)
    if not d.is_dir():
        raise ConfigError(f"scenario directory not found: {d}")
    try:
        with open(_require(d / "scenario.json")) as f:
            cfg = _merged(json.load(f))
    except json.JSONDecodeError as e:
        raise ConfigError(f"scenario.json: invalid JSON ({e})") from None

    try:
        net = RoadNetwork.from_json(_require(d / "network.json"))
    except (KeyError, ValueError) as e:
        raise ConfigError(f"network.json: {e}") from None

    try:
        protos = fleet.load_prototypes(_require(d / "prototypes.json"))
        evs = fleet.load_fleet(_require(d / "evs.json"), protos)
    except KeyError as e:
        raise ConfigError(f"evs.json/prototypes.json: missing field {e}") from None

    try:
        chain_list = tripgen.load_chains(_require(d / "trips.json"))
    except ValueError as e:
        raise ConfigError(f"trips.json: {e}") from None
    chains = {c.ev_id: c for c in chain_list}

    sts = stations_mod.load_stations(_require(d / "stations.json"))

    pdn_path = d / "pdn.json"
    pdn_case = PdnCase.load(pdn_path) if pdn_path.exists() else None

    sched_path = d / "schedule.json"
    schedule = stations_mod.Schedule.load(sched_path) if sched_path.exists() else None

    try:
        windows = V2gWindow.from_json_obj(cfg["v2g"]["windows"])
    except ValueError as e:
        raise ConfigError(f"scenario.json: v2g.windows: {e}") from None

    scenario = Scenario(dir=d, cfg=cfg, net=net, protos=protos, evs=evs,
                        chains=chains, stations=sts, pdn_case=pdn_case,
                        schedule=schedule, windows=windows,
                        config_hash=_hash_dir(d))
    _validate(scenario)
    return scenario


def _hash_dir(d: Path) -> str:
    h = hashlib.sha256()
    for p in sorted(d.glob("*.json")):
        h.update(p.name.encode())
        h.update(p.read_bytes())
    return h.hexdigest()


def _validate(sc: Scenario) -> None:
    edge_ids = set(sc.net.edges)
    for st in sc.stations.values():
        if st.edge not in edge_ids:
            raise ConfigError(f"stations.json: station {st.id} on unknown edge {st.edge}")
    scs_edges: set[str] = set()
    for st in sc.stations.values():
        if st.kind == "scs":
            if st.edge in scs_edges:
                raise ConfigError(f"stations.json: duplicate SCS on edge {st.edge}")
            scs_edges.add(st.edge)
    fcs_edges = {st.edge for st in sc.stations.values() if st.kind == "fcs"}
    if overlap := (scs_edges & fcs_edges):
        raise ConfigError(f"stations.json: edges with both FCS and SCS: {sorted(overlap)}")
    for ev in sc.evs:
        if ev.home_edge not in edge_ids:
            raise ConfigError(f"evs.json: {ev.id} home edge {ev.home_edge} unknown")
        chain = sc.chains.get(ev.id)
        if chain is None:
            raise ConfigError(f"trips.json: no chain for {ev.id}")
        for trip in chain.trips:
            if trip.origin not in edge_ids or trip.dest not in edge_ids:
                raise ConfigError(f"trips.json: {ev.id} references unknown edges")
    if sc.pdn_case is not None:
        buses = {b.id for b in sc.pdn_case.buses}
        for st in sc.stations.values():
            if st.pdn_bus is not None and st.pdn_bus not in buses:
                raise ConfigError(f"stations.json: {st.id} maps to unknown bus {st.pdn_bus}")
    dt = float(sc.setting("traffic", "dt"))
    dt_pdn = float(sc.setting("pdn", "dt"))
    if dt <= 0:
        raise ConfigError("scenario.json: traffic.dt must be > 0")
    if dt_pdn % dt > 1e-9:
        raise ConfigError("scenario.json: pdn.dt must be a multiple of traffic.dt")
    rec = float(sc.setting("record_interval"))
    if rec % dt > 1e-9:
        raise ConfigError("scenario.json: record_interval must be a multiple of traffic.dt")
