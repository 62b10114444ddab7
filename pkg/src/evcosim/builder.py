"""Synthetic scenario generation.

Builds a grid city with dead-end fast-charge stubs, a slow station on
every road edge, a fleet sampled from the stock prototypes, daily trip
chains, and a 33-bus feeder wired to the stations.  Everything is written
as a plain scenario directory consumable by the engine and the CLI.
"""
from __future__ import annotations

import json
import math
from importlib import resources
from pathlib import Path

import numpy as np

from . import fleet, tripgen
from .engine import stream_rng
from .roadnet import RoadNetwork

FCS_STUB_LENGTH = 200.0
DEFAULT_SPEED = 13.89   # m/s, 50 km/h
# grid junctions hosting the ten fast stations
FCS_SPOTS = [(0, 1), (0, 4), (2, 0), (2, 2), (2, 3),
             (2, 5), (3, 1), (3, 4), (5, 0), (5, 3)]


def build_grid_network(rows: int = 6, cols: int = 6, spacing: float = 2000.0,
                       speed: float = DEFAULT_SPEED, lanes: int = 2,
                       fcs_spots: list[tuple[int, int]] | None = None) -> dict:
    """Bidirectional grid with dead-end 'CS<i>' stubs for fast stations."""
    spots = fcs_spots if fcs_spots is not None else FCS_SPOTS[:]
    junctions = [{"id": f"J{r}{c}", "x": c * spacing, "y": r * spacing}
                 for r in range(rows) for c in range(cols)]
    edges = []

    def add_road(a, ax, ay, b, bx, by):
        length = abs(ax - bx) + abs(ay - by)
        edges.append({"id": f"{a}_{b}", "from": a, "to": b, "length_m": length,
                      "speed_mps": speed, "lanes": lanes, "dead_end": False})
        edges.append({"id": f"{b}_{a}", "from": b, "to": a, "length_m": length,
                      "speed_mps": speed, "lanes": lanes, "dead_end": False})

    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                add_road(f"J{r}{c}", c * spacing, r * spacing,
                         f"J{r}{c + 1}", (c + 1) * spacing, r * spacing)
            if r + 1 < rows:
                add_road(f"J{r}{c}", c * spacing, r * spacing,
                         f"J{r + 1}{c}", c * spacing, (r + 1) * spacing)

    for i, (r, c) in enumerate(spots, start=1):
        jid = f"F{i}"
        junctions.append({"id": jid, "x": c * spacing + FCS_STUB_LENGTH,
                          "y": r * spacing + FCS_STUB_LENGTH / 2})
        edges.append({"id": f"CS{i}", "from": f"J{r}{c}", "to": jid,
                      "length_m": FCS_STUB_LENGTH, "speed_mps": speed,
                      "lanes": 1, "dead_end": True})
        edges.append({"id": f"SC{i}", "from": jid, "to": f"J{r}{c}",
                      "length_m": FCS_STUB_LENGTH, "speed_mps": speed,
                      "lanes": 1, "dead_end": False})
    return {"junctions": junctions, "edges": edges}


def infer_stations_from_network(net_obj: dict, fcs_piles: int = 10,
                                scs_piles: int = 10, fcs_upp: float = 1.5,
                                scs_upp: float = 0.5, v2g: bool = True,
                                pdn_buses: list[str] | None = None) -> list[dict]:
    """Station list derived from edge ids: 'CS'-prefixed edges are fast
    stations, every other road edge (stub returns excluded) carries one
    slow station."""
    fcs_edges = [e["id"] for e in net_obj["edges"] if e["id"].startswith("CS")]
    fcs_roads = set(fcs_edges) | {e["id"] for e in net_obj["edges"]
                                  if e["id"].startswith("SC")}
    scs_edges = [e["id"] for e in net_obj["edges"] if e["id"] not in fcs_roads]
    fcs_bus_spread = ["3", "6", "9", "12", "15", "18", "21", "24", "28", "31"]
    buses = pdn_buses or [str(b) for b in range(2, 34)]
    stations = []
    for i, eid in enumerate(sorted(fcs_edges)):
        stations.append({"id": eid, "kind": "fcs", "edge": eid,
                         "piles": fcs_piles, "upp": fcs_upp,
                         "pdn_bus": fcs_bus_spread[i % len(fcs_bus_spread)],
                         "v2g": False})
    for i, eid in enumerate(sorted(scs_edges)):
        stations.append({"id": f"S_{eid}", "kind": "scs", "edge": eid,
                         "piles": scs_piles, "upp": scs_upp,
                         "pdn_bus": buses[i % len(buses)], "v2g": v2g})
    return stations


def build_place_model(net_obj: dict, spacing: float = 2000.0) -> dict:
    """Home, work and other blocks interleave across the whole grid so
    every fast station sees demand from nearby homes; stub edges are left
    uncategorized so trips never end there."""
    cats = ("home", "work", "other")
    categories = {}
    coords = {j["id"]: (j["x"], j["y"]) for j in net_obj["junctions"]}
    for e in net_obj["edges"]:
        eid = e["id"]
        if eid.startswith("CS") or eid.startswith("SC"):
            continue
        (x1, y1), (x2, y2) = coords[e["from"]], coords[e["to"]]
        diagonal = math.floor((x1 + x2 + y1 + y2) / (2.0 * spacing))
        categories[eid] = cats[diagonal % 3]
    return {"categories": categories}


def default_pdn_obj(alpha: float = 0.006, beta: float = 0.3,
                    gamma: float = 10.0, slack_p_max_kw: float = 8000.0,
                    gen_p_max_kw: float = 1500.0,
                    v2g_price: float = 1.0) -> dict:
    """Bundled 33-bus feeder with the scenario's generator fleet."""
    with resources.files("evcosim.data").joinpath("ieee33.json").open() as f:
        obj = json.load(f)
    obj["v2g_price_per_kwh"] = v2g_price
    obj["generators"] = [
        {"id": "slack", "bus": "1", "cost": [alpha, beta, gamma],
         "p_max_kw": slack_p_max_kw, "q_min_kvar": -slack_p_max_kw,
         "q_max_kvar": slack_p_max_kw},
        *[{"id": f"g{b}", "bus": str(b), "cost": [alpha, beta, gamma],
           "p_max_kw": gen_p_max_kw, "q_min_kvar": -gen_p_max_kw,
           "q_max_kvar": gen_p_max_kw} for b in (2, 3, 6, 8)],
    ]
    return obj


def build_scenario(out_dir, n_evs: int = 500, days: int = 1, seed: int = 0,
                   trips_per_day: int = 3,
                   initial_soc: tuple[float, float] = (0.4, 0.8),
                   coefficient_ranges: dict | None = None,
                   fcs_upp: float = 1.5, scs_upp: float = 0.5,
                   fcs_prices: dict[str, float] | None = None,
                   fcs_piles: int = 10, scs_piles: int = 10, v2g: bool = True,
                   v2g_windows: list | None = None,
                   pdn_alpha: float = 0.006,
                   schedule_events: list[dict] | None = None,
                   extra_cfg: dict | None = None) -> Path:
    """Write a complete scenario directory; returns its path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    net_obj = build_grid_network()
    _dump(out / "network.json", net_obj)
    RoadNetwork.from_json(net_obj)  # fail fast on malformed output

    place_obj = build_place_model(net_obj)
    _dump(out / "placemodel.json", place_obj)
    model = tripgen.PlaceModel.from_json_obj(place_obj)

    stations = infer_stations_from_network(net_obj, fcs_piles=fcs_piles,
                                           scs_piles=scs_piles, fcs_upp=fcs_upp,
                                           scs_upp=scs_upp, v2g=v2g)
    for st in stations:
        if fcs_prices and st["id"] in fcs_prices:
            st["upp"] = fcs_prices[st["id"]]
    _dump(out / "stations.json", stations)

    protos = fleet.STOCK_PROTOTYPES
    _dump(out / "prototypes.json", fleet.prototypes_to_json_obj(protos))
    home_edges = sorted(e for e, c in place_obj["categories"].items()
                        if c == "home")
    evs = fleet.sample_fleet(n_evs, home_edges, stream_rng(seed, "fleet"),
                             prototypes=list(protos.values()),
                             initial_soc=initial_soc,
                             coefficient_ranges=coefficient_ranges)
    _dump(out / "evs.json", fleet.fleet_to_json_obj(evs))

    chains = []
    for i, ev in enumerate(evs):
        rng = np.random.default_rng([seed & 0xFFFFFFFF, 0x7472, i])
        chains.append(tripgen.generate_chain(ev.id, ev.home_edge, days, model,
                                             rng, trips_per_day=trips_per_day))
    _dump(out / "trips.json", tripgen.chains_to_json_obj(chains))

    _dump(out / "pdn.json", default_pdn_obj(alpha=pdn_alpha))
    if schedule_events:
        _dump(out / "schedule.json", schedule_events)

    cfg = {
        "name": "grid-city",
        "days": float(days),
        "routing": {"mode": "fastest", "algo": "dijkstra"},
        "departure_strategy": "threshold",
        "v2g": {"enabled": v2g,
                "windows": v2g_windows if v2g_windows is not None
                else [[28800.0, 36000.0], [46800.0, 57600.0]]},
    }
    if extra_cfg:
        for k, v in extra_cfg.items():
            if isinstance(v, dict) and isinstance(cfg.get(k), dict):
                cfg[k].update(v)
            else:
                cfg[k] = v
    _dump(out / "scenario.json", cfg)
    return out


def _dump(path: Path, obj) -> None:
    with open(path, "w") as f:
        json.dump(obj, f, indent=1)
