"""Command-line entry points.

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import builder, fleet, tripgen
from .config import CaseSpec, ConfigError, load_scenario
from .engine import run_case, stream_rng
from .runner import load_manifest, run_parallel


def _add_simulate(sub):
    p = sub.add_parser("simulate", help="run one case")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--days", type=float, default=None)
    p.add_argument("--dt", type=float, default=None, help="traffic step (s)")
    p.add_argument("--pdn-dt", type=float, default=None, help="grid step (s)")
    p.add_argument("--strategy", choices=["threshold", "distance"], default=None)
    p.add_argument("--no-v2g", action="store_true")
    p.add_argument("--no-pdn", action="store_true")
    p.add_argument("--record-interval", type=float, default=None)
    p.add_argument("--algo", choices=["dijkstra", "astar", "ch"], default=None)


def _spec_from_args(args) -> CaseSpec:
    return CaseSpec(scenario=args.scenario, out=args.out, seed=args.seed,
                    days=args.days, dt_traffic=args.dt, dt_pdn=args.pdn_dt,
                    strategy=args.strategy, v2g=not args.no_v2g,
                    pdn=not args.no_pdn, record_interval=args.record_interval,
                    routing_algo=args.algo)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="evcosim")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_simulate(sub)

    p = sub.add_parser("parallel", help="run a batch of cases")
    p.add_argument("--manifest", required=True, help="cases.json")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("gen-trips", help="generate trips.json for a scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--days", type=int, default=1)
    p.add_argument("--trips-per-day", type=int, default=3)

    p = sub.add_parser("gen-evs", help="sample evs.json and prototypes.json")
    p.add_argument("--scenario", required=True)
    p.add_argument("--count", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--soc-low", type=float, default=0.4)
    p.add_argument("--soc-high", type=float, default=0.8)

    p = sub.add_parser("gen-stations", help="derive stations.json from edge ids")
    p.add_argument("--scenario", required=True)
    p.add_argument("--piles", type=int, default=10)
    p.add_argument("--fcs-upp", type=float, default=1.5)
    p.add_argument("--scs-upp", type=float, default=0.5)
    p.add_argument("--no-v2g", action="store_true")

    p = sub.add_parser("gen-scenario", help="write a complete synthetic scenario")
    p.add_argument("--out", required=True)
    p.add_argument("--evs", type=int, default=500)
    p.add_argument("--days", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("validate", help="check a scenario directory")
    p.add_argument("--scenario", required=True)

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001 - CLI boundary
        print(f"error: {e}", file=sys.stderr)
        return 3


def _dispatch(args) -> int:
    cmd = args.command
    if cmd == "simulate":
        record = run_case(_spec_from_args(args))
        print(f"run complete: {record.out_dir}")
        return 0
    if cmd == "parallel":
        specs = load_manifest(args.manifest)
        results = run_parallel(specs, args.workers)
        failed = [r for r in results if not r.ok]
        for r in results:
            mark = "ok" if r.ok else "FAILED"
            print(f"[{mark}] seed={r.spec.seed} out={r.spec.out}")
        for r in failed:
            print(r.error, file=sys.stderr)
        return 3 if failed else 0
    if cmd == "gen-trips":
        return _gen_trips(args)
    if cmd == "gen-evs":
        return _gen_evs(args)
    if cmd == "gen-stations":
        return _gen_stations(args)
    if cmd == "gen-scenario":
        builder.build_scenario(args.out, n_evs=args.evs, days=args.days,
                               seed=args.seed)
        print(f"scenario written to {args.out}")
        return 0
    if cmd == "validate":
        load_scenario(args.scenario)
        print("scenario ok")
        return 0
    raise ConfigError(f"unknown command {cmd!r}")


def _gen_trips(args) -> int:
    d = Path(args.scenario)
    model = tripgen.PlaceModel.load(d / "placemodel.json")
    protos = fleet.load_prototypes(d / "prototypes.json")
    evs = fleet.load_fleet(d / "evs.json", protos)
    chains = []
    for i, ev in enumerate(evs):
        rng = np.random.default_rng([args.seed & 0xFFFFFFFF, 0x7472, i])
        chains.append(tripgen.generate_chain(ev.id, ev.home_edge, args.days,
                                             model, rng,
                                             trips_per_day=args.trips_per_day))
    with open(d / "trips.json", "w") as f:
        json.dump(tripgen.chains_to_json_obj(chains), f, indent=1)
    print(f"wrote {len(chains)} chains")
    return 0


def _gen_evs(args) -> int:
    d = Path(args.scenario)
    with open(d / "placemodel.json") as f:
        categories = json.load(f)["categories"]
    homes = sorted(e for e, c in categories.items() if c == "home")
    if not homes:
        raise ConfigError("placemodel.json: no 'home' edges to sample from")
    protos = fleet.STOCK_PROTOTYPES
    evs = fleet.sample_fleet(args.count, homes, stream_rng(args.seed, "fleet"),
                             prototypes=list(protos.values()),
                             initial_soc=(args.soc_low, args.soc_high))
    with open(d / "prototypes.json", "w") as f:
        json.dump(fleet.prototypes_to_json_obj(protos), f, indent=1)
    with open(d / "evs.json", "w") as f:
        json.dump(fleet.fleet_to_json_obj(evs), f, indent=1)
    print(f"wrote {len(evs)} EVs")
    return 0


def _gen_stations(args) -> int:
    d = Path(args.scenario)
    with open(d / "network.json") as f:
        net_obj = json.load(f)
    stations = builder.infer_stations_from_network(
        net_obj, fcs_piles=args.piles, scs_piles=args.piles,
        fcs_upp=args.fcs_upp, scs_upp=args.scs_upp, v2g=not args.no_v2g)
    with open(d / "stations.json", "w") as f:
        json.dump(stations, f, indent=1)
    print(f"wrote {len(stations)} stations")
    return 0


if __name__ == "__main__":
    sys.exit(main())
