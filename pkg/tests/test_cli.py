import json
from pathlib import Path

import pytest

from evcosim.cli import main


@pytest.fixture(scope="module")
def scenario_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli") / "scen"
    assert main(["gen-scenario", "--out", str(d), "--evs", "6",
                 "--days", "1", "--seed", "2"]) == 0
    return d


def test_validate_ok(scenario_dir):
    assert main(["validate", "--scenario", str(scenario_dir)]) == 0


def test_validate_missing_dir_exit_2(tmp_path):
    assert main(["validate", "--scenario", str(tmp_path / "missing")]) == 2


def test_validate_broken_json_exit_2(tmp_path):
    d = tmp_path / "broken"
    d.mkdir()
    (d / "scenario.json").write_text("{nope")
    assert main(["validate", "--scenario", str(d)]) == 2


def test_simulate_round_trip(scenario_dir, tmp_path):
    out = tmp_path / "run"
    code = main(["simulate", "--scenario", str(scenario_dir), "--out", str(out),
                 "--seed", "3", "--days", "0.02", "--no-pdn"])
    assert code == 0
    assert (out / "fcs_load.csv").exists()
    assert (out / "manifest.json").exists()


def test_simulate_strategy_flag(scenario_dir, tmp_path):
    out = tmp_path / "run2"
    code = main(["simulate", "--scenario", str(scenario_dir), "--out", str(out),
                 "--days", "0.01", "--no-pdn", "--strategy", "distance"])
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["strategy"] == "distance"


def test_gen_stations_infers_from_prefix(scenario_dir, tmp_path):
    d = tmp_path / "scen2"
    d.mkdir()
    (d / "network.json").write_text((scenario_dir / "network.json").read_text())
    assert main(["gen-stations", "--scenario", str(d), "--piles", "4"]) == 0
    stations = json.loads((d / "stations.json").read_text())
    fcs = [s for s in stations if s["kind"] == "fcs"]
    assert len(fcs) == 10
    assert all(s["id"].startswith("CS") for s in fcs)
    assert all(s["piles"] == 4 for s in stations)


def test_gen_evs_and_trips(scenario_dir, tmp_path):
    d = tmp_path / "scen3"
    d.mkdir()
    for name in ("network.json", "placemodel.json"):
        (d / name).write_text((scenario_dir / name).read_text())
    assert main(["gen-evs", "--scenario", str(d), "--count", "4",
                 "--seed", "9"]) == 0
    evs = json.loads((d / "evs.json").read_text())
    assert len(evs) == 4
    assert main(["gen-trips", "--scenario", str(d), "--seed", "9",
                 "--days", "2"]) == 0
    chains = json.loads((d / "trips.json").read_text())
    assert len(chains) == 4
    # dwell overflow may truncate a day, but most chains carry 3 trips/day
    assert all(1 <= len(c["trips"]) <= 6 for c in chains)
    assert max(len(c["trips"]) for c in chains) == 6


def test_parallel_command(scenario_dir, tmp_path):
    cases = [{"scenario": str(scenario_dir), "out": str(tmp_path / f"c{i}"),
              "seed": i, "days": 0.01, "pdn": False} for i in range(2)]
    manifest = tmp_path / "cases.json"
    manifest.write_text(json.dumps(cases))
    assert main(["parallel", "--manifest", str(manifest), "--workers", "2"]) == 0
    assert (tmp_path / "c0" / "manifest.json").exists()


def test_parallel_reports_failures(scenario_dir, tmp_path):
    cases = [{"scenario": str(tmp_path / "void"), "out": str(tmp_path / "x"),
              "seed": 0}]
    manifest = tmp_path / "cases.json"
    manifest.write_text(json.dumps(cases))
    assert main(["parallel", "--manifest", str(manifest), "--workers", "1"]) == 3
