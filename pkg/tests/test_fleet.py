import numpy as np
import pytest
from hypothesis import given, strategies as st

from evcosim import fleet
from evcosim.fleet import (STOCK_PROTOTYPES, ElectricVehicle, EvPrototype,
                           charge, charging_power, consume, discharge_v2g,
                           sample_fleet, v2g_eligible)


def make_ev(soc=0.5, proto="P1", **kw):
    return ElectricVehicle(id="ev", proto=STOCK_PROTOTYPES[proto], soc=soc,
                           home_edge="h", **kw)


class TestChargingPower:
    def test_flat_below_knee(self):
        assert charging_power(make_ev(0.5), "fast") == 200.0

    def test_continuous_at_knee(self):
        assert charging_power(make_ev(0.8), "fast") == pytest.approx(200.0)

    def test_full_battery_power(self):
        # 3.4 - 3.0 = 0.4 of rated power
        assert charging_power(make_ev(1.0), "fast") == pytest.approx(80.0)

    def test_slow_mode_uses_slow_rating(self):
        assert charging_power(make_ev(0.5), "slow") == 5.98

    @given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    def test_non_increasing_in_soc(self, a, b):
        lo, hi = sorted((a, b))
        assert charging_power(make_ev(hi), "fast") <= \
            charging_power(make_ev(lo), "fast") + 1e-12

    def test_custom_curve_override(self):
        proto = EvPrototype("X", 50.0, 0.2e-3, 100.0, 7.0,
                            charge_curve=((0.0, 1.0), (0.5, 1.0), (1.0, 0.2)))
        ev = ElectricVehicle(id="e", proto=proto, soc=0.75, home_edge="h")
        assert charging_power(ev, "fast") == pytest.approx(100.0 * 0.6)


class TestConsume:
    def test_spec_example(self):
        proto = EvPrototype("T", 100.0, 0.0002, 100.0, 7.0)
        ev = ElectricVehicle(id="e", proto=proto, soc=0.5, home_edge="h")
        consume(ev, 10_000.0)
        assert ev.soc == pytest.approx(0.48)

    def test_zero_distance(self):
        ev = make_ev(0.5)
        used, depleted = consume(ev, 0.0)
        assert ev.soc == 0.5 and used == 0.0 and not depleted

    def test_depletion_clamp(self):
        ev = make_ev(0.001)
        used, depleted = consume(ev, 1e7)
        assert depleted and ev.soc == 0.0
        assert used == pytest.approx(0.001 * 100.0)

    def test_negative_distance_rejected(self):
        with pytest.raises(ValueError):
            consume(make_ev(), -1.0)


class TestV2gEligibility:
    def test_above_floor(self):
        assert v2g_eligible(make_ev(0.8, v2g_floor=0.7))

    def test_below_floor(self):
        assert not v2g_eligible(make_ev(0.69, v2g_floor=0.7))

    def test_exactly_at_floor(self):
        assert v2g_eligible(make_ev(0.7, v2g_floor=0.7))


def test_stock_prototype_table():
    p1 = STOCK_PROTOTYPES["P1"]
    assert (p1.battery_capacity, p1.fast_charge_power, p1.slow_charge_power) \
        == (100.0, 200.0, 5.98)
    assert p1.discharge_rate == pytest.approx(0.159e-3)
    rows = {(p.battery_capacity, round(p.discharge_rate * 1000, 3),
             p.fast_charge_power, p.slow_charge_power)
            for p in STOCK_PROTOTYPES.values()}
    assert (55.9, 0.151, 60.0, 7.0) in rows
    assert (84.0, 0.210, 7.0, 7.0) in rows
    assert (76.8, 0.171, 100.0, 7.0) in rows
    assert (90.3, 0.181, 60.0, 7.0) in rows
    assert (100.0, 0.196, 100.0, 7.0) in rows


def test_range_model():
    ev = make_ev(0.5)  # 50 kWh at 0.159 Wh/m
    assert ev.range_m == pytest.approx(50.0 / 0.159e-3)


@given(st.floats(0.01, 1.0), st.floats(0.1, 200.0), st.floats(1.0, 3600.0))
def test_charge_energy_accounting(soc, power, dt):
    ev = make_ev(soc)
    before = ev.stored_kwh
    grid, battery = charge(ev, power, dt)
    assert ev.stored_kwh == pytest.approx(before + battery, abs=1e-9)
    assert battery == pytest.approx(grid * ev.charge_eff, abs=1e-9)
    assert ev.soc <= 1.0


@given(st.floats(0.01, 1.0), st.floats(0.1, 100.0), st.floats(1.0, 3600.0))
def test_discharge_energy_accounting(soc, power, dt):
    ev = make_ev(soc)
    before = ev.stored_kwh
    grid, battery = discharge_v2g(ev, power, dt)
    assert ev.stored_kwh == pytest.approx(before - battery, abs=1e-9)
    assert grid == pytest.approx(battery * ev.discharge_eff, abs=1e-9)
    assert ev.soc >= 0.0


def test_step_energy_conservation():
    # one EV through a charge, discharge and drive cycle
    ev = make_ev(0.5)
    start = ev.stored_kwh
    _, gained = charge(ev, 100.0, 600.0)
    _, drawn = discharge_v2g(ev, 20.0, 600.0)
    used, _ = consume(ev, 5000.0)
    assert ev.stored_kwh == pytest.approx(start + gained - drawn - used, abs=1e-9)


def test_sample_fleet_ranges():
    rng = np.random.default_rng(1)
    evs = sample_fleet(200, ["e1", "e2"], rng)
    for ev in evs:
        assert 5.0 <= ev.value_of_time <= 10.0
        assert 1.0 <= ev.range_buffer <= 1.2
        assert 0.4 <= ev.slow_threshold <= 0.6
        assert 0.2 <= ev.detour_threshold <= 0.25
        assert 0.65 <= ev.v2g_floor <= 0.75
        assert 0.4 <= ev.soc <= 0.8
        assert ev.home_edge in ("e1", "e2")
    assert {ev.proto.name for ev in evs} == set(STOCK_PROTOTYPES)


def test_json_round_trips(tmp_path):
    protos_obj = fleet.prototypes_to_json_obj(STOCK_PROTOTYPES)
    protos = fleet.prototypes_from_json_obj(protos_obj)
    assert protos["P1"] == STOCK_PROTOTYPES["P1"]
    rng = np.random.default_rng(2)
    evs = sample_fleet(5, ["a"], rng)
    back = fleet.fleet_from_json_obj(fleet.fleet_to_json_obj(evs), protos)
    assert [(e.id, e.soc, e.value_of_time) for e in evs] == \
        [(e.id, e.soc, e.value_of_time) for e in back]
