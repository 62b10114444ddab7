import numpy as np
import pytest

from evcosim.tripgen import (DAY_S, PlaceModel, TripChain, Trip, day_type,
                             generate_chain, sample_first_departure,
                             chains_from_json_obj, chains_to_json_obj)


def model(categories=None, **kw):
    cats = categories or {"h1": "home", "h2": "home", "w1": "work",
                          "w2": "work", "o1": "other"}
    return PlaceModel(categories=cats, **kw)


class TestFirstDeparture:
    def test_weekday_mean(self):
        rng = np.random.default_rng(0)
        m = model()
        xs = np.array([sample_first_departure("weekday", rng, m)
                       for _ in range(30_000)]) / 60.0
        expected = 114.54 + 6.63 * 65.76
        assert abs(xs.mean() - expected) / expected < 0.02

    def test_weekend_mean(self):
        rng = np.random.default_rng(1)
        m = model()
        xs = np.array([sample_first_departure("weekend", rng, m)
                       for _ in range(30_000)]) / 60.0
        expected = 197.53 + 3.45 * 84.37
        assert abs(xs.mean() - expected) / expected < 0.02

    def test_support_above_shift(self):
        rng = np.random.default_rng(2)
        m = model()
        for _ in range(500):
            assert sample_first_departure("weekday", rng, m) >= 114.54 * 60.0

    def test_within_day(self):
        rng = np.random.default_rng(3)
        m = model()
        for _ in range(500):
            assert 0 <= sample_first_departure("weekend", rng, m) < DAY_S


def test_day_type_cycle():
    assert [day_type(d) for d in range(8)] == \
        ["weekday"] * 5 + ["weekend"] * 2 + ["weekday"]


class TestGenerateChain:
    def test_single_day_structure(self):
        chain = generate_chain("ev0", "h1", 1, model(), np.random.default_rng(0))
        assert len(chain.trips) == 3
        assert chain.trips[0].origin == "h1"
        assert chain.trips[-1].dest == "h1"

    def test_eight_days_yield_24_trips(self):
        chain = generate_chain("ev0", "h1", 8, model(), np.random.default_rng(1))
        assert len(chain.trips) == 24

    def test_identity_markov_keeps_home(self):
        m = model(transitions={"home": {"home": 1.0},
                               "work": {"home": 1.0},
                               "other": {"home": 1.0}})
        chain = generate_chain("ev0", "h1", 2, m, np.random.default_rng(2))
        for trip in chain.trips:
            assert trip.origin == "h1" and trip.dest == "h1"

    def test_monotone_and_continuous(self):
        for seed in range(20):
            chain = generate_chain("ev0", "h1", 3, model(),
                                   np.random.default_rng(seed))
            chain.validate()

    def test_reproducible(self):
        a = generate_chain("ev0", "h1", 4, model(), np.random.default_rng(5))
        b = generate_chain("ev0", "h1", 4, model(), np.random.default_rng(5))
        assert a.trips == b.trips

    def test_edges_exist_in_model(self):
        m = model()
        known = set(m.categories) | {"h1"}
        chain = generate_chain("ev0", "h1", 5, m, np.random.default_rng(6))
        for trip in chain.trips:
            assert trip.origin in known and trip.dest in known

    def test_truncation_on_tight_day(self):
        # dwell times of ~20 h cannot fit three trips in a day
        m = model(intervals={"home": (72000.0, 10.0), "work": (72000.0, 10.0),
                             "other": (72000.0, 10.0)})
        chain = generate_chain("ev0", "h1", 1, m, np.random.default_rng(7))
        assert 1 <= len(chain.trips) < 3
        chain.validate()


class TestChainValidation:
    def test_rejects_nonmonotone(self):
        with pytest.raises(ValueError):
            TripChain("e", [Trip(10, "a", "b"), Trip(5, "b", "a")]).validate()

    def test_rejects_discontinuous(self):
        with pytest.raises(ValueError):
            TripChain("e", [Trip(1, "a", "b"), Trip(2, "c", "a")]).validate()

    def test_rejects_open_loop(self):
        with pytest.raises(ValueError):
            TripChain("e", [Trip(1, "a", "b"), Trip(2, "b", "c")]).validate()


def test_transition_rows_must_sum_to_one():
    with pytest.raises(ValueError):
        model(transitions={"home": {"home": 0.5, "work": 0.4},
                           "work": {"home": 1.0},
                           "other": {"home": 1.0}})


def test_chain_json_round_trip():
    chain = generate_chain("ev9", "h1", 2, model(), np.random.default_rng(9))
    back = chains_from_json_obj(chains_to_json_obj([chain]))
    assert back[0].ev_id == "ev9"
    assert back[0].trips == chain.trips
