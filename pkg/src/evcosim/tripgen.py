"""Stochastic daily trip chains.

First departures of a day are Gamma-distributed (shifted, minute-valued
parameters), later departures add a dwell interval drawn per place
category, and destinations follow a per-category Markov transition.  The
last trip of the whole chain closes back to the EV's home edge.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

LOG = logging.getLogger(__name__)

DAY_S = 86400.0

# (shape, scale, shift) with shape-scale Gamma in minutes
FIRST_DEPARTURE = {
    "weekday": (6.63, 65.76, 114.54),
    "weekend": (3.45, 84.37, 197.53),
}

# dwell time before the next trip, per category: (mean s, sd s)
DEFAULT_INTERVALS = {
    "home": (4 * 3600.0, 3600.0),
    "work": (8 * 3600.0, 3600.0),
    "other": (1.5 * 3600.0, 1800.0),
}

DEFAULT_TRANSITIONS = {
    "home": {"home": 0.0, "work": 0.8, "other": 0.2},
    "work": {"home": 0.3, "work": 0.0, "other": 0.7},
    "other": {"home": 0.6, "work": 0.2, "other": 0.2},
}


class GenerationOverflow(Exception):
    pass


@dataclass(frozen=True)
class Trip:
    t: float         # departure, seconds since midnight of day 0
    origin: str
    dest: str


@dataclass
class TripChain:
    ev_id: str
    trips: list[Trip]

    def validate(self) -> None:
        ts = [tr.t for tr in self.trips]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError(f"{self.ev_id}: departures not strictly increasing")
        for a, b in zip(self.trips, self.trips[1:]):
            if a.dest != b.origin:
                raise ValueError(f"{self.ev_id}: chain not continuous")
        if self.trips and self.trips[-1].dest != self.trips[0].origin:
            raise ValueError(f"{self.ev_id}: chain does not close to origin")


@dataclass
class PlaceModel:
    """Edge categories plus the Markov/interval machinery built on them."""
    categories: dict[str, str]
    transitions: dict[str, dict[str, float]] = field(
        default_factory=lambda: {k: dict(v) for k, v in DEFAULT_TRANSITIONS.items()})
    intervals: dict[str, tuple[float, float]] = field(
        default_factory=lambda: dict(DEFAULT_INTERVALS))
    first_departure: dict[str, tuple[float, float, float]] = field(
        default_factory=lambda: dict(FIRST_DEPARTURE))

    def __post_init__(self):
        self._by_category: dict[str, list[str]] = {}
        for edge, cat in self.categories.items():
            self._by_category.setdefault(cat, []).append(edge)
        for edges in self._by_category.values():
            edges.sort()
        for cat, row in self.transitions.items():
            total = sum(row.values())
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"transition row {cat!r} sums to {total}")

    def edges_of(self, category: str) -> list[str]:
        return self._by_category.get(category, [])

    @classmethod
    def from_json_obj(cls, obj: dict) -> "PlaceModel":
        kwargs = {"categories": dict(obj["categories"])}
        if "transitions" in obj:
            kwargs["transitions"] = {k: dict(v) for k, v in obj["transitions"].items()}
        if "intervals" in obj:
            kwargs["intervals"] = {k: (float(v[0]), float(v[1]))
                                   for k, v in obj["intervals"].items()}
        if "first_departure" in obj:
            kwargs["first_departure"] = {k: tuple(map(float, v))
                                         for k, v in obj["first_departure"].items()}
        return cls(**kwargs)

    def to_json_obj(self) -> dict:
        return {"categories": self.categories,
                "transitions": self.transitions,
                "intervals": {k: list(v) for k, v in self.intervals.items()},
                "first_departure": {k: list(v) for k, v in self.first_departure.items()}}

    @classmethod
    def load(cls, path) -> "PlaceModel":
        with open(path) as f:
            return cls.from_json_obj(json.load(f))


def day_type(day: int, start_weekday: int = 0) -> str:
    """'weekday' or 'weekend' with day 0 defaulting to a Monday."""
    return "weekday" if (day + start_weekday) % 7 < 5 else "weekend"


def sample_first_departure(dtype: str, rng: np.random.Generator,
                           model: PlaceModel | None = None) -> float:
    """First-trip departure in seconds after midnight, resampled into the
    day when the tail overshoots."""
    params = (model.first_departure if model else FIRST_DEPARTURE)[dtype]
    shape, scale, shift = params
    for _ in range(1000):
        minutes = shift + rng.gamma(shape, scale)
        seconds = minutes * 60.0
        if 0.0 <= seconds < DAY_S:
            return seconds
    raise GenerationOverflow(f"first departure for {dtype!r} will not fit a day")


def _sample_interval(category: str, model: PlaceModel,
                     rng: np.random.Generator) -> float:
    mean, sd = model.intervals.get(category, model.intervals["other"])
    for _ in range(1000):
        v = rng.normal(mean, sd)
        if v > 0:
            return v
    return mean


def _next_category(category: str, model: PlaceModel,
                   rng: np.random.Generator) -> str:
    row = model.transitions[category]
    cats = sorted(row)
    probs = np.array([row[c] for c in cats])
    return cats[int(rng.choice(len(cats), p=probs / probs.sum()))]


def _pick_edge(category: str, home_edge: str, model: PlaceModel,
               rng: np.random.Generator) -> str:
    if category == "home":
        return home_edge
    edges = model.edges_of(category)
    if not edges:
        return home_edge
    return edges[int(rng.integers(len(edges)))]


def generate_chain(ev_id: str, home_edge: str, days: int, model: PlaceModel,
                   rng: np.random.Generator, trips_per_day: int = 3,
                   start_weekday: int = 0) -> TripChain:
    """Trip chain over `days` days (`trips_per_day` each, day truncated
    when dwell times run past midnight)."""
    if days < 1:
        raise ValueError("days must be >= 1")
    trips: list[Trip] = []
    place = home_edge
    category = model.categories.get(home_edge, "home")
    for day in range(days):
        dtype = day_type(day, start_weekday)
        t = day * DAY_S + sample_first_departure(dtype, rng, model)
        made = 0
        while made < trips_per_day:
            nxt_cat = _next_category(category, model, rng)
            dest = _pick_edge(nxt_cat, home_edge, model, rng)
            trips.append(Trip(t, place, dest))
            place, category = dest, model.categories.get(dest, nxt_cat)
            made += 1
            if made >= trips_per_day:
                break
            ok = False
            for _ in range(100):
                nt = t + _sample_interval(category, model, rng)
                if nt < (day + 1) * DAY_S:
                    t, ok = nt, True
                    break
            if not ok:
                LOG.warning("%s: day %d truncated after %d trips", ev_id, day, made)
                break
    if trips:
        last = trips[-1]
        trips[-1] = Trip(last.t, last.origin, home_edge)
    chain = TripChain(ev_id, trips)
    chain.validate()
    return chain


def chains_to_json_obj(chains: list[TripChain]) -> list[dict]:
    return [{"ev": c.ev_id,
             "trips": [{"t": tr.t, "origin": tr.origin, "dest": tr.dest}
                       for tr in c.trips]} for c in chains]


def chains_from_json_obj(obj: list[dict]) -> list[TripChain]:
    chains = []
    for d in obj:
        chain = TripChain(d["ev"], [Trip(float(t["t"]), t["origin"], t["dest"])
                                    for t in d["trips"]])
        chain.validate()
        chains.append(chain)
    return chains


def load_chains(path) -> list[TripChain]:
    with open(path) as f:
        return chains_from_json_obj(json.load(f))
