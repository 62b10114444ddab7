"""V2G dispatch: per-station capacity offers, allocation of the grid's
dispatched power across participating EVs, and battery-side application.

The default allocation is proportional to each participant's rated V2G
power (equal split when ratings match); alternative strategies register
by name and must satisfy the same contract: allocations sum to the
dispatched power and never exceed a participant's rating.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .fleet import ElectricVehicle, discharge_v2g, v2g_eligible
from .stations import ChargingStation


class CapacityExceeded(Exception):
    pass


@dataclass(frozen=True)
class V2gWindow:
    """Daily intervals [start, end) in seconds when V2G may run."""
    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        spans = sorted(self.intervals)
        for start, end in spans:
            if not (0 <= start < end <= 86400):
                raise ValueError(f"bad V2G window [{start}, {end})")
        for (_, e1), (s2, _) in zip(spans, spans[1:]):
            if s2 < e1:
                raise ValueError("V2G windows overlap")

    def active(self, t: float) -> bool:
        tod = t % 86400.0
        return any(s <= tod < e for s, e in self.intervals)

    @classmethod
    def from_json_obj(cls, obj) -> "V2gWindow":
        return cls(tuple((float(s), float(e)) for s, e in obj))


@dataclass
class V2gOffer:
    station: str
    capacity_kw: float
    participants: list[tuple[str, float]]  # (ev id, rated V2G kW)


def station_capacity(station: ChargingStation,
                     evs: dict[str, ElectricVehicle],
                     window_active: bool) -> V2gOffer:
    """Capacity the station can put on the wire right now: the summed
    rated V2G power of piled EVs at or above their participation floor.
    Zero outside the enabled window."""
    if not (station.v2g_enabled and window_active and station.online):
        return V2gOffer(station.id, 0.0, [])
    participants = []
    total = 0.0
    for ev_id in station.occupants:
        ev = evs[ev_id]
        if v2g_eligible(ev):
            participants.append((ev_id, ev.proto.v2g_power))
            total += ev.proto.v2g_power
    return V2gOffer(station.id, total, participants)


def _proportional(offer: V2gOffer, p_vcr: float) -> list[tuple[str, float]]:
    scale = p_vcr / offer.capacity_kw
    return [(ev_id, rated * scale) for ev_id, rated in offer.participants]


_STRATEGIES = {"proportional": _proportional}


def register_strategy(name: str, fn) -> None:
    """fn(offer, p_vcr) -> [(ev id, kW)] summing to p_vcr, each within
    the participant's rated power."""
    _STRATEGIES[name] = fn


def allocate(offer: V2gOffer, p_vcr: float,
             strategy: str = "proportional") -> list[tuple[str, float]]:
    """Split the dispatched power across the offer's participants."""
    if p_vcr > offer.capacity_kw + 1e-9:
        raise CapacityExceeded(
            f"{offer.station}: dispatched {p_vcr} kW > capacity {offer.capacity_kw} kW")
    if p_vcr <= 0 or not offer.participants:
        return [(ev_id, 0.0) for ev_id, _ in offer.participants]
    fn = _STRATEGIES.get(strategy)
    if fn is None:
        raise ValueError(f"unknown V2G strategy {strategy!r}")
    allocs = fn(offer, min(p_vcr, offer.capacity_kw))
    rated = dict(offer.participants)
    for ev_id, kw in allocs:
        if kw > rated.get(ev_id, 0.0) + 1e-9:
            raise ValueError(f"strategy over-allocates {ev_id}")
    return allocs


@dataclass
class DischargeResult:
    per_ev_kwh: dict[str, float] = field(default_factory=dict)
    grid_kwh: float = 0.0
    battery_kwh: float = 0.0
    delivered_kw: float = 0.0
    shortfall_kw: float = 0.0


def apply_discharge(allocations: list[tuple[str, float]],
                    station: ChargingStation,
                    evs: dict[str, ElectricVehicle],
                    rated: dict[str, float],
                    dt_s: float) -> DischargeResult:
    """Apply one step of the interval's allocations.

    EVs that left the pile contribute nothing; an EV whose battery cannot
    sustain its share for the full step is clipped, the residual is
    re-spread once across participants with headroom, and whatever still
    cannot be served is reported as shortfall.
    """
    res = DischargeResult()
    dt_h = dt_s / 3600.0
    present = set(station.occupants)
    deliverable: dict[str, float] = {}
    planned = 0.0
    for ev_id, kw in allocations:
        planned += kw
        if ev_id not in present or kw <= 0:
            deliverable[ev_id] = 0.0
            continue
        ev = evs[ev_id]
        max_kw = ev.stored_kwh * ev.discharge_eff / dt_h
        deliverable[ev_id] = min(kw, max_kw)
    residual = planned - sum(deliverable.values())
    if residual > 1e-12:
        headroom = {}
        for ev_id, kw in allocations:
            if ev_id not in present:
                continue
            ev = evs[ev_id]
            max_kw = min(rated.get(ev_id, 0.0),
                         ev.stored_kwh * ev.discharge_eff / dt_h)
            headroom[ev_id] = max(0.0, max_kw - deliverable[ev_id])
        total_head = sum(headroom.values())
        spread = min(residual, total_head)
        if total_head > 0:
            for ev_id, head in headroom.items():
                deliverable[ev_id] += spread * head / total_head
        res.shortfall_kw = residual - spread
    for ev_id, kw in deliverable.items():
        if kw <= 0:
            continue
        grid, battery = discharge_v2g(evs[ev_id], kw, dt_s)
        res.per_ev_kwh[ev_id] = grid
        res.grid_kwh += grid
        res.battery_kwh += battery
    res.delivered_kw = res.grid_kwh / dt_h if dt_h > 0 else 0.0
    return res
