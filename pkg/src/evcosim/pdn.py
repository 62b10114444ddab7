"""Radial distribution network and its branch-flow dispatch optimizer.

The network is the classic DistFlow description: per-line active/reactive
flow and squared current, per-bus squared voltage, power balance and
voltage-drop equalities, and the conic relaxation of the current
definition.  Generation cost is quadratic in the energy produced per grid
step; V2G-enabled stations appear as bounded injections with a linear
price, so the optimizer dispatches them exactly when they undercut the
marginal generator.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .socp import ConeResult, ConeSolver, ConeSpec


class Infeasible(Exception):
    pass


class NotRadial(Exception):
    pass


class UnknownBus(Exception):
    pass


@dataclass(frozen=True)
class Bus:
    id: str
    v_min2: float = 0.81    # pu^2
    v_max2: float = 1.1025  # pu^2
    p_load_kw: float = 0.0
    q_load_kvar: float = 0.0


@dataclass(frozen=True)
class Line:
    src: str
    dst: str
    r_pu: float
    x_pu: float
    l_max_pu: float = 25.0  # squared-current limit

    def __post_init__(self):
        if self.r_pu < 0 or self.x_pu < 0:
            raise ValueError(f"line {self.src}-{self.dst}: negative impedance")


@dataclass(frozen=True)
class Generator:
    id: str
    bus: str
    alpha: float            # $/kWh^2
    beta: float             # $/kWh
    gamma: float            # $
    p_min_kw: float = 0.0
    p_max_kw: float = 1e7
    q_min_kvar: float = -1e7
    q_max_kvar: float = 1e7


@dataclass(frozen=True)
class V2gTap:
    station: str
    bus: str
    cap_kw: float
    price_per_kwh: float


@dataclass
class PdnCase:
    base_mva: float
    base_kv: float
    slack: str
    buses: list[Bus]
    lines: list[Line]
    generators: list[Generator]
    v2g_price_per_kwh: float = 1.0
    v2g_taps: list[V2gTap] = field(default_factory=list)
    slack_v2: float = 1.0

    def __post_init__(self):
        self._bus_index = {b.id: i for i, b in enumerate(self.buses)}
        if self.slack not in self._bus_index:
            raise UnknownBus(self.slack)

    @property
    def base_kw(self) -> float:
        return self.base_mva * 1000.0

    def bus_index(self, bus_id: str) -> int:
        try:
            return self._bus_index[bus_id]
        except KeyError:
            raise UnknownBus(bus_id) from None

    def check_radial(self) -> None:
        nb, nl = len(self.buses), len(self.lines)
        if nl != nb - 1:
            raise NotRadial(f"{nl} lines for {nb} buses")
        adj: dict[str, list[str]] = {b.id: [] for b in self.buses}
        for ln in self.lines:
            adj[ln.src].append(ln.dst)
            adj[ln.dst].append(ln.src)
        seen = {self.slack}
        stack = [self.slack]
        while stack:
            for nxt in adj[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        if len(seen) != nb:
            raise NotRadial("network is not connected from the slack bus")

    @classmethod
    def from_json_obj(cls, obj: dict) -> "PdnCase":
        return cls(
            base_mva=float(obj["base_mva"]), base_kv=float(obj["base_kv"]),
            slack=str(obj["slack"]),
            buses=[Bus(id=str(b["id"]),
                       v_min2=float(b.get("v_min_pu", 0.9)) ** 2,
                       v_max2=float(b.get("v_max_pu", 1.05)) ** 2,
                       p_load_kw=float(b.get("p_kw", 0.0)),
                       q_load_kvar=float(b.get("q_kvar", 0.0)))
                  for b in obj["buses"]],
            lines=[Line(src=str(l["from"]), dst=str(l["to"]),
                        r_pu=float(l["r_pu"]), x_pu=float(l["x_pu"]),
                        l_max_pu=float(l.get("i2_max_pu", 25.0)))
                   for l in obj["lines"]],
            generators=[Generator(id=str(g["id"]), bus=str(g["bus"]),
                                  alpha=float(g["cost"][0]), beta=float(g["cost"][1]),
                                  gamma=float(g["cost"][2]),
                                  p_min_kw=float(g.get("p_min_kw", 0.0)),
                                  p_max_kw=float(g.get("p_max_kw", 1e7)),
                                  q_min_kvar=float(g.get("q_min_kvar", -1e7)),
                                  q_max_kvar=float(g.get("q_max_kvar", 1e7)))
                        for g in obj["generators"]],
            v2g_price_per_kwh=float(obj.get("v2g_price_per_kwh", 1.0)),
            slack_v2=float(obj.get("slack_v_pu", 1.0)) ** 2,
        )

    @classmethod
    def load(cls, path) -> "PdnCase":
        with open(path) as f:
            return cls.from_json_obj(json.load(f))


def attach_loads(case: PdnCase, station_loads: dict[str, float],
                 station_buses: dict[str, str],
                 v2g_caps: dict[str, float] | None = None) -> PdnCase:
    """Add station charging loads (kW) to their buses and expose V2G
    capacities (kW) as dispatchable injections."""
    extra = np.zeros(len(case.buses))
    for station, kw in sorted(station_loads.items()):
        bus = station_buses.get(station)
        if bus is None:
            raise UnknownBus(f"station {station} has no bus mapping")
        extra[case.bus_index(bus)] += kw
    buses = [replace(b, p_load_kw=b.p_load_kw + extra[i])
             for i, b in enumerate(case.buses)]
    taps = []
    for station, cap in sorted((v2g_caps or {}).items()):
        bus = station_buses.get(station)
        if bus is None:
            raise UnknownBus(f"station {station} has no bus mapping")
        case.bus_index(bus)
        taps.append(V2gTap(station=station, bus=bus, cap_kw=max(0.0, cap),
                           price_per_kwh=case.v2g_price_per_kwh))
    out = replace(case, buses=buses, v2g_taps=taps)
    return out


@dataclass
class PdnSolution:
    objective: float
    status: str
    iterations: int
    cone_gap: float
    bus_v: dict[str, float]
    line_p: dict[tuple[str, str], float]
    line_q: dict[tuple[str, str], float]
    line_l: dict[tuple[str, str], float]
    gen_p_kw: dict[str, float]
    gen_q_kvar: dict[str, float]
    v2g_p_kw: dict[str, float]
    model: str = "socp"


class DistflowSolver:
    """Reusable optimizer for one network structure.

    Bus loads and V2G caps may change between calls; topology, generators
    and limits may not.  `conic=False` drops the squared-current terms and
    solves the linearized model instead.
    """

    def __init__(self, case: PdnCase, dt_s: float = 3600.0, conic: bool = True):
        case.check_radial()
        self.case = case
        self.dt_h = dt_s / 3600.0
        self.conic = conic
        nl, nb = len(case.lines), len(case.buses)
        ng, nv = len(case.generators), len(case.v2g_taps)
        self.nP, self.nQ = 0, nl
        self.nL = 2 * nl if conic else None
        base = 3 * nl if conic else 2 * nl
        self.nV = base
        self.nG = base + nb
        self.nQg = base + nb + ng
        self.nVg = base + nb + 2 * ng
        n = base + nb + 2 * ng + nv
        self.nvar = n
        S = case.base_kw

        rows = []
        self._load_rows = []       # (row index, bus index) for b updates
        bus_lines_in = {i: [] for i in range(nb)}
        bus_lines_out = {i: [] for i in range(nb)}
        for li, ln in enumerate(case.lines):
            bus_lines_in[case.bus_index(ln.dst)].append(li)
            bus_lines_out[case.bus_index(ln.src)].append(li)

        def new_row():
            rows.append(np.zeros(n))
            return rows[-1]

        # active and reactive balance at every bus
        for bi, bus in enumerate(case.buses):
            row = new_row()
            for li in bus_lines_in[bi]:
                row[self.nP + li] += 1.0
                if conic:
                    row[self.nL + li] -= case.lines[li].r_pu
            for li in bus_lines_out[bi]:
                row[self.nP + li] -= 1.0
            for gi, g in enumerate(case.generators):
                if g.bus == bus.id:
                    row[self.nG + gi] += 1.0
            for vi, tap in enumerate(case.v2g_taps):
                if tap.bus == bus.id:
                    row[self.nVg + vi] += 1.0
            self._load_rows.append((len(rows) - 1, bi, "p"))

            row = new_row()
            for li in bus_lines_in[bi]:
                row[self.nQ + li] += 1.0
                if conic:
                    row[self.nL + li] -= case.lines[li].x_pu
            for li in bus_lines_out[bi]:
                row[self.nQ + li] -= 1.0
            for gi, g in enumerate(case.generators):
                if g.bus == bus.id:
                    row[self.nQg + gi] += 1.0
            self._load_rows.append((len(rows) - 1, bi, "q"))

        # voltage drop along every line
        for li, ln in enumerate(case.lines):
            row = new_row()
            row[self.nV + case.bus_index(ln.dst)] = 1.0
            row[self.nV + case.bus_index(ln.src)] = -1.0
            row[self.nP + li] = 2.0 * ln.r_pu
            row[self.nQ + li] = 2.0 * ln.x_pu
            if conic:
                row[self.nL + li] = -(ln.r_pu ** 2 + ln.x_pu ** 2)
        # pinned slack voltage
        row = new_row()
        row[self.nV + case.bus_index(case.slack)] = 1.0
        self._slack_row = len(rows) - 1

        A = np.array(rows)

        # boxes on l, v, generator outputs and V2G injections
        box_idx, lb, ub = [], [], []
        if conic:
            for li, ln in enumerate(case.lines):
                box_idx.append(self.nL + li)
                lb.append(0.0)
                ub.append(ln.l_max_pu)
        for bi, bus in enumerate(case.buses):
            box_idx.append(self.nV + bi)
            lb.append(bus.v_min2)
            ub.append(bus.v_max2)
        for gi, g in enumerate(case.generators):
            box_idx.append(self.nG + gi)
            lb.append(g.p_min_kw / S)
            ub.append(g.p_max_kw / S)
        for gi, g in enumerate(case.generators):
            box_idx.append(self.nQg + gi)
            lb.append(g.q_min_kvar / S)
            ub.append(g.q_max_kvar / S)
        self._v2g_box_start = len(box_idx)
        for vi, tap in enumerate(case.v2g_taps):
            box_idx.append(self.nVg + vi)
            lb.append(0.0)
            ub.append(tap.cap_kw / S)
        self._lb = np.array(lb)
        self._ub = np.array(ub)

        # ||(2P, 2Q, l - v_src)|| <= l + v_src  per line
        cones = []
        if conic:
            for li, ln in enumerate(case.lines):
                G = np.zeros((4, n))
                vs = self.nV + case.bus_index(ln.src)
                G[0, self.nL + li] = 1.0
                G[0, vs] = 1.0
                G[1, self.nP + li] = 2.0
                G[2, self.nQ + li] = 2.0
                G[3, self.nL + li] = 1.0
                G[3, vs] = -1.0
                cones.append(G)

        # quadratic generation cost on energy per step; linear V2G price
        P = np.zeros((n, n))
        q = np.zeros(n)
        e = S * self.dt_h   # pu power -> kWh per step
        for gi, g in enumerate(case.generators):
            P[self.nG + gi, self.nG + gi] = 2.0 * g.alpha * e * e
            # tiny reactive-dispatch regularizer: without loss terms the
            # linearized model would leave Q generation degenerate and free
            # to circulate
            P[self.nQg + gi, self.nQg + gi] = 2.0 * 1e-6 * e * e
            q[self.nG + gi] = g.beta * e
        for vi, tap in enumerate(case.v2g_taps):
            q[self.nVg + vi] = tap.price_per_kwh * e
        self._const_cost = sum(g.gamma for g in case.generators)

        self._spec = ConeSpec(n=n, P=P, q=q, A=A,
                              box_idx=np.array(box_idx, dtype=int), cones=cones)
        self._solver = ConeSolver(self._spec)
        self._b = np.zeros(A.shape[0])
        self._b[self._slack_row] = case.slack_v2

    def solve(self, bus_p_kw: np.ndarray | None = None,
              bus_q_kvar: np.ndarray | None = None,
              v2g_caps_kw: np.ndarray | None = None,
              max_iter: int = 20000, eps: float = 1e-9) -> PdnSolution:
        case = self.case
        S = case.base_kw
        p = np.array([b.p_load_kw for b in case.buses]) if bus_p_kw is None \
            else np.asarray(bus_p_kw, dtype=float)
        qd = np.array([b.q_load_kvar for b in case.buses]) if bus_q_kvar is None \
            else np.asarray(bus_q_kvar, dtype=float)
        caps = np.array([t.cap_kw for t in case.v2g_taps]) if v2g_caps_kw is None \
            else np.asarray(v2g_caps_kw, dtype=float)

        total_cap = sum(g.p_max_kw for g in case.generators) + float(caps.sum()) \
            if len(caps) else sum(g.p_max_kw for g in case.generators)
        if p.sum() > total_cap:
            raise Infeasible(
                f"total active load {p.sum():.1f} kW exceeds dispatchable "
                f"capacity {total_cap:.1f} kW")

        for row, bi, kind in self._load_rows:
            self._b[row] = (p[bi] if kind == "p" else qd[bi]) / S
        ub = self._ub.copy()
        for vi in range(len(case.v2g_taps)):
            ub[self._v2g_box_start + vi] = max(0.0, caps[vi]) / S

        res = self._solver.solve(self._b, self._lb, ub, max_iter=max_iter, eps=eps)
        if res.status != "optimal" and res.primal_residual > 1e-5:
            raise Infeasible(
                f"solver did not converge (primal residual {res.primal_residual:.2e}); "
                f"problem is likely infeasible")
        return self._extract(res)

    def _extract(self, res: ConeResult) -> PdnSolution:
        case = self.case
        S = case.base_kw
        x = res.x
        nlm = len(case.lines)
        line_p, line_q, line_l = {}, {}, {}
        gap = 0.0
        for li, ln in enumerate(case.lines):
            key = (ln.src, ln.dst)
            line_p[key] = float(x[self.nP + li])
            line_q[key] = float(x[self.nQ + li])
            if self.conic:
                lv = float(x[self.nL + li])
                line_l[key] = lv
                vsrc = float(x[self.nV + case.bus_index(ln.src)])
                gap = max(gap, abs(line_p[key] ** 2 + line_q[key] ** 2 - lv * vsrc))
            else:
                line_l[key] = 0.0
        bus_v = {b.id: float(x[self.nV + i]) for i, b in enumerate(case.buses)}
        gen_p = {g.id: float(x[self.nG + i]) * S for i, g in enumerate(case.generators)}
        gen_q = {g.id: float(x[self.nQg + i]) * S for i, g in enumerate(case.generators)}
        v2g_p = {t.station: float(x[self.nVg + i]) * S
                 for i, t in enumerate(case.v2g_taps)}
        e = self.dt_h
        obj = self._const_cost
        for g in case.generators:
            kwh = gen_p[g.id] * e
            obj += g.alpha * kwh * kwh + g.beta * kwh
        for t in case.v2g_taps:
            obj += t.price_per_kwh * v2g_p[t.station] * e
        return PdnSolution(objective=obj, status=res.status,
                           iterations=res.iterations, cone_gap=gap,
                           bus_v=bus_v, line_p=line_p, line_q=line_q,
                           line_l=line_l, gen_p_kw=gen_p, gen_q_kvar=gen_q,
                           v2g_p_kw=v2g_p,
                           model="socp" if self.conic else "linear")


def solve(case: PdnCase, dt_s: float = 3600.0, **kw) -> PdnSolution:
    """Cost-minimal dispatch of the conic DistFlow relaxation."""
    return DistflowSolver(case, dt_s=dt_s, conic=True).solve(**kw)


def lin_solve(case: PdnCase, dt_s: float = 3600.0, **kw) -> PdnSolution:
    """Linearized DistFlow (squared-current terms dropped)."""
    return DistflowSolver(case, dt_s=dt_s, conic=False).solve(**kw)
