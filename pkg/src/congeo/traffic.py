"""Route-based static user equilibrium as a complementarity problem.

A network carries links with BPR congestion costs t0*(1 + b*(v/cap)^p),
enumerated loop-free routes, and origin-destination pairs with fixed or
truncated-affine elastic demand.  The equilibrium conditions (used routes
attain the minimal OD time; demand is served) are assembled into an
NcpProblem over x = (route flows, OD times) and handed to the
Fischer-Burmeister solver.

Two demand-block layouts are supported.  ``per_od`` (default) pairs each OD
time pi_k against flow conservation sum_r h_r - d_k(pi_k).  ``per_route``
duplicates the time variable per route and pairs pi_r against
h_r - d(pi_r), forcing every route to carry the full demand; the layouts
coincide on single-route networks and diverge otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .ncp import NcpProblem, SolveReport, SolverConfig, merit, solve_ncp

__all__ = [
    "Link",
    "Route",
    "OdPair",
    "FixedDemand",
    "ElasticDemand",
    "TrafficNetwork",
    "UeSolution",
    "WardropResiduals",
    "link_time",
    "route_cost",
    "assemble_ncp",
    "solve_ue",
    "gap_value",
    "wardrop_residuals",
]

DEMAND_BLOCKS = ("per_od", "per_route")


@dataclass(frozen=True)
class Link:
    id: str
    from_node: str
    to_node: str
    t0: float
    capacity: float
    bpr_b: float = 0.15
    bpr_p: float = 4.0

    def __post_init__(self):
        if not self.t0 > 0:
            raise ValueError(f"link {self.id}: free-flow time must be positive")
        if not self.capacity > 0:
            raise ValueError(f"link {self.id}: capacity must be positive")
        if self.bpr_b < 0:
            raise ValueError(f"link {self.id}: bpr_b must be nonnegative")
        if self.bpr_p < 1:
            raise ValueError(f"link {self.id}: bpr_p must be at least 1")


@dataclass(frozen=True)
class FixedDemand:
    value: float

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("fixed demand must be nonnegative")

    def __call__(self, pi: float) -> float:
        return self.value

    def derivative(self, pi: float) -> float:
        return 0.0


@dataclass(frozen=True)
class ElasticDemand:
    """Truncated-affine decreasing demand d(pi) = max(0, d0 - k*pi)."""

    d0: float
    k: float

    def __post_init__(self):
        if self.d0 < 0 or self.k < 0:
            raise ValueError("elastic demand needs d0 >= 0 and k >= 0")

    def __call__(self, pi: float) -> float:
        return max(0.0, self.d0 - self.k * pi)

    def derivative(self, pi: float) -> float:
        return -self.k if self.d0 - self.k * pi > 0.0 else 0.0


Demand = Union[FixedDemand, ElasticDemand]


@dataclass(frozen=True)
class OdPair:
    id: str
    origin: str
    destination: str
    demand: Demand

    def __post_init__(self):
        if self.origin == self.destination:
            raise ValueError(f"od pair {self.id}: origin equals destination")


@dataclass(frozen=True)
class Route:
    id: str
    od: str
    links: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(self.links))
        if not self.links:
            raise ValueError(f"route {self.id}: needs at least one link")


@dataclass(frozen=True)
class TrafficNetwork:
    nodes: tuple[str, ...]
    links: tuple[Link, ...]
    routes: tuple[Route, ...]
    od_pairs: tuple[OdPair, ...]

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "links", tuple(self.links))
        object.__setattr__(self, "routes", tuple(self.routes))
        object.__setattr__(self, "od_pairs", tuple(self.od_pairs))

        for label, ids in (
            ("node", self.nodes),
            ("link", [l.id for l in self.links]),
            ("route", [r.id for r in self.routes]),
            ("od pair", [od.id for od in self.od_pairs]),
        ):
            seen = set()
            for i in ids:
                if i in seen:
                    raise ValueError(f"duplicate {label} id {i!r}")
                seen.add(i)

        node_set = set(self.nodes)
        link_by_id = {l.id: l for l in self.links}
        od_by_id = {od.id: od for od in self.od_pairs}
        for l in self.links:
            if l.from_node not in node_set or l.to_node not in node_set:
                raise ValueError(f"link {l.id}: endpoint not among nodes")
        for od in self.od_pairs:
            if od.origin not in node_set or od.destination not in node_set:
                raise ValueError(f"od pair {od.id}: endpoint not among nodes")

        routed_ods = set()
        for r in self.routes:
            if r.od not in od_by_id:
                raise ValueError(f"route {r.id}: unknown od pair {r.od!r}")
            od = od_by_id[r.od]
            walk = [od.origin]
            for lid in r.links:
                link = link_by_id.get(lid)
                if link is None:
                    raise ValueError(f"route {r.id}: unknown link {lid!r}")
                if link.from_node != walk[-1]:
                    raise ValueError(f"route {r.id}: link {lid!r} does not continue the walk")
                walk.append(link.to_node)
            if walk[-1] != od.destination:
                raise ValueError(f"route {r.id}: walk ends at {walk[-1]!r}, not the destination")
            if len(set(walk)) != len(walk):
                raise ValueError(f"route {r.id}: repeated node (route must be loop-free)")
            routed_ods.add(r.od)
        for od in self.od_pairs:
            if od.id not in routed_ods:
                raise ValueError(f"od pair {od.id}: no route serves it")

        # route-link incidence (routes x links) and route -> od index
        link_index = {l.id: i for i, l in enumerate(self.links)}
        od_index = {od.id: i for i, od in enumerate(self.od_pairs)}
        inc = np.zeros((len(self.routes), len(self.links)))
        r_od = np.zeros(len(self.routes), dtype=int)
        for ri, r in enumerate(self.routes):
            r_od[ri] = od_index[r.od]
            for lid in r.links:
                inc[ri, link_index[lid]] += 1.0
        inc.setflags(write=False)
        r_od.setflags(write=False)
        object.__setattr__(self, "_incidence", inc)
        object.__setattr__(self, "_route_od", r_od)

    @property
    def n_routes(self) -> int:
        return len(self.routes)

    @property
    def n_od(self) -> int:
        return len(self.od_pairs)

    def incidence(self) -> np.ndarray:
        return self._incidence

    def route_od_index(self) -> np.ndarray:
        return self._route_od


def link_time(link: Link, v: float) -> float:
    """BPR travel time t0*(1 + b*(v/capacity)^p); flow must be nonnegative."""
    if v < 0:
        raise ValueError(f"link {link.id}: negative flow {v}")
    return link.t0 * (1.0 + link.bpr_b * (v / link.capacity) ** link.bpr_p)


def _link_times_vec(network: TrafficNetwork, v: np.ndarray) -> np.ndarray:
    """Vectorized link times; negative flows (solver iterates) clamp to free flow."""
    t0 = np.array([l.t0 for l in network.links])
    cap = np.array([l.capacity for l in network.links])
    b = np.array([l.bpr_b for l in network.links])
    p = np.array([l.bpr_p for l in network.links])
    return t0 * (1.0 + b * (np.maximum(v, 0.0) / cap) ** p)


def _link_time_slopes(network: TrafficNetwork, v: np.ndarray) -> np.ndarray:
    t0 = np.array([l.t0 for l in network.links])
    cap = np.array([l.capacity for l in network.links])
    b = np.array([l.bpr_b for l in network.links])
    p = np.array([l.bpr_p for l in network.links])
    vpos = np.maximum(v, 0.0)
    slopes = np.zeros_like(vpos)
    pos = v > 0.0
    slopes[pos] = (t0 * b * p)[pos] * vpos[pos] ** (p[pos] - 1.0) / cap[pos] ** p[pos]
    return slopes


def _route_costs_clamped(network: TrafficNetwork, h: np.ndarray) -> np.ndarray:
    inc = network.incidence()
    v = inc.T @ h
    return inc @ _link_times_vec(network, v)


def route_cost(network: TrafficNetwork, h) -> np.ndarray:
    """Per-route travel times at route flows h >= 0 (shared links aggregate)."""
    h = np.asarray(h, dtype=float)
    if h.shape != (network.n_routes,):
        raise ValueError(f"flow vector shape {h.shape}, expected ({network.n_routes},)")
    if np.any(h < 0):
        raise ValueError("route flows must be nonnegative")
    return _route_costs_clamped(network, h)


def _cost_jacobian(network: TrafficNetwork, h: np.ndarray) -> np.ndarray:
    inc = network.incidence()
    v = inc.T @ h
    return (inc * _link_time_slopes(network, v)[None, :]) @ inc.T


def assemble_ncp(network: TrafficNetwork, demand_block: str = "per_od") -> NcpProblem:
    """Encode the equilibrium conditions as an NcpProblem.

    ``per_od``: unknowns x = (h_1..h_R, pi_1..pi_K) ordered by the network's
    route and OD lists; F = (c_r(h) - pi_od(r); sum_{r in k} h_r - d_k(pi_k)).
    ``per_route``: x = (h_1..h_R, pi_1..pi_R) with
    F = (c_r(h) - pi_r; h_r - d_od(r)(pi_r)).
    """
    if demand_block not in DEMAND_BLOCKS:
        raise ValueError(f"demand_block must be one of {DEMAND_BLOCKS}")
    R, K = network.n_routes, network.n_od
    r_od = network.route_od_index()
    demands = [od.demand for od in network.od_pairs]

    if demand_block == "per_od":
        P = np.zeros((R, K))
        P[np.arange(R), r_od] = 1.0

        def f(x: np.ndarray) -> np.ndarray:
            h, pi = x[:R], x[R:]
            costs = _route_costs_clamped(network, h)
            served = P.T @ h
            dem = np.array([demands[k](pi[k]) for k in range(K)])
            return np.concatenate([costs - P @ pi, served - dem])

        def jacobian(x: np.ndarray) -> np.ndarray:
            h, pi = x[:R], x[R:]
            dd = np.diag([-demands[k].derivative(pi[k]) for k in range(K)])
            top = np.hstack([_cost_jacobian(network, h), -P])
            bottom = np.hstack([P.T, dd])
            return np.vstack([top, bottom])

        return NcpProblem(n=R + K, f=f, jacobian=jacobian)

    def f(x: np.ndarray) -> np.ndarray:
        h, pi = x[:R], x[R:]
        costs = _route_costs_clamped(network, h)
        dem = np.array([demands[r_od[r]](pi[r]) for r in range(R)])
        return np.concatenate([costs - pi, h - dem])

    def jacobian(x: np.ndarray) -> np.ndarray:
        h, pi = x[:R], x[R:]
        dd = np.diag([-demands[r_od[r]].derivative(pi[r]) for r in range(R)])
        eye = np.eye(R)
        top = np.hstack([_cost_jacobian(network, h), -eye])
        bottom = np.hstack([eye, dd])
        return np.vstack([top, bottom])

    return NcpProblem(n=2 * R, f=f, jacobian=jacobian)


@dataclass(frozen=True)
class WardropResiduals:
    """Violation measures of the equilibrium conditions at a candidate point."""

    max_complementarity: float  # max_r |h_r (c_r - pi)|
    max_time_violation: float  # max_r max(0, pi - c_r)
    max_negative_flow: float  # max_r max(0, -h_r)
    demand_gaps: dict[str, float]  # per OD (per route in per_route layout)

    @property
    def max_demand_gap(self) -> float:
        return max(self.demand_gaps.values()) if self.demand_gaps else 0.0

    def within(self, tol: float) -> bool:
        return (
            self.max_complementarity <= tol
            and self.max_time_violation <= tol
            and self.max_negative_flow <= tol
            and self.max_demand_gap <= tol
        )


@dataclass(frozen=True)
class UeSolution:
    h: np.ndarray
    pi: np.ndarray
    residuals: WardropResiduals
    report: SolveReport
    demand_block: str
    route_ids: tuple[str, ...]
    pi_ids: tuple[str, ...]  # od ids (per_od) or route ids (per_route)

    @property
    def converged(self) -> bool:
        return self.report.converged

    def flows_by_route(self) -> dict[str, float]:
        return {rid: float(v) for rid, v in zip(self.route_ids, self.h)}

    def times_by_key(self) -> dict[str, float]:
        return {pid: float(v) for pid, v in zip(self.pi_ids, self.pi)}

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.h, self.pi])


def _default_start(network: TrafficNetwork, demand_block: str) -> np.ndarray:
    R, K = network.n_routes, network.n_od
    r_od = network.route_od_index()
    c0 = _route_costs_clamped(network, np.zeros(R))
    if demand_block == "per_od":
        pi0 = np.array(
            [min(c0[r] for r in range(R) if r_od[r] == k) for k in range(K)]
        )
        counts = np.bincount(r_od, minlength=K)
        h0 = np.array(
            [network.od_pairs[r_od[r]].demand(pi0[r_od[r]]) / counts[r_od[r]] for r in range(R)]
        )
        return np.concatenate([h0, pi0])
    pi0 = c0.copy()
    h0 = np.array([network.od_pairs[r_od[r]].demand(pi0[r]) for r in range(R)])
    return np.concatenate([h0, pi0])


def wardrop_residuals(network: TrafficNetwork, solution, demand_block: str = "per_od") -> WardropResiduals:
    """Evaluate the equilibrium violation measures at a candidate solution.

    Accepts a UeSolution or an (h, pi) pair; costs are evaluated with flows
    clamped at zero so infeasible candidates still report finite numbers.
    """
    if isinstance(solution, UeSolution):
        h, pi, demand_block = solution.h, solution.pi, solution.demand_block
    else:
        h, pi = solution
        h = np.asarray(h, dtype=float)
        pi = np.asarray(pi, dtype=float)
    R = network.n_routes
    r_od = network.route_od_index()
    costs = _route_costs_clamped(network, h)
    if demand_block == "per_od":
        pi_per_route = pi[r_od]
    else:
        pi_per_route = pi
    comp = float(np.max(np.abs(h * (costs - pi_per_route)))) if R else 0.0
    time_violation = float(np.max(np.maximum(pi_per_route - costs, 0.0))) if R else 0.0
    neg_flow = float(np.max(np.maximum(-h, 0.0))) if R else 0.0
    gaps: dict[str, float] = {}
    if demand_block == "per_od":
        for k, od in enumerate(network.od_pairs):
            served = float(np.sum(h[r_od == k]))
            gaps[od.id] = abs(served - od.demand(float(pi[k])))
    else:
        for r, route in enumerate(network.routes):
            od = network.od_pairs[r_od[r]]
            gaps[route.id] = abs(float(h[r]) - od.demand(float(pi[r])))
    return WardropResiduals(
        max_complementarity=comp,
        max_time_violation=time_violation,
        max_negative_flow=neg_flow,
        demand_gaps=gaps,
    )


def solve_ue(
    network: TrafficNetwork,
    config: SolverConfig | None = None,
    demand_block: str = "per_od",
    x0=None,
) -> UeSolution:
    """Solve for user equilibrium; solver statuses propagate in the report."""
    problem = assemble_ncp(network, demand_block)
    start = np.asarray(x0, dtype=float) if x0 is not None else _default_start(network, demand_block)
    report = solve_ncp(problem, config, start)
    R = network.n_routes
    h, pi = report.x_star[:R], report.x_star[R:]
    if demand_block == "per_od":
        pi_ids = tuple(od.id for od in network.od_pairs)
    else:
        pi_ids = tuple(r.id for r in network.routes)
    residuals = wardrop_residuals(network, (h, pi), demand_block)
    return UeSolution(
        h=h,
        pi=pi,
        residuals=residuals,
        report=report,
        demand_block=demand_block,
        route_ids=tuple(r.id for r in network.routes),
        pi_ids=pi_ids,
    )


def gap_value(network: TrafficNetwork, x, demand_block: str = "per_od") -> float:
    """Sum of (1/2) phi(x_i, F_i)^2 over the assembled system; zero exactly
    at equilibria."""
    problem = assemble_ncp(network, demand_block)
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.n,):
        raise ValueError(f"candidate shape {x.shape}, expected ({problem.n},)")
    return merit(x, problem)
