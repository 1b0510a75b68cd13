"""Feasible fractional multicommodity flows (arc LP + path decomposition)."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix

from .geometry import Edge, OuterplanarGraph, edge
from .instance import CutReport, Demand, McfInstance, check_cut_condition

LP_TOL = 1e-9
FEAS_TOL = 1e-6
_ZERO = 1e-11

Path = tuple[int, ...]


class Infeasible(Exception):
    def __init__(self, message: str, excess: float | None = None, report: CutReport | None = None):
        super().__init__(message)
        self.excess = excess
        self.report = report


class UnknownId(KeyError):
    pass


@dataclass
class FractionalFlow:
    """demand id -> list of (vertex path, value)."""

    paths: dict[int, list[tuple[Path, float]]] = field(default_factory=dict)

    def loads(self) -> dict[Edge, float]:
        out: dict[Edge, float] = defaultdict(float)
        for plist in self.paths.values():
            for p, val in plist:
                for a, b in zip(p, p[1:]):
                    out[edge(a, b)] += val
        return dict(out)

    def total(self, gid: int) -> float:
        return sum(v for _, v in self.paths.get(gid, ()))

    def ids(self) -> set[int]:
        return set(self.paths)

    def copy(self) -> "FractionalFlow":
        return FractionalFlow({k: list(v) for k, v in self.paths.items()})


def restrict_flow(flow: FractionalFlow, ids: Iterable[int]) -> FractionalFlow:
    ids = set(ids)
    missing = ids - flow.ids()
    if missing:
        raise UnknownId(f"no flow for demands {sorted(missing)}")
    return FractionalFlow({k: list(flow.paths[k]) for k in sorted(ids)})


def _arc_lp(graph: OuterplanarGraph, caps: Mapping[Edge, float],
            commodities: Sequence[tuple[int, int, int, float]]):
    """Two-phase LP.  Returns (excess, arc flows per commodity)."""
    edges = list(graph.edges)
    n, m, k = graph.n, len(edges), len(commodities)
    n_arc = 2 * m
    n_var = k * n_arc + 1
    t_idx = n_var - 1

    rows, cols, vals = [], [], []
    b_eq = np.zeros(k * n)
    for ci, (_, s, t, d) in enumerate(commodities):
        base = ci * n_arc
        for ei, (a, b) in enumerate(edges):
            for arc, (x, y) in ((2 * ei, (a, b)), (2 * ei + 1, (b, a))):
                rows += [ci * n + x - 1, ci * n + y - 1]
                cols += [base + arc, base + arc]
                vals += [1.0, -1.0]
        b_eq[ci * n + s - 1] = d
        b_eq[ci * n + t - 1] = -d
    A_eq = coo_matrix((vals, (rows, cols)), shape=(k * n, n_var)).tocsr()

    rows, cols, vals = [], [], []
    for ei in range(m):
        for ci in range(k):
            rows += [ei, ei]
            cols += [ci * n_arc + 2 * ei, ci * n_arc + 2 * ei + 1]
            vals += [1.0, 1.0]
        rows.append(ei)
        cols.append(t_idx)
        vals.append(-1.0)
    A_ub = coo_matrix((vals, (rows, cols)), shape=(m, n_var)).tocsr()
    b_ub = np.array([float(caps[e]) for e in edges])

    opts = {"primal_feasibility_tolerance": LP_TOL, "dual_feasibility_tolerance": LP_TOL}
    c1 = np.zeros(n_var)
    c1[t_idx] = 1.0
    res = linprog(c1, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=[(0, None)] * n_var, method="highs", options=opts)
    if res.status != 0:
        raise Infeasible(f"LP failed: {res.message}")
    excess = float(res.x[t_idx])

    c2 = np.ones(n_var)
    c2[t_idx] = 0.0
    bounds = [(0, None)] * (n_var - 1) + [(0, excess + LP_TOL)]
    res2 = linprog(c2, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                   bounds=bounds, method="highs", options=opts)
    x = res2.x if res2.status == 0 else res.x

    flows = []
    for ci in range(k):
        arcs = {}
        for ei, (a, b) in enumerate(edges):
            fwd = x[ci * n_arc + 2 * ei]
            bwd = x[ci * n_arc + 2 * ei + 1]
            net = fwd - bwd
            if net > _ZERO:
                arcs[(a, b)] = float(net)
            elif net < -_ZERO:
                arcs[(b, a)] = float(-net)
        flows.append(arcs)
    return excess, flows


def _reachable(src: int, arcs: Mapping[tuple[int, int], float], theta: float, banned: set[int]) -> set[int]:
    seen = {src}
    stack = [src]
    while stack:
        v = stack.pop()
        for (a, b), f in arcs.items():
            if a == v and f >= theta and b not in seen and b not in banned:
                seen.add(b)
                stack.append(b)
    return seen


def _lex_path(s: int, t: int, arcs: Mapping[tuple[int, int], float], theta: float) -> Path | None:
    """Lexicographically smallest simple s-t path using arcs carrying >= theta."""
    if t not in _reachable(s, arcs, theta, set()):
        return None
    path = [s]
    on_path = {s}
    while path[-1] != t:
        v = path[-1]
        for w in sorted(b for (a, b), f in arcs.items() if a == v and f >= theta and b not in on_path):
            if w == t or t in _reachable(w, arcs, theta, on_path):
                path.append(w)
                on_path.add(w)
                break
        else:  # pragma: no cover - reachability guarantees progress
            return None
    return tuple(path)


def decompose(s: int, t: int, value: float, arcs: dict[tuple[int, int], float]) -> list[tuple[Path, float]]:
    """Peel widest paths (lexicographic tie-break); leftover cycles are dropped.

    Path values are rescaled so they sum to ``value``.
    """
    arcs = {a: f for a, f in arcs.items() if f > _ZERO}
    out: list[tuple[Path, float]] = []
    while True:
        levels = sorted(set(arcs.values()), reverse=True)
        chosen = None
        for theta in levels:
            if t in _reachable(s, arcs, theta, set()):
                chosen = theta
                break
        if chosen is None or chosen <= _ZERO:
            break
        p = _lex_path(s, t, arcs, chosen)
        width = min(arcs[(a, b)] for a, b in zip(p, p[1:]))
        out.append((p, width))
        for a, b in zip(p, p[1:]):
            arcs[(a, b)] -= width
            if arcs[(a, b)] <= _ZERO:
                del arcs[(a, b)]
    total = sum(v for _, v in out)
    if total <= 0:
        return []
    scale = value / total
    merged: dict[Path, float] = {}
    for p, v in out:
        merged[p] = merged.get(p, 0.0) + v * scale
    return list(merged.items())


def lp_flow(graph: OuterplanarGraph, caps: Mapping[Edge, float], demands: Iterable[Demand],
            tol: float = FEAS_TOL) -> FractionalFlow:
    """Feasible flow for float-valued capacities; raises :class:`Infeasible`."""
    demands = [g for g in demands]
    commodities = [(g.id, g.u, g.v, float(g.value)) for g in demands if g.value > 0]
    flow = FractionalFlow({g.id: [] for g in demands})
    if not commodities:
        return flow
    excess, arcflows = _arc_lp(graph, caps, commodities)
    if excess > tol:
        raise Infeasible(f"capacities exceeded by {excess:.3g} in the best fractional flow", excess)
    for (gid, s, t, d), arcs in zip(commodities, arcflows):
        flow.paths[gid] = decompose(s, t, d, arcs)
    return flow


def solve_fractional(inst: McfInstance, tol: float = FEAS_TOL) -> FractionalFlow:
    try:
        return lp_flow(inst.graph, inst.caps, inst.demands, tol)
    except Infeasible as exc:
        exc.report = check_cut_condition(inst)
        raise


@dataclass
class FlowReport:
    overloads: dict[Edge, float] = field(default_factory=dict)
    deficits: dict[int, float] = field(default_factory=dict)
    bad_paths: list[tuple[int, Path]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.overloads or self.deficits or self.bad_paths)


def validate_fractional(inst: McfInstance, flow: FractionalFlow, tol: float = FEAS_TOL) -> FlowReport:
    rep = FlowReport()
    for g in inst.demands:
        plist = flow.paths.get(g.id, [])
        for p, val in plist:
            ends_ok = {p[0], p[-1]} == {g.u, g.v}
            edges_ok = all(inst.graph.has_edge(a, b) for a, b in zip(p, p[1:]))
            if not ends_ok or not edges_ok or len(set(p)) != len(p) or val < -tol:
                rep.bad_paths.append((g.id, p))
        gap = float(g.value) - sum(v for _, v in plist)
        if abs(gap) > tol:
            rep.deficits[g.id] = gap
    loads = flow.loads()
    for e, c in inst.caps.items():
        over = loads.get(e, 0.0) - float(c)
        if over > tol:
            rep.overloads[e] = over
    return rep
