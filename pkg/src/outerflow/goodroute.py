"""Unsplittable routing when every demand is good (parallel to a supply edge).

Ears (leaf faces of the parallel-collapsed weak dual) are contracted one at a
time until two vertices remain; the two-vertex instance is solved by greedy
assignment to parallel edges, and the routing is then unwound ear by ear.
Every edge ends with load <= cap + d_max, checked in exact arithmetic.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .geometry import Face, GeometryError, build_graph, edge
from .instance import (
    CutConditionViolated,
    Demand,
    InstanceError,
    MultiInstance,
    SupplyEdge,
    check_cut_condition,
    collapse_parallel,
)


class BadDemandPresent(InstanceError):
    pass


class NotTwoConnected(InstanceError):
    pass


class PreconditionViolated(ValueError):
    pass


class TwoOverloadedSegments(RuntimeError):
    pass


class RoutingError(AssertionError):
    pass


@dataclass(frozen=True)
class Route:
    """A path as a vertex sequence plus the ids of the edges it uses."""

    vertices: tuple
    edges: tuple[int, ...]

    def reversed(self) -> "Route":
        return Route(self.vertices[::-1], self.edges[::-1])


@dataclass
class UnsplittableRouting:
    routes: dict[int, Route] = field(default_factory=dict)

    def loads(self, inst: MultiInstance) -> dict[int, Fraction]:
        val = {g.id: g.value for g in inst.demands}
        out = {eid: Fraction(0) for eid in inst.edges}
        for gid, r in self.routes.items():
            for eid in r.edges:
                out[eid] += val[gid]
        return out

    def violation(self, inst: MultiInstance) -> Fraction:
        loads = self.loads(inst)
        worst = Fraction(0)
        for eid, e in inst.edges.items():
            worst = max(worst, loads[eid] - e.cap)
        return worst


def check_routing(inst: MultiInstance, routing: UnsplittableRouting) -> list[str]:
    """Structural problems: missing demands, wrong endpoints, broken paths."""
    fails = []
    for g in inst.demands:
        r = routing.routes.get(g.id)
        if r is None:
            fails.append(f"demand {g.id} is not routed")
            continue
        if (r.vertices[0], r.vertices[-1]) != (g.u, g.v):
            fails.append(f"route of demand {g.id} runs {r.vertices[0]}->{r.vertices[-1]}")
        if len(r.edges) != len(r.vertices) - 1 or len(set(r.vertices)) != len(r.vertices):
            fails.append(f"route of demand {g.id} is not a simple path")
            continue
        for a, b, eid in zip(r.vertices, r.vertices[1:], r.edges):
            e = inst.edges.get(eid)
            if e is None or e.ends != frozenset((a, b)):
                fails.append(f"route of demand {g.id} uses edge {eid} between {a} and {b}")
    extra = set(routing.routes) - {g.id for g in inst.demands}
    if extra:
        fails.append(f"routes for unknown demands {sorted(extra)}")
    return fails


# ---------------------------------------------------------------------------
# assignment to parallel edges
# ---------------------------------------------------------------------------

def _by_value(demands: Iterable[Demand]) -> list[Demand]:
    return sorted(demands, key=lambda g: (-g.value, g.id))


def assign_to_parallel(demands: Sequence[Demand], edges: Sequence[tuple[int, Fraction]],
                       d_max) -> dict[int, int]:
    """Map each demand to one of the parallel ``edges`` (``(id, cap)`` pairs)
    so that no edge carries more than cap + d_max.

    Edges are filled in id order, each with the longest prefix of the
    remaining demands (largest first) that fits.
    """
    d_max = Fraction(d_max)
    total = sum((g.value for g in demands), Fraction(0))
    if not demands:
        return {}
    if not edges or total > d_max + sum((c for _, c in edges), Fraction(0)):
        raise PreconditionViolated(
            f"demand total {total} exceeds d_max + capacity on {[eid for eid, _ in edges]}")
    rest = _by_value(demands)
    out = {}
    for eid, cap in sorted(edges):
        load = Fraction(0)
        k = 0
        while k < len(rest) and load + rest[k].value <= cap + d_max:
            load += rest[k].value
            out[rest[k].id] = eid
            k += 1
        rest = rest[k:]
        if not rest:
            return out
    raise PreconditionViolated(f"{len(rest)} demands left after filling every edge")


def first_fit(demands: Sequence[Demand], edges: Sequence[tuple[int, Fraction]],
              d_max) -> tuple[dict[int, int], list[Demand]]:
    """Largest-first first-fit.  Returns the assignment and the demands that
    fit nowhere; each leftover overfills every edge, so every edge ends
    above its capacity whenever something is left over."""
    d_max = Fraction(d_max)
    load = {eid: Fraction(0) for eid, _ in edges}
    caps = dict(edges)
    out, left = {}, []
    for g in _by_value(demands):
        for eid in sorted(caps):
            if load[eid] + g.value <= caps[eid] + d_max:
                load[eid] += g.value
                out[g.id] = eid
                break
        else:
            left.append(g)
    return out, left


# ---------------------------------------------------------------------------
# ears
# ---------------------------------------------------------------------------

@dataclass
class EarStep:
    face: tuple                     # i_1 .. i_l in original labels
    case: int
    assignment: dict[int, int]      # segment demand -> edge id
    residual: list[list[tuple[int, Fraction]]]  # per segment: E_j with c - d_e
    demands: dict[int, Demand]      # segment demands
    e0: int | None = None
    e0_cap: Fraction | None = None
    split: int | None = None        # overloaded segment (0-based)
    leftover: list[int] = field(default_factory=list)
    sharp: dict[int, int] = field(default_factory=dict)  # g -> g#

    @property
    def segments(self) -> list[tuple]:
        f = self.face
        return list(zip(f, f[1:]))


def find_ear(inst: MultiInstance) -> Face | None:
    """Leaf face of the collapsed weak dual, rotated so that {i_l, i_1} is
    its edge towards the rest of the graph.  ``None`` on two vertices."""
    alive = sorted(inst.vertices)
    m = len(alive)
    if m == 2:
        if not inst.edges:
            raise NotTwoConnected("two vertices without an edge")
        return None
    if m < 2:
        raise NotTwoConnected(f"{m} vertices left")
    pos = {v: k + 1 for k, v in enumerate(alive)}
    pairs = {edge(pos[e.u], pos[e.v]) for e in inst.edges.values()}
    for k in range(1, m + 1):
        if edge(k, k % m + 1) not in pairs:
            raise NotTwoConnected(f"no edge between {alive[k - 1]} and {alive[k % m]}")
    chords = [p for p in pairs if not (p[1] - p[0] == 1 or (p[0] == 1 and p[1] == m))]
    try:
        g = build_graph(m, chords)
    except GeometryError as exc:
        raise NotTwoConnected(f"not an outerplanar cycle-with-chords: {exc}") from exc
    chord_edges = {f: [e for e in f.edges if e in g.chords] for f in g.faces}
    leaves = [f for f in g.faces if len(chord_edges[f]) <= 1]
    f = min(leaves, key=lambda x: (min(x.vertex_seq), x.vertex_seq))
    f = f.rotated(chord_edges[f][0]) if chord_edges[f] else f.canonical()
    return Face(tuple(alive[v - 1] for v in f.vertex_seq))


def _between(inst: MultiInstance, a, b) -> tuple[list[SupplyEdge], list[Demand]]:
    key = frozenset((a, b))
    es = sorted((e for e in inst.edges.values() if e.ends == key), key=lambda e: e.id)
    ds = sorted((g for g in inst.demands if g.ends == key), key=lambda g: g.id)
    return es, ds


def ear_case(inst: MultiInstance, ear: Face, d_max) -> EarStep:
    d_max = Fraction(d_max)
    seq = ear.vertex_seq
    segs = list(zip(seq, seq[1:]))
    bundles = [_between(inst, a, b) for a, b in segs]
    over = [j for j, (es, ds) in enumerate(bundles)
            if sum((g.value for g in ds), Fraction(0)) > d_max + sum((e.cap for e in es), Fraction(0))]
    if len(over) > 1:
        raise TwoOverloadedSegments(f"segments {over} of ear {seq} are both overloaded")
    assignment: dict[int, int] = {}
    leftover: list[Demand] = []
    for j, (es, ds) in enumerate(bundles):
        pairs = [(e.id, e.cap) for e in es]
        if j in over:
            got, leftover = first_fit(ds, pairs, d_max)
            assignment.update(got)
        else:
            assignment.update(assign_to_parallel(ds, pairs, d_max))
    seg_demands = {g.id: g for _, ds in bundles for g in ds}
    residual = []
    for es, ds in bundles:
        d_e = {e.id: Fraction(0) for e in es}
        for g in ds:
            if g.id in assignment:
                d_e[assignment[g.id]] += g.value
        residual.append([(e.id, e.cap - d_e[e.id]) for e in es if d_e[e.id] <= e.cap])
    step = EarStep(seq, 2 if leftover else 1, assignment, residual, seg_demands)
    if leftover:
        step.split = over[0]
        step.leftover = [g.id for g in leftover]
        if step.residual[step.split]:
            raise RoutingError("overloaded segment kept an unsaturated edge")
    else:
        step.e0_cap = min(sum((c for _, c in r), Fraction(0)) for r in residual)
    return step


def _contract(inst: MultiInstance, step: EarStep, edge_ids, demand_ids) -> MultiInstance:
    seq = step.face
    interior = set(seq[1:-1])
    seg_keys = {frozenset(p) for p in step.segments}
    edges = {eid: e for eid, e in inst.edges.items() if e.ends not in seg_keys}
    demands = [g for g in inst.demands if g.id not in step.demands]
    first, last = seq[0], seq[-1]
    if step.case == 1:
        # a segment with every edge saturated leaves nothing to re-thread
        # through, so e_0 is only added when each segment kept an edge
        if all(step.residual):
            step.e0 = next(edge_ids)
            edges[step.e0] = SupplyEdge(step.e0, first, last, step.e0_cap)
    else:
        for gid in step.leftover:
            h = next(demand_ids)
            step.sharp[gid] = h
            demands.append(Demand(h, first, last, step.demands[gid].value))
    verts = tuple(v for v in inst.vertices if v not in interior)
    return MultiInstance(verts, edges, tuple(demands))


contract_case1 = contract_case2 = _contract


def _thread(demands: Sequence[Demand], residual: list[list[tuple[int, Fraction]]],
            segs: Sequence[int], d_max) -> dict[int, list[int]]:
    """Edge ids per demand along consecutive segments ``segs``."""
    out: dict[int, list[int]] = {g.id: [] for g in demands}
    for j in segs:
        got = assign_to_parallel(demands, residual[j], d_max)
        for g in demands:
            out[g.id].append(got[g.id])
    return out


def backtrack(step: EarStep, routing: UnsplittableRouting, demands_next: Mapping[int, Demand],
              d_max) -> UnsplittableRouting:
    seq = step.face
    ell = len(seq)
    routes: dict[int, Route] = {}
    for gid, eid in step.assignment.items():
        g = step.demands[gid]
        routes[gid] = Route((g.u, g.v), (eid,))
    if step.case == 1:
        through = [gid for gid, r in routing.routes.items() if step.e0 is not None and step.e0 in r.edges]
        d0 = [demands_next[gid] for gid in through]
        threads = _thread(d0, step.residual, range(ell - 1), d_max)
        for gid, r in routing.routes.items():
            if gid not in threads:
                routes[gid] = r
                continue
            k = r.edges.index(step.e0)
            fwd = Route(seq, tuple(threads[gid]))
            piece = fwd if r.vertices[k] == seq[0] else fwd.reversed()
            routes[gid] = Route(r.vertices[:k] + piece.vertices + r.vertices[k + 2:],
                                r.edges[:k] + piece.edges + r.edges[k + 1:])
        return UnsplittableRouting(routes)

    jp = step.split
    sharp_ids = set(step.sharp.values())
    for gid, r in routing.routes.items():
        if gid not in sharp_ids:
            routes[gid] = r
    left = [step.demands[gid] for gid in step.leftover]
    side_a = _thread(left, step.residual, range(jp), d_max)
    side_b = _thread(left, step.residual, range(jp + 1, ell - 1), d_max)
    for g in left:
        y = routing.routes[step.sharp[g.id]]
        if y.vertices[0] != seq[0]:
            y = y.reversed()
        # seq[jp] -> ... -> i_1, then y to i_l, then i_l -> ... -> seq[jp+1]
        a = Route(tuple(seq[jp::-1]), tuple(side_a[g.id][::-1]))
        b = Route(tuple(seq[:jp:-1]), tuple(side_b[g.id][::-1]))
        full = Route(a.vertices + y.vertices[1:] + b.vertices[1:], a.edges + y.edges + b.edges)
        routes[g.id] = full if g.u == seq[jp] else full.reversed()
    return UnsplittableRouting(routes)


def _solve_base(inst: MultiInstance, d_max) -> UnsplittableRouting:
    u, v = sorted(inst.vertices)
    es, ds = _between(inst, u, v)
    got = assign_to_parallel(ds, [(e.id, e.cap) for e in es], d_max)
    return UnsplittableRouting({g.id: Route((g.u, g.v), (got[g.id],)) for g in inst.demands})


def _cut_condition(inst: MultiInstance):
    alive = sorted(inst.vertices)
    if len(alive) == 2:
        total_d = sum((g.value for g in inst.demands), Fraction(0))
        total_c = sum((e.cap for e in inst.edges.values()), Fraction(0))
        return total_d <= total_c, total_c - total_d
    pos = {v: k + 1 for k, v in enumerate(alive)}
    relabelled = MultiInstance(
        tuple(range(1, len(alive) + 1)),
        {eid: SupplyEdge(eid, pos[e.u], pos[e.v], e.cap) for eid, e in inst.edges.items()},
        tuple(Demand(g.id, pos[g.u], pos[g.v], g.value) for g in inst.demands))
    simple, _ = collapse_parallel(relabelled)
    rep = check_cut_condition(simple)
    return rep.holds, rep.slack


def solve_good(inst: MultiInstance, d_max=None, check: bool = True,
               steps: list[EarStep] | None = None) -> UnsplittableRouting:
    """Route every (good) demand on one path with load <= cap + d_max.

    Vertices must be sortable with the sorted order tracing the outer cycle.
    ``d_max`` defaults to the instance's largest demand.
    """
    bad = [g.id for g in inst.demands if not inst.is_good(g)]
    if bad:
        raise BadDemandPresent(f"demands {bad} have no parallel supply edge")
    d_max = inst.d_max if d_max is None else Fraction(d_max)
    if check:
        holds, slack = _cut_condition(inst)
        if not holds:
            raise CutConditionViolated(f"cut condition fails (slack {slack})")
    edge_ids = itertools.count(max(inst.edges, default=0) + 1)
    demand_ids = itertools.count(max((g.id for g in inst.demands), default=0) + 1)
    levels: list[tuple[EarStep, MultiInstance]] = []
    cur = inst
    while True:
        ear = find_ear(cur)
        if ear is None:
            break
        step = ear_case(cur, ear, d_max)
        cur = _contract(cur, step, edge_ids, demand_ids)
        levels.append((step, cur))
    routing = _solve_base(cur, d_max)
    for step, nxt in reversed(levels):
        routing = backtrack(step, routing, {g.id: g for g in nxt.demands}, d_max)
    if steps is not None:
        steps.extend(s for s, _ in levels)
    if check:
        fails = check_routing(inst, routing)
        viol = routing.violation(inst)
        if viol > d_max:
            fails.append(f"violation {viol} exceeds d_max {d_max}")
        if fails:
            raise RoutingError("; ".join(fails))
    return routing
