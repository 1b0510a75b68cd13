"""Multicommodity instances, cut-condition checks and preprocessing.

Two containers are used.  :class:`McfInstance` is the simple form that the
pinning machinery consumes (an :class:`OuterplanarGraph` plus capacities keyed
by sorted vertex pair).  :class:`MultiInstance` keeps explicit supply edge ids,
allows parallel edges and arbitrary vertex labels; it is what files parse into
and what the good-demand router works on.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Hashable, Iterable, Mapping, Sequence

import networkx as nx

from .geometry import (
    Edge,
    GeometryError,
    Interval,
    OuterplanarGraph,
    build_graph,
    edge,
    interval_cut,
    intervals,
)


class InstanceError(ValueError):
    pass


class MissingOuterEdge(InstanceError):
    pass


class NotOuterplanar(InstanceError):
    pass


class TooLarge(InstanceError):
    pass


class DisconnectedSupply(InstanceError):
    pass


class DemandAcrossComponents(DisconnectedSupply):
    pass


class CapacityDecreased(InstanceError):
    pass


class CutConditionViolated(InstanceError):
    def __init__(self, message: str, report: "CutReport | None" = None):
        super().__init__(message)
        self.report = report


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


@dataclass(frozen=True)
class Demand:
    id: int
    u: Hashable
    v: Hashable
    value: Fraction

    def __post_init__(self):
        if self.u == self.v:
            raise InstanceError(f"demand {self.id} is a loop at {self.u}")
        object.__setattr__(self, "value", as_fraction(self.value))
        if self.value < 0:
            raise InstanceError(f"demand {self.id} has negative value")

    @property
    def ends(self) -> frozenset:
        return frozenset((self.u, self.v))


@dataclass(frozen=True)
class SupplyEdge:
    id: int
    u: Hashable
    v: Hashable
    cap: Fraction

    def __post_init__(self):
        if self.u == self.v:
            raise InstanceError(f"supply edge {self.id} is a loop")
        object.__setattr__(self, "cap", as_fraction(self.cap))
        if self.cap < 0:
            raise InstanceError(f"supply edge {self.id} has negative capacity")

    @property
    def ends(self) -> frozenset:
        return frozenset((self.u, self.v))

    def other(self, w):
        return self.v if w == self.u else self.u


def d_max(demands: Iterable[Demand]) -> Fraction:
    return max((g.value for g in demands), default=Fraction(0))


@dataclass(frozen=True, eq=False)
class McfInstance:
    graph: OuterplanarGraph
    caps: Mapping[Edge, Fraction]
    demands: tuple[Demand, ...] = ()

    def __post_init__(self):
        caps = {edge(*e): as_fraction(c) for e, c in self.caps.items()}
        if set(caps) != self.graph.edge_set:
            raise InstanceError("capacities must be given for exactly the graph edges")
        if any(c < 0 for c in caps.values()):
            raise InstanceError("negative capacity")
        object.__setattr__(self, "caps", caps)
        object.__setattr__(self, "demands", tuple(self.demands))
        n = self.graph.n
        for g in self.demands:
            if not (1 <= g.u <= n and 1 <= g.v <= n):
                raise InstanceError(f"demand {g.id} endpoint outside 1..{n}")

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def d_max(self) -> Fraction:
        return d_max(self.demands)

    def is_good(self, g: Demand) -> bool:
        return self.graph.has_edge(g.u, g.v)

    def demand(self, gid: int) -> Demand:
        for g in self.demands:
            if g.id == gid:
                return g
        raise KeyError(gid)

    # uniform view used by the generic cut routines
    def vertex_list(self) -> list:
        return list(range(1, self.n + 1))

    def supply_triples(self) -> list[tuple]:
        return [(a, b, c) for (a, b), c in self.caps.items()]


@dataclass(frozen=True, eq=False)
class MultiInstance:
    vertices: tuple
    edges: Mapping[int, SupplyEdge]
    demands: tuple[Demand, ...] = ()

    def __post_init__(self):
        edges = dict(self.edges)
        vs = set(self.vertices)
        for eid, e in edges.items():
            if eid != e.id:
                raise InstanceError(f"edge key {eid} != edge id {e.id}")
            if e.u not in vs or e.v not in vs:
                raise InstanceError(f"edge {eid} has an unknown endpoint")
        for g in self.demands:
            if g.u not in vs or g.v not in vs:
                raise InstanceError(f"demand {g.id} has an unknown endpoint")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "demands", tuple(self.demands))

    @property
    def d_max(self) -> Fraction:
        return d_max(self.demands)

    def edges_between(self, u, v) -> list[SupplyEdge]:
        key = frozenset((u, v))
        return sorted((e for e in self.edges.values() if e.ends == key), key=lambda e: e.id)

    def is_good(self, g: Demand) -> bool:
        return any(e.ends == g.ends for e in self.edges.values())

    def vertex_list(self) -> list:
        return list(self.vertices)

    def supply_triples(self) -> list[tuple]:
        return [(e.u, e.v, e.cap) for e in self.edges.values()]


def from_simple(inst: McfInstance) -> MultiInstance:
    """Give each simple edge an id (1-based, sorted edge order)."""
    edges = {k: SupplyEdge(k, a, b, inst.caps[(a, b)])
             for k, (a, b) in enumerate(inst.graph.edges, start=1)}
    return MultiInstance(tuple(range(1, inst.n + 1)), edges, inst.demands)


def make_instance(n: int, chords: Iterable[tuple[int, int]], caps, demands) -> McfInstance:
    """Convenience constructor.

    ``caps`` is a scalar (uniform) or a mapping edge -> capacity; ``demands``
    is a sequence of ``(u, v, value)`` triples numbered from 1.
    """
    g = build_graph(n, chords)
    if isinstance(caps, Mapping):
        cmap = {edge(*e): as_fraction(c) for e, c in caps.items()}
    else:
        cmap = {e: as_fraction(caps) for e in g.edges}
    ds = tuple(Demand(k, u, v, as_fraction(val)) for k, (u, v, val) in enumerate(demands, start=1))
    return McfInstance(g, cmap, ds)


# ---------------------------------------------------------------------------
# cut condition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CutReport:
    holds: bool
    witness: Interval | frozenset | None = None
    slack: Fraction | None = None
    tight_cuts: tuple = ()

    def __bool__(self) -> bool:
        return self.holds


def _cut_slack(side: set | frozenset, supply: Sequence[tuple], demands: Sequence[Demand]) -> Fraction:
    cap = sum((c for a, b, c in supply if (a in side) != (b in side)), Fraction(0))
    dem = sum((g.value for g in demands if (g.u in side) != (g.v in side)), Fraction(0))
    return cap - dem


def _report(slacks: list[tuple[object, Fraction]], tol) -> CutReport:
    if not slacks:
        return CutReport(True)
    worst, worst_slack = min(slacks, key=lambda t: t[1])
    tight = tuple(s for s, v in slacks if v == 0)
    holds = worst_slack >= -tol
    return CutReport(holds, worst if worst_slack < 0 else None,
                     worst_slack if worst_slack < 0 else None, tight)


def check_cut_condition(inst: McfInstance, tol=0) -> CutReport:
    """Cut condition over the n(n-1) interval cuts, in exact arithmetic.

    ``tol`` only matters for instances whose capacities are float-derived.
    """
    supply = inst.supply_triples()
    slacks = [(iv, _cut_slack(iv.members, supply, inst.demands)) for iv in intervals(inst.n)]
    return _report(slacks, tol)


def brute_cut_condition(inst: McfInstance | MultiInstance, tol=0, limit: int = 20) -> CutReport:
    """Cut condition over every vertex subset (the vertex listed first is
    fixed on one side, so each cut is visited once)."""
    vs = inst.vertex_list()
    if len(vs) > limit:
        raise TooLarge(f"{len(vs)} vertices exceeds the brute-force limit {limit}")
    supply = inst.supply_triples()
    slacks = []
    first, rest = vs[0], vs[1:]
    for r in range(0, len(rest)):
        for combo in itertools.combinations(rest, r):
            side = frozenset((first,) + combo)
            slacks.append((side, _cut_slack(side, supply, inst.demands)))
    return _report(slacks, tol)


def interval_slack(inst: McfInstance, iv: Interval) -> Fraction:
    cut = interval_cut(inst.graph, iv)
    cap = sum((inst.caps[e] for e in cut), Fraction(0))
    dem = sum((g.value for g in inst.demands if (g.u in iv) != (g.v in iv)), Fraction(0))
    return cap - dem


# ---------------------------------------------------------------------------
# cut-vertex splitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Block:
    """One 2-connected block, relabelled 1..m clockwise when m >= 3.

    ``labels[new] = original``; ``pieces[new_demand_id] = (orig_id, index)``
    where ``index`` is the position of this segment along the original demand.
    """
    instance: MultiInstance
    labels: dict
    pieces: dict[int, tuple[int, int]]

    def original(self, v):
        return self.labels[v]


def _simple_graph(inst: MultiInstance) -> nx.Graph:
    G = nx.Graph()
    G.add_nodes_from(inst.vertices)
    for e in inst.edges.values():
        G.add_edge(e.u, e.v)
    return G


def _sort_key(v):
    return (type(v).__name__, v) if isinstance(v, (int, str)) else (type(v).__name__, repr(v))


def _is_outer_order(order: list, G: nx.Graph) -> bool:
    m = len(order)
    if any(not G.has_edge(order[k], order[(k + 1) % m]) for k in range(m)):
        return False
    pos = {v: k + 1 for k, v in enumerate(order)}
    chords = [edge(pos[a], pos[b]) for a, b in G.edges()]
    chords = [c for c in chords if not (c[1] - c[0] == 1 or (c[0] == 1 and c[1] == m))]
    try:
        build_graph(m, chords)
    except GeometryError:
        return False
    return True


def outer_order(G: nx.Graph) -> list:
    """Clockwise outer-face order of a 2-connected outerplanar graph.

    Keeps the existing order when the sorted labels already form the outer
    cycle; otherwise adds an apex adjacent to every vertex, takes a planar
    embedding and reads the rotation around the apex.
    """
    nodes = sorted(G.nodes, key=_sort_key)
    if len(nodes) <= 2:
        return nodes
    if _is_outer_order(nodes, G):
        return nodes
    apex = object()
    H = G.copy()
    H.add_edges_from((apex, v) for v in nodes)
    planar, emb = nx.check_planarity(H)
    if not planar:
        raise NotOuterplanar("block is not outerplanar")
    order = list(emb.neighbors_cw_order(apex))
    start = order.index(nodes[0])
    order = order[start:] + order[:start]
    if _sort_key(order[-1]) < _sort_key(order[1]):
        order = [order[0]] + order[1:][::-1]
    if not _is_outer_order(order, G):
        raise NotOuterplanar("block is not outerplanar")
    return order


def split_blocks(inst: MultiInstance) -> list[Block]:
    """Split at cut vertices; each demand is cut at every cut vertex that
    separates its endpoints (the path through the block-cut tree)."""
    G = _simple_graph(inst)
    comp_of = {}
    for k, comp in enumerate(nx.connected_components(G)):
        for v in comp:
            comp_of[v] = k
    for g in inst.demands:
        if comp_of[g.u] != comp_of[g.v]:
            raise DemandAcrossComponents(f"demand {g.id} joins different supply components")
    if len(set(comp_of.values())) > 1:
        raise DisconnectedSupply("supply graph is not connected")

    blocks = [frozenset(b) for b in nx.biconnected_components(G)]
    blocks.sort(key=lambda b: sorted(map(_sort_key, b)))
    cut_vertices = set(nx.articulation_points(G))

    T = nx.Graph()
    for k, b in enumerate(blocks):
        T.add_node(("B", k))
        for v in b & cut_vertices:
            T.add_edge(("B", k), ("C", v))

    def node_of(v):
        if v in cut_vertices:
            return ("C", v)
        for k, b in enumerate(blocks):
            if v in b:
                return ("B", k)
        raise DemandAcrossComponents(f"vertex {v} has no incident supply edge")

    seg_demands: dict[int, list[tuple[int, int, object, object, Fraction]]] = {k: [] for k in range(len(blocks))}
    for g in inst.demands:
        path = nx.shortest_path(T, node_of(g.u), node_of(g.v))
        stops = [g.u] + [x[1] for x in path if x[0] == "C" and x[1] not in (g.u, g.v)] + [g.v]
        bks = [x[1] for x in path if x[0] == "B"]
        if not bks:
            # both endpoints are the same cut vertex node: impossible for u != v
            raise InstanceError(f"demand {g.id} could not be placed")
        for idx, (a, b, k) in enumerate(zip(stops, stops[1:], bks)):
            seg_demands[k].append((g.id, idx, a, b, g.value))

    n_pieces: dict[int, int] = {}
    for segs in seg_demands.values():
        for gid, *_ in segs:
            n_pieces[gid] = n_pieces.get(gid, 0) + 1
    fresh = itertools.count(max((g.id for g in inst.demands), default=0) + 1)
    out = []
    for k, b in enumerate(blocks):
        sub = G.subgraph(b)
        order = outer_order(sub)
        new = {v: i + 1 for i, v in enumerate(order)}
        labels = {i + 1: v for i, v in enumerate(order)}
        edges = {e.id: SupplyEdge(e.id, new[e.u], new[e.v], e.cap)
                 for e in inst.edges.values() if e.u in b and e.v in b}
        pieces = {}
        ds = []
        for gid, idx, a, bb, val in seg_demands[k]:
            if n_pieces[gid] == 1:
                did = gid
            else:
                did = next(fresh)
            pieces[did] = (gid, idx)
            ds.append(Demand(did, new[a], new[bb], val))
        out.append(Block(MultiInstance(tuple(range(1, len(order) + 1)), edges, tuple(ds)), labels, pieces))
    return out


# ---------------------------------------------------------------------------
# parallel edges
# ---------------------------------------------------------------------------

ExpansionMap = dict[Edge, tuple[tuple[int, Fraction], ...]]


def collapse_parallel(inst: MultiInstance) -> tuple[McfInstance, ExpansionMap]:
    """Merge parallel supply edges of a block labelled 1..n clockwise."""
    n = len(inst.vertices)
    if tuple(inst.vertices) != tuple(range(1, n + 1)):
        raise InstanceError("collapse_parallel needs vertices labelled 1..n")
    groups: dict[Edge, list[SupplyEdge]] = {}
    for e in inst.edges.values():
        groups.setdefault(edge(e.u, e.v), []).append(e)
    for i in range(1, n + 1):
        if edge(i, i % n + 1) not in groups:
            raise MissingOuterEdge(f"outer edge {{{i},{i % n + 1}}} is missing")
    chords = [e for e in groups if not (e[1] - e[0] == 1 or (e[0] == 1 and e[1] == n))]
    graph = build_graph(n, chords)
    emap = {e: tuple((x.id, x.cap) for x in sorted(es, key=lambda x: x.id)) for e, es in groups.items()}
    caps = {e: sum((c for _, c in parts), Fraction(0)) for e, parts in emap.items()}
    return McfInstance(graph, caps, inst.demands), emap


def distribute_capacity_increase(emap: ExpansionMap, inflated: Mapping[Edge, Fraction]) -> dict[int, Fraction]:
    """Give the whole increase on each collapsed edge to its first (lowest id)
    original edge."""
    out = {}
    for e, parts in emap.items():
        base = sum((c for _, c in parts), Fraction(0))
        delta = as_fraction(inflated[e]) - base
        if delta < 0:
            raise CapacityDecreased(f"edge {e}: inflated capacity below original")
        for k, (eid, c) in enumerate(parts):
            out[eid] = c + delta if k == 0 else c
    return out
