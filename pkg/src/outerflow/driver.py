"""End-to-end solve: pinning, good routing, path stitching; plus verification,
a brute-force oracle and a seeded instance generator."""
from __future__ import annotations

import logging
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from math import prod

from .geometry import _crosses, build_graph, edge
from .goodroute import Route, RoutingError, UnsplittableRouting, check_routing, solve_good
from .instance import (
    CutConditionViolated,
    Demand,
    McfInstance,
    MultiInstance,
    SupplyEdge,
    TooLarge,
    as_fraction,
    check_cut_condition,
    collapse_parallel,
    distribute_capacity_increase,
    from_simple,
    split_blocks,
)
from .pinning import run_pinning
from .ringload import RingBackend, RingInstance, arc_edges, get_backend

log = logging.getLogger(__name__)

ORACLE_LIMIT = 10 ** 6


class InvalidParams(ValueError):
    pass


@dataclass
class SolveResult:
    instance: MultiInstance
    routing: UnsplittableRouting
    alpha: Fraction
    backend: str
    bound: Fraction
    violation: Fraction
    profile: dict[int, Fraction]     # edge id -> load - cap
    trace: list[str] = field(default_factory=list)


def as_multi(inst: McfInstance | MultiInstance) -> MultiInstance:
    return inst if isinstance(inst, MultiInstance) else from_simple(inst)


def _stitch(block: MultiInstance, g: Demand, pieces: list[Route]) -> Route:
    """Shortest g.u-g.v path inside the union of ``pieces``; ties go to the
    lexicographically smallest vertex sequence, then the smallest edge id."""
    best: dict[tuple, int] = {}
    for r in pieces:
        for a, b, eid in zip(r.vertices, r.vertices[1:], r.edges):
            key = edge(a, b)
            best[key] = min(best.get(key, eid), eid)
    adj: dict = {}
    for a, b in best:
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    dist = {g.v: 0}
    queue = deque([g.v])
    while queue:
        x = queue.popleft()
        for y in adj.get(x, ()):
            if y not in dist:
                dist[y] = dist[x] + 1
                queue.append(y)
    if g.u not in dist:
        raise RoutingError(f"no path for demand {g.id} inside its pinned routes")
    verts = [g.u]
    while verts[-1] != g.v:
        x = verts[-1]
        verts.append(min(y for y in adj[x] if dist.get(y) == dist[x] - 1))
    return Route(tuple(verts), tuple(best[edge(a, b)] for a, b in zip(verts, verts[1:])))


def _solve_block(block, backend: RingBackend, check: bool, trace: list[str], tag: str) -> dict[int, Route]:
    inst = block.instance
    if len(inst.vertices) == 2:
        z = solve_good(inst, check=check)
        return dict(z.routes)
    simple, emap = collapse_parallel(inst)
    rep = check_cut_condition(simple)
    if not rep.holds:
        raise CutConditionViolated(f"cut condition fails at {rep.witness} (slack {rep.slack})", rep)
    out = run_pinning(simple, backend, check=check)
    trace.extend(tag + r.line() for r in out.trace)
    caps = distribute_capacity_increase(emap, out.caps)
    good = MultiInstance(
        inst.vertices,
        {eid: SupplyEdge(eid, e.u, e.v, caps[eid]) for eid, e in inst.edges.items()},
        tuple(out.demands[h] for h in sorted(out.demands)),
    )
    z = solve_good(good, check=check)
    return {g.id: _stitch(inst, g, [z.routes[h] for h in out.partition[g.id]]) for g in inst.demands}


def solve(inst: McfInstance | MultiInstance, backend: RingBackend | str = "exact",
          check: bool = True) -> SolveResult:
    multi = as_multi(inst)
    backend = get_backend(backend)
    blocks = split_blocks(multi)
    trace: list[str] = []
    segments: dict[int, list[tuple[int, Route]]] = {g.id: [] for g in multi.demands}
    for k, block in enumerate(blocks):
        tag = f"block {k + 1} " if len(blocks) > 1 else ""
        routes = _solve_block(block, backend, check, trace, tag)
        for did, r in routes.items():
            orig, idx = block.pieces[did]
            segments[orig].append((idx, Route(tuple(block.labels[v] for v in r.vertices), r.edges)))
    routing = UnsplittableRouting()
    for gid in sorted(segments):
        parts = [r for _, r in sorted(segments[gid], key=lambda x: x[0])]
        verts, eids = parts[0].vertices, parts[0].edges
        for r in parts[1:]:
            verts += r.vertices[1:]
            eids += r.edges
        routing.routes[gid] = Route(verts, eids)
    loads = routing.loads(multi)
    profile = {eid: loads[eid] - e.cap for eid, e in sorted(multi.edges.items())}
    violation = max([Fraction(0), *profile.values()])
    bound = (2 * backend.alpha + 1) * multi.d_max
    if check:
        fails = check_routing(multi, routing)
        if violation > bound:
            fails.append(f"violation {violation} exceeds bound {bound}")
        if fails:
            raise RoutingError("; ".join(fails))
    return SolveResult(multi, routing, backend.alpha, backend.name, bound, violation, profile, trace)


@dataclass
class VerifyReport:
    failures: list[str]
    violation: Fraction
    bound: Fraction

    @property
    def ok(self) -> bool:
        return not self.failures


def verify(inst: McfInstance | MultiInstance, routing: UnsplittableRouting, multiplier) -> VerifyReport:
    multi = as_multi(inst)
    bound = as_fraction(multiplier) * multi.d_max
    fails = check_routing(multi, routing)
    viol = Fraction(0)
    if not fails:
        loads = routing.loads(multi)
        for eid, e in sorted(multi.edges.items()):
            over = loads[eid] - e.cap
            viol = max(viol, over)
            if over > bound:
                fails.append(f"edge {eid} carries {loads[eid]} > {e.cap} + {bound}")
    return VerifyReport(fails, viol, bound)


# ---------------------------------------------------------------------------
# oracle
# ---------------------------------------------------------------------------

def simple_paths(multi: MultiInstance, s, t) -> list[Route]:
    """Every simple s-t path, parallel edges counted separately."""
    inc: dict = {v: [] for v in multi.vertices}
    for eid, e in sorted(multi.edges.items()):
        inc[e.u].append((e.v, eid))
        inc[e.v].append((e.u, eid))
    for v in inc:
        inc[v].sort()
    out = []

    def dfs(v, verts, eids, seen):
        if v == t:
            out.append(Route(tuple(verts), tuple(eids)))
            return
        for w, eid in inc[v]:
            if w not in seen:
                seen.add(w)
                verts.append(w)
                eids.append(eid)
                dfs(w, verts, eids, seen)
                seen.discard(w)
                verts.pop()
                eids.pop()

    dfs(s, [s], [], {s})
    return out


def oracle_unsplittable(inst: McfInstance | MultiInstance,
                        limit: int = ORACLE_LIMIT) -> tuple[Fraction, UnsplittableRouting]:
    """Minimum over all single-path routings of max(0, max_e load - cap)."""
    multi = as_multi(inst)
    demands = sorted(multi.demands, key=lambda g: (-g.value, g.id))
    options = []
    for g in demands:
        options.append(simple_paths(multi, g.u, g.v))
        if prod(len(o) for o in options) > limit:
            raise TooLarge(f"more than {limit} path combinations")
    caps = {eid: e.cap for eid, e in multi.edges.items()}
    load = {eid: Fraction(0) for eid in caps}
    best = [None, None]
    choice: list[Route] = []
    start = max([Fraction(0), *(-c for c in caps.values())])

    def rec(k: int, cur: Fraction):
        if best[0] is not None and cur >= best[0]:
            return
        if k == len(demands):
            best[0] = cur
            best[1] = list(choice)
            return
        g = demands[k]
        for r in options[k]:
            worst = cur
            for eid in r.edges:
                load[eid] += g.value
                worst = max(worst, load[eid] - caps[eid])
            choice.append(r)
            rec(k + 1, worst)
            choice.pop()
            for eid in r.edges:
                load[eid] -= g.value
            if best[0] == 0:
                return

    rec(0, start)
    routing = UnsplittableRouting({g.id: r for g, r in zip(demands, best[1])})
    routing.routes = dict(sorted(routing.routes.items()))
    return best[0], routing


# ---------------------------------------------------------------------------
# generator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GenParams:
    n: int
    chord_count: int = 0
    demand_count: int = 0
    slack: Fraction | None = None   # None: a quarter of d_max
    seed: int = 0


def random_chords(n: int, count: int, rng: random.Random) -> list[tuple[int, int]]:
    if not 0 <= count <= n - 3:
        raise InvalidParams(f"{count} chords do not fit in a {n}-gon")
    chords: list[tuple[int, int]] = []
    for _ in range(count):
        cands = [(a, b) for a in range(1, n + 1) for b in range(a + 2, n + 1)
                 if not (a == 1 and b == n) and (a, b) not in chords
                 and not any(_crosses((a, b), c) for c in chords)]
        chords.append(rng.choice(cands))
    return sorted(chords)


def _random_path(adj: dict, s: int, t: int, rng: random.Random) -> list[int]:
    """Simple path from a randomised depth-first search."""
    stack = [(s, None)]
    parent = {}
    while stack:
        v, p = stack.pop()
        if v in parent:
            continue
        parent[v] = p
        if v == t:
            break
        nbrs = list(adj[v])
        rng.shuffle(nbrs)
        stack.extend((w, v) for w in nbrs if w not in parent)
    path = [t]
    while path[-1] != s:
        path.append(parent[path[-1]])
    return path[::-1]


def gen_instance(params: GenParams) -> McfInstance:
    n, k, m = params.n, params.chord_count, params.demand_count
    if n < 3:
        raise InvalidParams("n must be at least 3")
    if not 0 <= k <= n - 3:
        raise InvalidParams(f"chord_count must lie in [0, {n - 3}]")
    if m < 0:
        raise InvalidParams("demand_count must be nonnegative")
    if params.slack is not None and as_fraction(params.slack) < 0:
        raise InvalidParams("slack must be nonnegative")
    rng = random.Random(params.seed)
    g = build_graph(n, random_chords(n, k, rng))
    demands = []
    for gid in range(1, m + 1):
        u, v = rng.sample(range(1, n + 1), 2)
        demands.append(Demand(gid, u, v, Fraction(rng.randint(1, 20), 20)))
    loads = {e: Fraction(0) for e in g.edges}
    for d in demands:
        share = Fraction(rng.randint(0, 4), 4)
        for part, frac in ((_random_path(g.adjacency, d.u, d.v, rng), share),
                           (_random_path(g.adjacency, d.u, d.v, rng), 1 - share)):
            for a, b in zip(part, part[1:]):
                loads[edge(a, b)] += frac * d.value
    dm = max((d.value for d in demands), default=Fraction(0))
    slack = dm / 4 if params.slack is None else as_fraction(params.slack)
    return McfInstance(g, {e: c + slack for e, c in loads.items()}, tuple(demands))


def gen_good_instance(params: GenParams, extra_parallel: int = 0) -> MultiInstance:
    """Multigraph instance whose demands all sit on supply edges.

    ``extra_parallel`` random edges are duplicated.  Capacities are the loads
    of a random fractional routing plus slack, so the cut condition holds.
    """
    base = gen_instance(GenParams(params.n, params.chord_count, 0, 0, params.seed))
    rng = random.Random(params.seed * 7919 + 1)
    pairs = list(base.graph.edges)
    pairs += [rng.choice(base.graph.edges) for _ in range(extra_parallel)]
    pairs.sort()
    ids: dict = {}
    for eid, p in enumerate(pairs, start=1):
        ids.setdefault(p, []).append(eid)
    demands = []
    for gid in range(1, params.demand_count + 1):
        a, b = rng.choice(base.graph.edges)
        if rng.random() < 0.5:
            a, b = b, a
        demands.append(Demand(gid, a, b, Fraction(rng.randint(1, 20), 20)))
    loads = {eid: Fraction(0) for eid in range(1, len(pairs) + 1)}
    for d in demands:
        share = Fraction(rng.randint(0, 4), 4)
        loads[rng.choice(ids[edge(d.u, d.v)])] += share * d.value
        path = _random_path(base.graph.adjacency, d.u, d.v, rng)
        for a, b in zip(path, path[1:]):
            loads[rng.choice(ids[edge(a, b)])] += (1 - share) * d.value
    dm = max((d.value for d in demands), default=Fraction(0))
    slack = dm / 4 if params.slack is None else as_fraction(params.slack)
    edges = {eid: SupplyEdge(eid, a, b, loads[eid] + slack) for eid, (a, b) in enumerate(pairs, start=1)}
    return MultiInstance(tuple(range(1, params.n + 1)), edges, tuple(demands))


def gen_ring(n: int, k: int, seed: int = 0, slack=0) -> RingInstance:
    """Ring whose capacities are the loads of a random split routing plus
    ``slack``; the ring cut condition therefore holds."""
    if n < 3 or k < 0:
        raise InvalidParams("ring needs n >= 3 and k >= 0")
    rng = random.Random(seed)
    demands = []
    for gid in range(1, k + 1):
        u, v = rng.sample(range(1, n + 1), 2)
        demands.append(Demand(gid, u, v, Fraction(rng.randint(1, 20), 20)))
    loads = [Fraction(0)] * n
    for d in demands:
        share = Fraction(rng.randint(0, 4), 4)
        for i in arc_edges(n, d.u, d.v):
            loads[i - 1] += share * d.value
        for i in arc_edges(n, d.v, d.u):
            loads[i - 1] += (1 - share) * d.value
    slack = as_fraction(slack)
    return RingInstance(n, tuple(c + slack for c in loads), tuple(demands))
