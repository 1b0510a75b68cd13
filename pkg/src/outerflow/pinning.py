"""Iterative pinning: turn a feasible instance into one with only good demands.

Edges carry a label in {0, 1, 2}.  Each iteration takes a leaf face ``f`` of
the weak dual of G[C] (C = the cycle of label-1 edges), pins the bad demands
touching the interior of ``f`` along routes chosen by a ring-loading backend,
re-routes them fractionally, and bumps the label and capacity of every edge of
``f`` (capacity by ``alpha * d_max``).  The loop stops when no label-1 edge is
left, i.e. after one iteration per bounded face.
"""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .fracflow import (
    FEAS_TOL,
    FractionalFlow,
    lp_flow,
    restrict_flow,
    validate_fractional,
)
from .geometry import Edge, Face, edge
from .instance import (
    CutConditionViolated,
    Demand,
    McfInstance,
    check_cut_condition,
)
from .ringload import RingBackend, RingInstance, check_ring_cut, get_backend

log = logging.getLogger(__name__)


class InfeasibleFlow(ValueError):
    pass


class InvariantViolation(AssertionError):
    pass


class PathMissesBothAnchors(RuntimeError):
    pass


@dataclass
class IterationRecord:
    k: int
    face: tuple[int, ...]
    d1: int
    d2: int
    ring_violation: Fraction | None
    labels: dict[int, int]

    def line(self) -> str:
        rv = "-" if self.ring_violation is None else str(self.ring_violation)
        hist = " ".join(f"{lab}:{self.labels.get(lab, 0)}" for lab in (0, 1, 2))
        face = ",".join(map(str, self.face))
        return f"iter {self.k} face {face} d1 {self.d1} d2 {self.d2} ring {rv} labels {hist}"


@dataclass
class PinState:
    inst: McfInstance
    alpha: Fraction
    d_max: Fraction
    caps: dict[Edge, Fraction]
    demands: dict[int, Demand]
    partition: dict[int, list[int]]
    flow: FractionalFlow
    labels: dict[Edge, int]
    k: int = 1
    origin: dict[int, int] = field(default_factory=dict)
    parent: dict[int, int | None] = field(default_factory=dict)
    next_id: int = 1
    trace: list[IterationRecord] = field(default_factory=list)

    @property
    def graph(self):
        return self.inst.graph

    def current(self) -> McfInstance:
        ds = tuple(self.demands[h] for h in sorted(self.demands))
        return McfInstance(self.graph, self.caps, ds)

    def is_good(self, h: Demand) -> bool:
        return self.graph.has_edge(h.u, h.v)

    def cycle_vertices(self) -> set[int]:
        return {v for e, lab in self.labels.items() if lab == 1 for v in e}

    def walk(self, g: int) -> list[int]:
        """Vertex sequence of W_g, starting at the first endpoint of g."""
        gd = self.inst.demand(g)
        seq = [gd.u]
        for h in self.partition[g]:
            hd = self.demands[h]
            if seq[-1] == hd.u:
                seq.append(hd.v)
            elif seq[-1] == hd.v:
                seq.append(hd.u)
            else:
                raise InvariantViolation(f"W_{g} is not a walk at demand {h}")
        return seq


@dataclass
class PinOutcome:
    graph: object
    caps: dict[Edge, Fraction]
    demands: dict[int, Demand]
    partition: dict[int, list[int]]
    alpha: Fraction
    d_max: Fraction
    iterations: int
    trace: list[IterationRecord]
    parent: dict[int, int | None]

    def instance(self) -> McfInstance:
        ds = tuple(self.demands[h] for h in sorted(self.demands))
        return McfInstance(self.graph, self.caps, ds)


def init_pinning(inst: McfInstance, frac: FractionalFlow, backend: RingBackend | str = "exact",
                 tol: float = FEAS_TOL) -> PinState:
    rep = validate_fractional(inst, frac, tol)
    if not rep.ok:
        raise InfeasibleFlow(f"initial flow is not feasible: {rep}")
    backend = get_backend(backend)
    g = inst.graph
    labels = {e: (1 if g.is_outer(e) else 0) for e in g.edges}
    demands = {d.id: d for d in inst.demands}
    return PinState(
        inst=inst,
        alpha=backend.alpha,
        d_max=inst.d_max,
        caps=dict(inst.caps),
        demands=demands,
        partition={d.id: [d.id] for d in inst.demands},
        flow=restrict_flow(frac, [d.id for d in inst.demands]),
        labels=labels,
        origin={d.id: d.id for d in inst.demands},
        parent={d.id: None for d in inst.demands},
        next_id=max(demands, default=0) + 1,
    )


def leaf_face(state: PinState) -> Face | None:
    """Leaf of the weak dual of G[C], rotated so {i_l, i_1} is its label-0
    edge.  ``None`` once no label-1 edge remains."""
    if not any(lab == 1 for lab in state.labels.values()):
        return None
    inside = [f for f in state.graph.faces if all(state.labels[e] <= 1 for e in f.edges)]
    zero_edges = {f: [e for e in f.edges if state.labels[e] == 0] for f in inside}
    leaves = [f for f in inside if len(zero_edges[f]) <= 1]
    if not leaves:
        raise InvariantViolation("weak dual of G[C] has no leaf")
    f = min(leaves, key=lambda x: (min(x.vertex_seq), x.vertex_seq))
    if zero_edges[f]:
        return f.rotated(zero_edges[f][0])
    return f.canonical()


def classify_demands(state: PinState, f: Face) -> tuple[list[int], list[int]]:
    seq = f.vertex_seq
    interior = set(seq[1:-1])
    on_face = set(seq)
    outside = state.cycle_vertices() - on_face
    d1, d2 = [], []
    for hid in sorted(state.demands):
        h = state.demands[hid]
        if state.is_good(h):
            continue
        if (h.u in interior and h.v in outside) or (h.v in interior and h.u in outside):
            d1.append(hid)
        elif h.u in on_face and h.v in on_face:
            d2.append(hid)
    return d1, d2


def build_ring_instance(state: PinState, f: Face, ids: Sequence[int],
                        loads: dict[Edge, float] | None = None) -> RingInstance:
    """Ring on 1..n whose edge {i,i+1} gets the x*-load of the dual path from
    f to the face holding {i,i+1}, plus the x*-load of {i,i+1} itself."""
    g = state.graph
    if loads is None:
        loads = restrict_flow(state.flow, ids).loads()
    caps = []
    for i in range(1, g.n + 1):
        e = edge(i, i % g.n + 1)
        fi = g.face_of_outer_edge(e)
        total = sum(loads.get(c, 0.0) for c in g.dual.path(f.canonical(), fi)) + loads.get(e, 0.0)
        caps.append(Fraction(max(total, 0.0)))
    return RingInstance(g.n, tuple(caps), tuple(state.demands[h] for h in ids))


def pin_demand(h: Demand, route: Sequence[int], f: Face, in_d1: bool) -> list[tuple[int, int]]:
    """Replacement demand edges for ``h`` as a path oriented from h.u to h.v.

    ``route`` is the vertex sequence of h's ring route.
    """
    seq = f.vertex_seq
    ell = len(seq)
    pos = {v: k for k, v in enumerate(seq)}  # 0-based: i_1 -> 0
    on_route = set(route)
    first, last = seq[0], seq[-1]
    if in_d1:
        s, t = (h.u, h.v) if h.u in pos and 0 < pos[h.u] < ell - 1 else (h.v, h.u)
        p = pos[s]
        if first in on_route:
            verts = [seq[j] for j in range(p, -1, -1)] + [t]
        elif last in on_route:
            verts = [seq[j] for j in range(p, ell)] + [t]
        else:
            raise PathMissesBothAnchors(f"ring route of demand {h.id} avoids both i_1 and i_l")
    else:
        s, t = (h.u, h.v) if pos[h.u] < pos[h.v] else (h.v, h.u)
        p, q = pos[s], pos[t]
        if first in on_route and last in on_route:
            verts = [seq[j] for j in range(p, -1, -1)] + [seq[j] for j in range(ell - 1, q - 1, -1)]
        else:
            verts = [seq[j] for j in range(p, q + 1)]
    if s != h.u:
        verts.reverse()
    return list(zip(verts, verts[1:]))


def _splice(state: PinState, hid: int, pairs: list[tuple[int, int]]) -> list[int]:
    h = state.demands[hid]
    g = state.origin[hid]
    walk = state.walk(g)
    idx = state.partition[g].index(hid)
    arrive = walk[idx]
    if arrive != h.u:
        pairs = [(b, a) for a, b in reversed(pairs)]
    new_ids = []
    for a, b in pairs:
        nid = state.next_id
        state.next_id += 1
        state.demands[nid] = Demand(nid, a, b, h.value)
        state.origin[nid] = g
        state.parent[nid] = hid
        new_ids.append(nid)
    state.partition[g][idx:idx + 1] = new_ids
    del state.demands[hid]
    return new_ids


def check_invariants(state: PinState, tol: float = FEAS_TOL) -> list[str]:
    """Label structure, walk partition and flow feasibility at the start of
    the current iteration.  Returns failure messages."""
    fails = []
    g = state.graph
    e1 = [e for e, lab in state.labels.items() if lab == 1]
    cyc = state.cycle_vertices()
    if e1:
        deg = Counter(v for e in e1 for v in e)
        if any(d != 2 for d in deg.values()):
            fails.append("label-1 edges do not form a cycle (degree)")
        else:
            adj = {v: [] for v in deg}
            for a, b in e1:
                adj[a].append(b)
                adj[b].append(a)
            start = e1[0][0]
            seen, stack = {start}, [start]
            while stack:
                for w in adj[stack.pop()]:
                    if w not in seen:
                        seen.add(w)
                        stack.append(w)
            if seen != set(deg):
                fails.append("label-1 edges form several cycles")
    for e in g.edges:
        lab = state.labels[e]
        inside = e[0] in cyc and e[1] in cyc
        if lab == 0 and not inside:
            fails.append(f"label-0 edge {e} leaves G[C]")
        if lab == 2 and inside:
            fails.append(f"label-2 edge {e} lies inside G[C]")
        if lab not in (0, 1, 2):
            fails.append(f"edge {e} has label {lab}")
    for gid, hs in state.partition.items():
        gd = state.inst.demand(gid)
        try:
            walk = state.walk(gid)
        except InvariantViolation as exc:
            fails.append(str(exc))
            continue
        if walk[-1] != gd.v:
            fails.append(f"W_{gid} ends at {walk[-1]}, not {gd.v}")
        bad = [h for h in hs if not state.is_good(state.demands[h])]
        if len(bad) > 1:
            fails.append(f"W_{gid} holds {len(bad)} bad demands")
        for h in bad:
            hd = state.demands[h]
            if hd.u not in cyc or hd.v not in cyc:
                fails.append(f"bad demand {h} of W_{gid} has an endpoint off C")
        if any(state.demands[h].value != gd.value for h in hs):
            fails.append(f"W_{gid} has a demand whose value differs from d(g)")
    rep = validate_fractional(state.current(), state.flow, tol)
    if not rep.ok:
        fails.append(f"x^(k) infeasible: overloads {rep.overloads} deficits {rep.deficits}")
    return fails


def pin_step(state: PinState, backend: RingBackend | str = "exact", check: bool = True,
             tol: float = FEAS_TOL) -> PinState:
    backend = get_backend(backend)
    f = leaf_face(state)
    if f is None:
        raise ValueError("no label-1 edges left; pinning has terminated")
    d1, d2 = classify_demands(state, f)
    ids = d1 + d2
    ring_viol = None
    g = state.graph
    bump = state.alpha * state.d_max
    if ids:
        xstar = restrict_flow(state.flow, ids)
        xl = xstar.loads()
        ring = build_ring_instance(state, f, ids, xl)
        if check:
            rep = check_ring_cut(ring, tol)
            if not rep.holds:
                raise InvariantViolation(f"ring instance violates the cut condition at {rep.witness}")
        z, ring_viol = backend.solve(ring, tol=tol)
        if check and ring_viol > backend.alpha * ring.d_max + Fraction(tol):
            raise InvariantViolation(
                f"ring backend exceeded its guarantee: {ring_viol} > {backend.alpha} * {ring.d_max}")
        new_ids = []
        d1_set = set(d1)
        for hid in ids:
            h = state.demands[hid]
            pairs = pin_demand(h, z.path(h), f, hid in d1_set)
            new_ids += _splice(state, hid, pairs)
        df = [state.demands[h] for h in new_ids]
        face_edges = set(f.edges)
        caps_y = {e: xl.get(e, 0.0) + (float(bump) if e in face_edges else 0.0) for e in g.edges}
        if check:
            exact_caps = {e: Fraction(c) for e, c in caps_y.items()}
            rep = check_cut_condition(McfInstance(g, exact_caps, tuple(df)), tol)
            if not rep.holds:
                raise InvariantViolation(f"re-route instance violates the cut condition at {rep.witness}")
        y = lp_flow(g, caps_y, df, tol)
        for hid in ids:
            del state.flow.paths[hid]
        state.flow.paths.update(y.paths)
    for e in f.edges:
        state.caps[e] += bump
        state.labels[e] += 1
    rec = IterationRecord(state.k, f.vertex_seq, len(d1), len(d2), ring_viol,
                          dict(Counter(state.labels.values())))
    state.trace.append(rec)
    log.debug(rec.line())
    state.k += 1
    if check:
        fails = check_invariants(state, tol)
        if fails:
            raise InvariantViolation(f"after iteration {state.k - 1}: " + "; ".join(fails))
    return state


def verify_outcome(inst: McfInstance, out: PinOutcome) -> list[str]:
    """P1 (cut condition), P2 (exact capacity increase), P3 (good walks)."""
    fails = []
    rep = check_cut_condition(out.instance())
    if not rep.holds:
        fails.append(f"P1: cut condition fails at {rep.witness} (slack {rep.slack})")
    bump = out.alpha * out.d_max
    for e, c in inst.caps.items():
        want = c + (bump if inst.graph.is_outer(e) else 2 * bump)
        if out.caps[e] != want:
            fails.append(f"P2: capacity of {e} is {out.caps[e]}, expected {want}")
    g = inst.graph
    for gd in inst.demands:
        seq = [gd.u]
        for h in out.partition[gd.id]:
            hd = out.demands[h]
            if not g.has_edge(hd.u, hd.v):
                fails.append(f"P3: demand {h} in W_{gd.id} is bad")
            if hd.value != gd.value:
                fails.append(f"P3: demand {h} has value {hd.value} != {gd.value}")
            if seq[-1] == hd.u:
                seq.append(hd.v)
            elif seq[-1] == hd.v:
                seq.append(hd.u)
            else:
                fails.append(f"P3: W_{gd.id} is not a walk")
                break
        else:
            if seq[-1] != gd.v:
                fails.append(f"P3: W_{gd.id} does not end at {gd.v}")
            elif len(set(seq)) != len(seq):
                fails.append(f"P3: W_{gd.id} revisits a vertex")
    return fails


def run_pinning(inst: McfInstance, backend: RingBackend | str = "exact",
                frac: FractionalFlow | None = None, check: bool = True,
                tol: float = FEAS_TOL) -> PinOutcome:
    from .fracflow import solve_fractional

    rep = check_cut_condition(inst)
    if not rep.holds:
        raise CutConditionViolated(f"cut condition fails at {rep.witness} (slack {rep.slack})", rep)
    backend = get_backend(backend)
    if frac is None:
        frac = solve_fractional(inst, tol)
    state = init_pinning(inst, frac, backend, tol)
    if check:
        fails = check_invariants(state, tol)
        if fails:
            raise InvariantViolation("; ".join(fails))
    while leaf_face(state) is not None:
        pin_step(state, backend, check, tol)
    out = PinOutcome(
        graph=inst.graph,
        caps=dict(state.caps),
        demands=dict(state.demands),
        partition={g: list(hs) for g, hs in state.partition.items()},
        alpha=state.alpha,
        d_max=state.d_max,
        iterations=state.k - 1,
        trace=state.trace,
        parent=dict(state.parent),
    )
    if check:
        fails = verify_outcome(inst, out)
        if fails:
            raise InvariantViolation("; ".join(fails))
    return out
