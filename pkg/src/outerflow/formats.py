"""Line-oriented text formats for instances, ring instances and routings.

Instance::

    p outerplanar <n> <m> <k>
    e <u> <v> <cap>        (m lines, ids 1..m in file order)
    d <u> <v> <value>      (k lines, ids 1..k in file order)

Ring instance: header ``p ring <n> <k>``, one ``e <i> <i+1> <cap>`` line per
ring edge, then ``d`` lines.  Routing::

    p routing <k>
    r <id> <v_1> ... <v_t>
    w <id> <e_1> ... <e_{t-1}>     (optional on input)
    violation <q>
    bound <q>                      (optional)

Numbers may be integers, ``p/q`` or decimals.  ``#`` starts a comment.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterator

from .geometry import edge
from .goodroute import Route, UnsplittableRouting
from .instance import (
    Demand,
    McfInstance,
    MultiInstance,
    SupplyEdge,
    as_fraction,
    collapse_parallel,
)
from .ringload import CW, RingInstance, RingRouting


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


class BadVertex(ParseError):
    pass


def _lines(text: str) -> Iterator[tuple[int, list[str]]]:
    for no, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].split()
        if body:
            yield no, body


def _rational(tok: str, no: int, what: str) -> Fraction:
    try:
        val = as_fraction(tok)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"bad {what} {tok!r}", no) from None
    if val < 0:
        raise ParseError(f"negative {what} {tok}", no)
    return val


def _int(tok: str, no: int, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"bad {what} {tok!r}", no) from None


def _vertex(tok: str, n: int, no: int) -> int:
    v = _int(tok, no, "vertex")
    if not 1 <= v <= n:
        raise BadVertex(f"vertex {v} outside 1..{n}", no)
    return v


def _header(text: str, kind: str, width: int) -> tuple[int, list[int], Iterator]:
    it = _lines(text)
    for no, toks in it:
        if toks[0] != "p" or len(toks) != width or toks[1] != kind:
            raise ParseError(f"expected header 'p {kind} ...' with {width - 2} counts", no)
        return no, [_int(t, no, "count") for t in toks[2:]], it
    raise ParseError(f"empty input, expected 'p {kind}' header")


def parse_instance(text: str) -> MultiInstance:
    """Parse and validate; vertices 1..n must be the clockwise outer order."""
    hno, (n, m, k), it = _header(text, "outerplanar", 5)
    if n < 3:
        raise ParseError(f"need at least 3 vertices, got {n}", hno)
    edges, demands = {}, []
    for no, toks in it:
        tag = toks[0]
        if tag not in ("e", "d") or len(toks) != 4:
            raise ParseError(f"expected 'e u v cap' or 'd u v value', got {' '.join(toks)!r}", no)
        u, v = _vertex(toks[1], n, no), _vertex(toks[2], n, no)
        if u == v:
            raise BadVertex(f"loop at vertex {u}", no)
        if tag == "e":
            eid = len(edges) + 1
            edges[eid] = SupplyEdge(eid, u, v, _rational(toks[3], no, "capacity"))
        else:
            demands.append(Demand(len(demands) + 1, u, v, _rational(toks[3], no, "demand value")))
    if len(edges) != m or len(demands) != k:
        raise ParseError(f"header promises {m} edges and {k} demands, found {len(edges)} and {len(demands)}", hno)
    inst = MultiInstance(tuple(range(1, n + 1)), edges, tuple(demands))
    collapse_parallel(inst)  # raises on missing outer edges or crossing chords
    return inst


def _num(q: Fraction) -> str:
    return str(q)


def format_instance(inst: McfInstance | MultiInstance, comment: str | None = None) -> str:
    if isinstance(inst, McfInstance):
        n = inst.n
        elines = [f"e {a} {b} {_num(inst.caps[(a, b)])}" for a, b in inst.graph.edges]
    else:
        n = len(inst.vertices)
        elines = [f"e {e.u} {e.v} {_num(e.cap)}" for _, e in sorted(inst.edges.items())]
    out = [f"# {comment}"] if comment else []
    out.append(f"p outerplanar {n} {len(elines)} {len(inst.demands)}")
    out += elines
    out += [f"d {g.u} {g.v} {_num(g.value)}" for g in sorted(inst.demands, key=lambda g: g.id)]
    return "\n".join(out) + "\n"


def parse_ring(text: str) -> RingInstance:
    hno, (n, k), it = _header(text, "ring", 4)
    if n < 3:
        raise ParseError(f"need at least 3 vertices, got {n}", hno)
    caps: dict[int, Fraction] = {}
    demands = []
    for no, toks in it:
        tag = toks[0]
        if tag not in ("e", "d") or len(toks) != 4:
            raise ParseError(f"expected 'e i i+1 cap' or 'd u v value', got {' '.join(toks)!r}", no)
        u, v = _vertex(toks[1], n, no), _vertex(toks[2], n, no)
        if tag == "e":
            a, b = edge(u, v)
            i = b if (a, b) == (1, n) else a
            if b - a != 1 and (a, b) != (1, n):
                raise BadVertex(f"{{{u},{v}}} is not a ring edge", no)
            if i in caps:
                raise ParseError(f"ring edge {{{u},{v}}} given twice", no)
            caps[i] = _rational(toks[3], no, "capacity")
        else:
            if u == v:
                raise BadVertex(f"loop at vertex {u}", no)
            demands.append(Demand(len(demands) + 1, u, v, _rational(toks[3], no, "demand value")))
    missing = [i for i in range(1, n + 1) if i not in caps]
    if missing:
        raise ParseError(f"ring edges missing after vertices {missing}", hno)
    if len(demands) != k:
        raise ParseError(f"header promises {k} demands, found {len(demands)}", hno)
    return RingInstance(n, tuple(caps[i] for i in range(1, n + 1)), tuple(demands))


def format_ring(ring: RingInstance, comment: str | None = None) -> str:
    out = [f"# {comment}"] if comment else []
    out.append(f"p ring {ring.n} {len(ring.demands)}")
    out += [f"e {i} {i % ring.n + 1} {_num(c)}" for i, c in enumerate(ring.caps, start=1)]
    out += [f"d {g.u} {g.v} {_num(g.value)}" for g in ring.demands]
    return "\n".join(out) + "\n"


def format_ring_routing(ring: RingInstance, routing: RingRouting, violation: Fraction) -> str:
    out = [f"p ringrouting {len(ring.demands)}"]
    for g in ring.demands:
        side = "cw" if routing.orientation[g.id] == CW else "ccw"
        out.append(f"z {g.id} {side} " + " ".join(map(str, routing.path(g))))
    out.append(f"violation {_num(violation)}")
    return "\n".join(out) + "\n"


def emit_routing(routing: UnsplittableRouting, violation: Fraction | None = None,
                 bound: Fraction | None = None) -> str:
    out = [f"p routing {len(routing.routes)}"]
    for gid in sorted(routing.routes):
        r = routing.routes[gid]
        out.append(f"r {gid} " + " ".join(map(str, r.vertices)))
        out.append(f"w {gid} " + " ".join(map(str, r.edges)))
    out.append(f"violation {_num(violation if violation is not None else Fraction(0))}")
    if bound is not None:
        out.append(f"bound {_num(bound)}")
    return "\n".join(out) + "\n"


def parse_routing(text: str, inst: MultiInstance) -> tuple[UnsplittableRouting, Fraction | None, Fraction | None]:
    """Routing plus the optional violation/bound trailer.  Without a ``w``
    line each hop uses the smallest-id edge between its two vertices."""
    hno, (k,), it = _header(text, "routing", 3)
    verts: dict[int, tuple] = {}
    eids: dict[int, tuple] = {}
    violation = bound = None
    n = len(inst.vertices)
    for no, toks in it:
        tag = toks[0]
        if tag in ("violation", "bound"):
            if len(toks) != 2:
                raise ParseError(f"expected '{tag} <q>'", no)
            q = _rational(toks[1], no, tag)
            if tag == "violation":
                violation = q
            else:
                bound = q
        elif tag in ("r", "w") and len(toks) >= 2:
            gid = _int(toks[1], no, "demand id")
            target = verts if tag == "r" else eids
            if gid in target:
                raise ParseError(f"second '{tag}' line for demand {gid}", no)
            if tag == "r":
                target[gid] = tuple(_vertex(t, n, no) for t in toks[2:])
            else:
                target[gid] = tuple(_int(t, no, "edge id") for t in toks[2:])
        else:
            raise ParseError(f"unexpected line {' '.join(toks)!r}", no)
    if len(verts) != k:
        raise ParseError(f"header promises {k} routes, found {len(verts)}", hno)
    routes = {}
    for gid, vs in verts.items():
        if gid in eids:
            es = eids[gid]
        else:
            es = []
            for a, b in zip(vs, vs[1:]):
                par = inst.edges_between(a, b)
                if not par:
                    raise ParseError(f"route {gid}: no edge between {a} and {b}")
                es.append(par[0].id)
            es = tuple(es)
        routes[gid] = Route(vs, es)
    extra = set(eids) - set(verts)
    if extra:
        raise ParseError(f"'w' lines without 'r' lines for demands {sorted(extra)}")
    return UnsplittableRouting(dict(sorted(routes.items()))), violation, bound

