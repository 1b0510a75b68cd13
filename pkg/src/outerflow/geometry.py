"""Embedded outerplanar graphs: faces, weak dual tree and interval cuts.

Vertices are ``1..n`` in clockwise order around the outer face, so the
embedding is fully determined by the chord set.  Edges are stored as sorted
pairs ``(a, b)`` with ``a < b``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator

Edge = tuple[int, int]


class GeometryError(ValueError):
    pass


class TooSmall(GeometryError):
    pass


class BadChord(GeometryError):
    pass


class CrossingChords(GeometryError):
    pass


class BadInterval(GeometryError):
    pass


def edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


def _crosses(a: Edge, b: Edge) -> bool:
    (p, q), (r, s) = a, b
    if len({p, q, r, s}) < 4:
        return False
    return (p < r < q) != (p < s < q)


@dataclass(frozen=True)
class Face:
    """Bounded face; ``vertex_seq`` is the clockwise vertex order i_1..i_l."""

    vertex_seq: tuple[int, ...]

    def __post_init__(self):
        if len(self.vertex_seq) < 3:
            raise GeometryError(f"face needs >= 3 vertices: {self.vertex_seq}")

    @property
    def edges(self) -> tuple[Edge, ...]:
        seq = self.vertex_seq
        return tuple(edge(seq[i], seq[(i + 1) % len(seq)]) for i in range(len(seq)))

    @property
    def vertices(self) -> frozenset[int]:
        return frozenset(self.vertex_seq)

    @property
    def closing_edge(self) -> Edge:
        return edge(self.vertex_seq[-1], self.vertex_seq[0])

    def rotated(self, closing: Edge) -> "Face":
        """Same face, rotated so that ``closing`` becomes {i_l, i_1}."""
        seq = self.vertex_seq
        m = len(seq)
        for k in range(m):
            if edge(seq[k - 1], seq[k]) == edge(*closing):
                return Face(seq[k:] + seq[:k])
        raise GeometryError(f"{closing} is not an edge of face {seq}")

    def canonical(self) -> "Face":
        return Face(tuple(sorted(self.vertex_seq)))

    def __len__(self) -> int:
        return len(self.vertex_seq)


@dataclass(frozen=True)
class Interval:
    """Cyclic vertex interval [i, j] = {i, i+1, ..., j} on n vertices."""

    i: int
    j: int
    n: int

    def __post_init__(self):
        if not (1 <= self.i <= self.n and 1 <= self.j <= self.n):
            raise BadInterval(f"interval endpoints out of range: {self}")
        if self.i == self.j % self.n + 1:
            raise BadInterval(f"[{self.i},{self.j}] covers every vertex")

    @cached_property
    def members(self) -> frozenset[int]:
        i, j, n = self.i, self.j, self.n
        if i <= j:
            return frozenset(range(i, j + 1))
        return frozenset(list(range(i, n + 1)) + list(range(1, j + 1)))

    def __contains__(self, v: int) -> bool:
        return v in self.members

    @property
    def entry_edge(self) -> Edge:
        """Outer edge {i-1, i}."""
        return edge((self.i - 2) % self.n + 1, self.i)

    @property
    def exit_edge(self) -> Edge:
        """Outer edge {j, j+1}."""
        return edge(self.j, self.j % self.n + 1)

    def __str__(self) -> str:
        return f"[{self.i},{self.j}]"


def intervals(n: int) -> Iterator[Interval]:
    """All n(n-1) central intervals."""
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i != j % n + 1:
                yield Interval(i, j, n)


@dataclass(frozen=True)
class OuterplanarGraph:
    n: int
    chords: frozenset[Edge] = field(default_factory=frozenset)

    @cached_property
    def outer_edges(self) -> tuple[Edge, ...]:
        return tuple(edge(i, i % self.n + 1) for i in range(1, self.n + 1))

    @cached_property
    def edges(self) -> tuple[Edge, ...]:
        return tuple(sorted(set(self.outer_edges) | self.chords))

    @cached_property
    def edge_set(self) -> frozenset[Edge]:
        return frozenset(self.edges)

    @cached_property
    def adjacency(self) -> dict[int, tuple[int, ...]]:
        adj: dict[int, set[int]] = {v: set() for v in range(1, self.n + 1)}
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return {v: tuple(sorted(nb)) for v, nb in adj.items()}

    def has_edge(self, u: int, v: int) -> bool:
        return edge(u, v) in self.edge_set

    def is_outer(self, e: Edge) -> bool:
        a, b = e
        return b - a == 1 or (a == 1 and b == self.n)

    @cached_property
    def faces(self) -> tuple[Face, ...]:
        return tuple(bounded_faces(self))

    @cached_property
    def dual(self) -> "DualTree":
        return weak_dual(self)

    def face_of_outer_edge(self, e: Edge) -> Face:
        return self.dual.face_with_edge[edge(*e)][0]


def build_graph(n: int, chords: Iterable[tuple[int, int]] = ()) -> OuterplanarGraph:
    if n < 3:
        raise TooSmall(f"need n >= 3, got {n}")
    seen: set[Edge] = set()
    for u, v in chords:
        if u == v:
            raise BadChord(f"loop at {u}")
        if not (1 <= u <= n and 1 <= v <= n):
            raise BadChord(f"chord {{{u},{v}}} has a vertex outside 1..{n}")
        e = edge(u, v)
        if e[1] - e[0] == 1 or (e[0] == 1 and e[1] == n):
            raise BadChord(f"{{{u},{v}}} is an outer edge, not a chord")
        if e in seen:
            raise BadChord(f"duplicate chord {{{u},{v}}}")
        seen.add(e)
    ordered = sorted(seen)
    for a_idx, a in enumerate(ordered):
        for b in ordered[a_idx + 1:]:
            if _crosses(a, b):
                raise CrossingChords(f"chords {a} and {b} cross")
    return OuterplanarGraph(n, frozenset(seen))


def bounded_faces(g: OuterplanarGraph) -> list[Face]:
    """Faces via chord-interval recursion.

    A chord (a, b) with the smallest span b - a has no chord strictly inside
    [a, b], so the surviving polygon vertices in [a, b] form a face; those
    strictly between a and b are then cut away.
    """
    alive = set(range(1, g.n + 1))
    faces = []
    for a, b in sorted(g.chords, key=lambda c: (c[1] - c[0], c)):
        seq = tuple(v for v in range(a, b + 1) if v in alive)
        faces.append(Face(seq))
        alive.difference_update(range(a + 1, b))
    faces.append(Face(tuple(sorted(alive))))
    faces.sort(key=lambda f: f.vertex_seq)
    return faces


@dataclass(frozen=True)
class DualTree:
    nodes: tuple[Face, ...]
    # chord -> the two faces it separates
    edges: dict[Edge, tuple[Face, Face]]
    face_with_edge: dict[Edge, tuple[Face, ...]]

    @cached_property
    def neighbors(self) -> dict[Face, tuple[tuple[Face, Edge], ...]]:
        nb: dict[Face, list[tuple[Face, Edge]]] = {f: [] for f in self.nodes}
        for chord, (f1, f2) in sorted(self.edges.items()):
            nb[f1].append((f2, chord))
            nb[f2].append((f1, chord))
        return {f: tuple(v) for f, v in nb.items()}

    def path(self, f1: Face, f2: Face) -> list[Edge]:
        """Chords on the unique tree path between two faces."""
        if f1 == f2:
            return []
        parent: dict[Face, tuple[Face, Edge] | None] = {f1: None}
        queue = deque([f1])
        while queue:
            cur = queue.popleft()
            if cur == f2:
                break
            for nxt, chord in self.neighbors[cur]:
                if nxt not in parent:
                    parent[nxt] = (cur, chord)
                    queue.append(nxt)
        out = []
        cur = f2
        while parent[cur] is not None:
            prev, chord = parent[cur]
            out.append(chord)
            cur = prev
        out.reverse()
        return out

    def is_tree(self) -> bool:
        if len(self.edges) != len(self.nodes) - 1:
            return False
        seen = {self.nodes[0]}
        stack = [self.nodes[0]]
        while stack:
            for nxt, _ in self.neighbors[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return len(seen) == len(self.nodes)


def weak_dual(g: OuterplanarGraph) -> DualTree:
    faces = g.faces
    incidence: dict[Edge, list[Face]] = {e: [] for e in g.edges}
    for f in faces:
        for e in f.edges:
            incidence[e].append(f)
    dual_edges = {}
    for e, fs in incidence.items():
        if e in g.chords:
            if len(fs) != 2:
                raise GeometryError(f"chord {e} borders {len(fs)} faces")
            dual_edges[e] = (fs[0], fs[1])
        elif len(fs) != 1:
            raise GeometryError(f"outer edge {e} borders {len(fs)} bounded faces")
    return DualTree(faces, dual_edges, {e: tuple(fs) for e, fs in incidence.items()})


def interval_cut(g: OuterplanarGraph, iv: Interval) -> frozenset[Edge]:
    """delta_G([i, j]) by direct enumeration."""
    if iv.n != g.n:
        raise BadInterval(f"interval on {iv.n} vertices, graph has {g.n}")
    return frozenset(e for e in g.edges if (e[0] in iv) != (e[1] in iv))


def interval_cut_dual(g: OuterplanarGraph, iv: Interval) -> frozenset[Edge]:
    """The same cut assembled from the dual path between the faces holding
    the two outer edges that leave the interval."""
    if iv.n != g.n:
        raise BadInterval(f"interval on {iv.n} vertices, graph has {g.n}")
    f1 = g.face_of_outer_edge(iv.entry_edge)
    f2 = g.face_of_outer_edge(iv.exit_edge)
    return frozenset(g.dual.path(f1, f2)) | {iv.entry_edge, iv.exit_edge}


def interval_cut_via(g: OuterplanarGraph, iv: Interval, f: Face) -> frozenset[Edge]:
    """Dual paths routed through an intermediate face ``f``."""
    f1 = g.face_of_outer_edge(iv.entry_edge)
    f2 = g.face_of_outer_edge(iv.exit_edge)
    return (frozenset(g.dual.path(f1, f)) | frozenset(g.dual.path(f, f2))
            | {iv.entry_edge, iv.exit_edge})
