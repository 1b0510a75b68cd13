"""Ring loading: unsplittable routing of demands on a cycle.

Ring edge ``i`` is {i, i+1} (with n+1 = 1).  A demand (u, v) routed
*clockwise* uses the edges u, u+1, ..., v-1; counterclockwise uses the rest.
Both backends expose an ``alpha`` guarantee: the pinning step inflates
capacities by ``alpha * d_max`` per label increase.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

from .geometry import build_graph, edge
from .instance import (
    CutConditionViolated,
    CutReport,
    Demand,
    InstanceError,
    McfInstance,
    TooLarge,
    as_fraction,
    check_cut_condition,
)

CW, CCW = 0, 1
MAX_EXACT_DEMANDS = 24


class MissingDemand(KeyError):
    pass


class TooManyDemands(TooLarge):
    pass


@dataclass(frozen=True, eq=False)
class RingInstance:
    n: int
    caps: tuple[Fraction, ...]  # caps[i - 1] is edge {i, i+1}
    demands: tuple[Demand, ...] = ()

    def __post_init__(self):
        if self.n < 3:
            raise InstanceError("a ring needs at least 3 vertices")
        caps = tuple(as_fraction(c) for c in self.caps)
        if len(caps) != self.n or any(c < 0 for c in caps):
            raise InstanceError("ring needs n nonnegative capacities")
        object.__setattr__(self, "caps", caps)
        object.__setattr__(self, "demands", tuple(self.demands))
        for g in self.demands:
            if not (1 <= g.u <= self.n and 1 <= g.v <= self.n):
                raise InstanceError(f"demand {g.id} endpoint outside 1..{self.n}")

    @property
    def d_max(self) -> Fraction:
        return max((g.value for g in self.demands), default=Fraction(0))

    def arc(self, g: Demand, orient: int) -> tuple[int, ...]:
        """Ring edge indices used by ``g`` in the given orientation."""
        return arc_edges(self.n, g.u, g.v) if orient == CW else arc_edges(self.n, g.v, g.u)

    def as_mcf(self) -> McfInstance:
        g = build_graph(self.n)
        caps = {edge(i, i % self.n + 1): c for i, c in enumerate(self.caps, start=1)}
        return McfInstance(g, caps, self.demands)


def arc_edges(n: int, a: int, b: int) -> tuple[int, ...]:
    """Edges walked going clockwise from a to b."""
    out = []
    v = a
    while v != b:
        out.append(v)
        v = v % n + 1
    return tuple(out)


def arc_vertices(n: int, a: int, b: int) -> tuple[int, ...]:
    out = [a]
    v = a
    while v != b:
        v = v % n + 1
        out.append(v)
    return tuple(out)


@dataclass(frozen=True)
class RingRouting:
    n: int
    orientation: dict[int, int]  # demand id -> CW / CCW

    def path(self, g: Demand) -> tuple[int, ...]:
        """Vertex sequence of g's route, from g.u to g.v."""
        if self.orientation[g.id] == CW:
            return arc_vertices(self.n, g.u, g.v)
        return tuple(reversed(arc_vertices(self.n, g.v, g.u)))

    def loads(self, ring: RingInstance) -> list[Fraction]:
        out = [Fraction(0)] * ring.n
        for g in ring.demands:
            if g.id not in self.orientation:
                raise MissingDemand(g.id)
            for i in ring.arc(g, self.orientation[g.id]):
                out[i - 1] += g.value
        return out


def ring_violation(ring: RingInstance, routing: RingRouting) -> Fraction:
    loads = routing.loads(ring)
    return max([Fraction(0)] + [l - c for l, c in zip(loads, ring.caps)])


def check_ring_cut(ring: RingInstance, tol=0) -> CutReport:
    return check_cut_condition(ring.as_mcf(), tol)


def _scaled(ring: RingInstance) -> tuple[int, list[int], list[int]]:
    nums = list(ring.caps) + [g.value for g in ring.demands]
    den = 1
    for x in nums:
        den = den * x.denominator // math.gcd(den, x.denominator)
    caps = [int(c * den) for c in ring.caps]
    vals = [int(g.value * den) for g in ring.demands]
    return den, caps, vals


def solve_ring_exact(ring: RingInstance, check_cut: bool = True, tol=0) -> tuple[RingRouting, Fraction]:
    """Minimise max_e(load - cap) over all 2^k orientations by branch and bound.

    Ties go to the lexicographically smallest orientation vector in demand
    order (CW = 0).  Demands are branched in decreasing value order; a node is
    pruned when its partial overload already exceeds the incumbent.
    """
    k = len(ring.demands)
    if k > MAX_EXACT_DEMANDS:
        raise TooManyDemands(f"{k} ring demands exceeds {MAX_EXACT_DEMANDS}")
    if check_cut:
        rep = check_ring_cut(ring, tol)
        if not rep.holds:
            raise CutConditionViolated("ring instance violates the cut condition", rep)
    den, caps, vals = _scaled(ring)
    n = ring.n
    arcs = [(ring.arc(g, CW), ring.arc(g, CCW)) for g in ring.demands]
    order = sorted(range(k), key=lambda i: (-vals[i], i))
    load = [-c for c in caps]  # load minus capacity
    choice = [0] * k
    best_val: int | None = None
    best_vec: tuple[int, ...] | None = None

    def rec(depth: int, cur_max: int):
        nonlocal best_val, best_vec
        if best_val is not None and cur_max > best_val:
            return
        if depth == k:
            vec = tuple(choice)
            if best_val is None or cur_max < best_val or (cur_max == best_val and vec < best_vec):
                best_val, best_vec = cur_max, vec
            return
        i = order[depth]
        for o in (CW, CCW):
            choice[i] = o
            m = cur_max
            for e in arcs[i][o]:
                load[e - 1] += vals[i]
                if load[e - 1] > m:
                    m = load[e - 1]
            rec(depth + 1, m)
            for e in arcs[i][o]:
                load[e - 1] -= vals[i]
        choice[i] = 0

    rec(0, max(load) if load else 0)
    routing = RingRouting(n, {g.id: best_vec[i] for i, g in enumerate(ring.demands)})
    return routing, ring_violation(ring, routing)


def enumerate_ring(ring: RingInstance) -> tuple[RingRouting, Fraction]:
    """Plain 2^k enumeration (test oracle); same objective and tie-break."""
    import itertools

    best = None
    for vec in itertools.product((CW, CCW), repeat=len(ring.demands)):
        r = RingRouting(ring.n, {g.id: o for g, o in zip(ring.demands, vec)})
        loads = r.loads(ring)
        obj = max(l - c for l, c in zip(loads, ring.caps))
        if best is None or obj < best[0]:
            best = (obj, r)
    return best[1], ring_violation(ring, best[1])


# ---------------------------------------------------------------------------
# 3/2 rounding backend
# ---------------------------------------------------------------------------

_EPS = 1e-12


def _fractional_ring(ring: RingInstance) -> list[float]:
    """Fraction of each demand sent clockwise in a min-overload LP."""
    k, n = len(ring.demands), ring.n
    A = np.zeros((n, k + 1))
    b = np.array([float(c) for c in ring.caps])
    for j, g in enumerate(ring.demands):
        d = float(g.value)
        cw = set(ring.arc(g, CW))
        for e in range(1, n + 1):
            if e in cw:
                A[e - 1, j] += d
            else:
                A[e - 1, j] -= d
                b[e - 1] -= d
    A[:, k] = -1.0
    c = np.zeros(k + 1)
    c[k] = 1.0
    res = linprog(c, A_ub=A, b_ub=b, bounds=[(0, 1)] * k + [(None, None)], method="highs")
    if res.status != 0:
        raise InstanceError(f"ring LP failed: {res.message}")
    return [min(1.0, max(0.0, a)) for a in res.x[:k]]


def _contains(n: int, inner: tuple[int, ...], outer: tuple[int, ...]) -> bool:
    return set(inner) <= set(outer)


def _uncross(ring: RingInstance, frac: list[float]) -> list[float]:
    """Shift flow between split demands with nested arcs until the split
    demands pairwise cross.  Loads never increase.

    If arc A of h1 lies inside arc B of h2, moving eps of h1 onto A and eps
    of h2 off B leaves A and the complement of B unchanged and lowers B - A.
    """
    vals = [float(g.value) for g in ring.demands]
    k = len(frac)
    amt = [[f * v, (1 - f) * v] for f, v in zip(frac, vals)]  # on CW arc, on CCW arc

    def split(i):
        return amt[i][0] > _EPS * max(1.0, vals[i]) and amt[i][1] > _EPS * max(1.0, vals[i])

    changed = True
    while changed:
        changed = False
        for i in range(k):
            if not split(i):
                continue
            for j in range(k):
                if i == j or not split(j):
                    continue
                gi, gj = ring.demands[i], ring.demands[j]
                for oa in (CW, CCW):
                    for ob in (CW, CCW):
                        A, B = ring.arc(gi, oa), ring.arc(gj, ob)
                        if _contains(ring.n, A, B):
                            eps = min(amt[i][1 - oa], amt[j][ob])
                            amt[i][oa] += eps
                            amt[i][1 - oa] -= eps
                            amt[j][ob] -= eps
                            amt[j][1 - ob] += eps
                            changed = True
                            break
                    if changed:
                        break
                if changed:
                    break
            if changed:
                break
    out = []
    for i in range(k):
        v = vals[i]
        out.append(0.0 if v == 0 else min(1.0, max(0.0, amt[i][0] / v)))
    return out


def solve_ring_ssw(ring: RingInstance, check_cut: bool = True, tol=0) -> tuple[RingRouting, Fraction]:
    """3/2-feasible routing from a fractional one.

    After uncrossing, the split demands pairwise cross, so their endpoints
    alternate s_1 .. s_m t_1 .. t_m around the ring.  Walking s_1..s_m we round
    each demand so that the running sum of rounding errors (signed towards
    the arc [s_i, t_i)) stays in (-d_max/2, d_max/2]; every edge's load then
    changes by at most 3/2 d_max.
    """
    if check_cut:
        rep = check_ring_cut(ring, tol)
        if not rep.holds:
            raise CutConditionViolated("ring instance violates the cut condition", rep)
    k = len(ring.demands)
    if k == 0:
        r = RingRouting(ring.n, {})
        return r, Fraction(0)
    frac = _uncross(ring, _fractional_ring(ring))
    orient = {}
    split_idx = []
    for i, (g, a) in enumerate(zip(ring.demands, frac)):
        if a >= 1 - 1e-9:
            orient[g.id] = CW
        elif a <= 1e-9:
            orient[g.id] = CCW
        else:
            split_idx.append(i)
    if split_idx:
        # orient each split demand so it starts in the first half of the
        # cyclic endpoint sequence; its "forward" arc is then [s_i, t_i)
        ends = sorted({v for i in split_idx for v in (ring.demands[i].u, ring.demands[i].v)})
        m = len(split_idx)
        starts = []
        if len(ends) == 2 * m:
            first_half = set(ends[:m])
            for i in split_idx:
                g = ring.demands[i]
                s = g.u if g.u in first_half else g.v
                starts.append((s, i))
        else:  # numerical leftovers that still share endpoints; any order works for the bound check
            starts = [(ring.demands[i].u, i) for i in split_idx]
        starts.sort()
        dmax = float(ring.d_max)
        prefix = 0.0
        for s, i in starts:
            g = ring.demands[i]
            forward = CW if s == g.u else CCW
            on_forward = frac[i] if forward == CW else 1 - frac[i]
            d = float(g.value)
            up = (1 - on_forward) * d
            down = -on_forward * d
            if prefix + down > -dmax / 2:
                prefix += down
                orient[g.id] = 1 - forward
            else:
                prefix += up
                orient[g.id] = forward
    routing = RingRouting(ring.n, orient)
    return routing, ring_violation(ring, routing)


@dataclass(frozen=True)
class RingBackend:
    name: str
    alpha: Fraction

    def solve(self, ring: RingInstance, tol=0) -> tuple[RingRouting, Fraction]:
        if self.name == "exact":
            return solve_ring_exact(ring, tol=tol)
        return solve_ring_ssw(ring, tol=tol)


EXACT = RingBackend("exact", Fraction(13, 10))
SSW = RingBackend("ssw", Fraction(3, 2))
BACKENDS = {"exact": EXACT, "ssw": SSW}


def get_backend(name: str | RingBackend) -> RingBackend:
    if isinstance(name, RingBackend):
        return name
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown ring backend {name!r}; choose from {sorted(BACKENDS)}") from None
