import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from outerflow.driver import (
    GenParams,
    InvalidParams,
    gen_good_instance,
    gen_instance,
    gen_ring,
    oracle_unsplittable,
    random_chords,
    simple_paths,
    solve,
    verify,
)
from outerflow.goodroute import Route, UnsplittableRouting, check_routing
from outerflow.instance import CutConditionViolated, Demand, MultiInstance, SupplyEdge, TooLarge, make_instance

F = Fraction


def multi(vertices, edges, demands=()):
    es = {k: SupplyEdge(k, u, v, c) for k, (u, v, c) in enumerate(edges, start=1)}
    ds = tuple(Demand(k, u, v, val) for k, (u, v, val) in enumerate(demands, start=1))
    return MultiInstance(tuple(vertices), es, ds)


class TestFourCycle:
    def test_solve(self, four_cycle):
        res = solve(four_cycle)
        assert res.bound == F(18, 5)
        assert res.violation == 1
        assert res.alpha == F(13, 10) and res.backend == "exact"
        assert len(res.trace) == 1
        assert verify(four_cycle, res.routing, F(18, 5)).ok

    def test_ssw_bound(self, four_cycle):
        res = solve(four_cycle, "ssw")
        assert res.bound == 4 and res.violation <= 4

    def test_oracle(self, four_cycle):
        viol, routing = oracle_unsplittable(four_cycle)
        assert viol == 1
        assert check_routing(res_multi(four_cycle), routing) == []

    def test_verify_catches_missing_and_overload(self, four_cycle):
        res = solve(four_cycle)
        partial = UnsplittableRouting({1: res.routing.routes[1]})
        rep = verify(four_cycle, partial, 10)
        assert not rep.ok and "demand 2 is not routed" in rep.failures
        rep = verify(four_cycle, res.routing, 0)
        assert not rep.ok and rep.violation == 1


def res_multi(inst):
    from outerflow.driver import as_multi
    return as_multi(inst)


def test_rejects_cut_violation():
    with pytest.raises(CutConditionViolated):
        solve(make_instance(4, [], 1, [(1, 3, 3)]))


class TestBlocks:
    def test_bowtie(self):
        inst = multi("abvcd", [("a", "b", 1), ("b", "v", 1), ("v", "a", 1),
                               ("v", "c", 1), ("c", "d", 1), ("d", "v", 1)], [("a", "c", 1), ("b", "d", 1)])
        res = solve(inst)
        for g in inst.demands:
            r = res.routing.routes[g.id]
            assert (r.vertices[0], r.vertices[-1]) == (g.u, g.v)
            assert "v" in r.vertices
        assert verify(inst, res.routing, F(18, 5)).ok
        assert all(line.startswith("block ") for line in res.trace)

    def test_path_with_parallel_edges(self):
        inst = multi("avb", [("a", "v", 1), ("v", "a", 1), ("v", "b", 2)], [("a", "b", 1), ("b", "a", 1)])
        res = solve(inst)
        # the greedy fill packs both demands onto edge 1 (load cap + d_max)
        assert res.violation == 1 and res.profile == {1: 1, 2: -1, 3: 0}
        assert res.routing.routes[2].vertices == ("b", "v", "a")

    def test_parallel_edges_in_cycle(self):
        inst = multi([1, 2, 3, 4], [(1, 2, 1), (2, 3, 1), (3, 4, 1), (4, 1, 1), (1, 2, 1)],
                     [(1, 3, 1), (2, 4, 1)])
        res = solve(inst)
        assert verify(inst, res.routing, F(18, 5)).ok
        assert set(res.profile) == {1, 2, 3, 4, 5}


class TestOracle:
    def test_simple_paths_count_parallels(self):
        inst = multi([1, 2, 3], [(1, 2, 1), (2, 3, 1), (1, 3, 1), (1, 2, 1)])
        paths = simple_paths(inst, 1, 2)
        assert Route((1, 2), (1,)) in paths and Route((1, 2), (4,)) in paths
        assert len(paths) == 3

    def test_too_large(self):
        inst = gen_instance(GenParams(8, 5, 8, 0, 3))
        with pytest.raises(TooLarge):
            oracle_unsplittable(inst, limit=10)


@pytest.mark.parametrize("seed, exact, ssw, best", [
    (1, F(0), F(0), F(0)),
    (2, F(9, 40), F(9, 40), F(7, 80)),
    (3, F(23, 80), F(23, 80), F(7, 80)),
    (4, F(13, 20), F(13, 20), F(13, 40)),
    (5, F(11, 20), F(19, 20), F(3, 40)),
])
def test_frozen_violations(seed, exact, ssw, best):
    inst = gen_instance(GenParams(7, 2, 5, 0, seed))
    assert solve(inst).violation == exact
    assert solve(inst, "ssw").violation == ssw
    assert oracle_unsplittable(inst)[0] == best


class TestGenerator:
    def test_deterministic(self):
        a = gen_instance(GenParams(9, 3, 6, None, 42))
        b = gen_instance(GenParams(9, 3, 6, None, 42))
        assert a.caps == b.caps and a.demands == b.demands
        assert a.graph.chords == b.graph.chords

    def test_default_slack(self):
        inst = gen_instance(GenParams(6, 0, 0, None, 1))
        assert set(inst.caps.values()) == {0}

    @pytest.mark.parametrize("params", [
        GenParams(2), GenParams(5, 3), GenParams(5, -1), GenParams(5, 0, -1), GenParams(5, 0, 1, -1),
    ])
    def test_invalid(self, params):
        with pytest.raises(InvalidParams):
            gen_instance(params)

    def test_random_chords_limit(self):
        with pytest.raises(InvalidParams):
            random_chords(5, 3, random.Random(0))

    def test_ring(self):
        ring = gen_ring(6, 4, 7)
        assert ring.n == 6 and len(ring.demands) == 4
        with pytest.raises(InvalidParams):
            gen_ring(2, 1)

    def test_good_instance(self):
        inst = gen_good_instance(GenParams(6, 2, 5, None, 3), extra_parallel=3)
        assert len(inst.edges) == 6 + 2 + 3
        assert all(inst.is_good(g) for g in inst.demands)


@given(st.integers(3, 9), st.integers(0, 7), st.integers(0, 10 ** 6), st.sampled_from(["exact", "ssw"]))
def test_solve_within_bound(n, m, seed, backend):
    inst = gen_instance(GenParams(n, seed % (n - 2), m, 0, seed))
    res = solve(inst, backend)
    rep = verify(inst, res.routing, 2 * res.alpha + 1)
    assert rep.ok, rep.failures
    assert rep.violation == res.violation
