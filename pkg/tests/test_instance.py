import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from outerflow.driver import GenParams, gen_instance, random_chords
from outerflow.geometry import Interval, build_graph
from outerflow.instance import (
    CapacityDecreased,
    Demand,
    DemandAcrossComponents,
    DisconnectedSupply,
    InstanceError,
    McfInstance,
    MissingOuterEdge,
    MultiInstance,
    SupplyEdge,
    as_fraction,
    brute_cut_condition,
    check_cut_condition,
    collapse_parallel,
    distribute_capacity_increase,
    from_simple,
    interval_slack,
    make_instance,
    split_blocks,
)


def multi(vertices, edges, demands=()):
    es = {k: SupplyEdge(k, u, v, c) for k, (u, v, c) in enumerate(edges, start=1)}
    ds = tuple(Demand(k, u, v, val) for k, (u, v, val) in enumerate(demands, start=1))
    return MultiInstance(tuple(vertices), es, ds)


def test_as_fraction_forms():
    assert as_fraction("3/4") == Fraction(3, 4)
    assert as_fraction("0.25") == Fraction(1, 4)
    assert as_fraction(2) == 2


def test_demand_validation():
    with pytest.raises(InstanceError):
        Demand(1, 2, 2, 1)
    with pytest.raises(InstanceError):
        Demand(1, 1, 2, -1)


def test_caps_must_cover_edges():
    g = build_graph(4)
    with pytest.raises(InstanceError):
        McfInstance(g, {(1, 2): 1}, ())


class TestCutCondition:
    def test_four_cycle_holds_tight(self, four_cycle):
        rep = check_cut_condition(four_cycle)
        assert rep.holds
        assert Interval(1, 2, 4) in rep.tight_cuts and Interval(2, 3, 4) in rep.tight_cuts

    def test_empty_demands(self):
        assert check_cut_condition(make_instance(5, [(1, 3)], 0, []))

    def test_overloaded(self):
        rep = check_cut_condition(make_instance(4, [], 1, [(1, 3, 3)]))
        assert not rep.holds
        assert rep.slack == -1
        assert interval_slack(make_instance(4, [], 1, [(1, 3, 3)]), rep.witness) == -1

    def test_brute_on_four_cycle(self, four_cycle):
        assert brute_cut_condition(four_cycle).holds

    def test_brute_witness_is_a_set(self):
        rep = brute_cut_condition(make_instance(4, [], 1, [(1, 3, 3)]))
        assert not rep.holds and rep.slack == -1

    @given(st.integers(3, 9), st.integers(0, 10 ** 6))
    def test_interval_agrees_with_brute(self, n, seed):
        r = random.Random(seed)
        inst = gen_instance(GenParams(n, r.randint(0, n - 3), r.randint(0, 6), 0, seed))
        caps = {e: c * Fraction(r.randint(5, 12), 10) for e, c in inst.caps.items()}
        inst = McfInstance(inst.graph, caps, inst.demands)
        assert check_cut_condition(inst).holds == brute_cut_condition(inst).holds

    @given(st.integers(3, 10), st.integers(0, 10 ** 6))
    def test_generator_satisfies_cut(self, n, seed):
        r = random.Random(seed)
        inst = gen_instance(GenParams(n, r.randint(0, n - 3), r.randint(0, 8), 0, seed))
        assert check_cut_condition(inst).holds


class TestSplitBlocks:
    def test_two_connected_unchanged(self, four_cycle):
        blocks = split_blocks(from_simple(four_cycle))
        assert len(blocks) == 1
        b = blocks[0]
        assert b.labels == {1: 1, 2: 2, 3: 3, 4: 4}
        assert [(g.id, g.u, g.v) for g in b.instance.demands] == [(1, 1, 3), (2, 2, 4)]

    def test_bowtie_splits_demand(self):
        inst = multi("abvcd", [("a", "b", 1), ("b", "v", 1), ("v", "a", 1),
                               ("v", "c", 1), ("c", "d", 1), ("d", "v", 1)], [("a", "c", 1)])
        blocks = split_blocks(inst)
        assert len(blocks) == 2
        pieces = sorted((b.pieces[g.id], b.labels[g.u], b.labels[g.v])
                        for b in blocks for g in b.instance.demands)
        assert pieces == [((1, 0), "a", "v"), ((1, 1), "v", "c")]

    def test_path_graph(self):
        inst = multi("avb", [("a", "v", 2), ("v", "b", 2)], [("a", "b", 1)])
        blocks = split_blocks(inst)
        assert [len(b.instance.vertices) for b in blocks] == [2, 2]
        got = sorted((b.labels[g.u], b.labels[g.v], g.value) for b in blocks for g in b.instance.demands)
        assert got == [("a", "v", 1), ("v", "b", 1)]

    def test_fresh_ids_for_pieces(self):
        inst = multi("avb", [("a", "v", 2), ("v", "b", 2)], [("a", "b", 1), ("a", "v", 1)])
        ids = sorted(g.id for b in split_blocks(inst) for g in b.instance.demands)
        assert ids == [2, 3, 4]

    def test_disconnected(self):
        with pytest.raises(DisconnectedSupply):
            split_blocks(multi("abcd", [("a", "b", 1), ("c", "d", 1)]))
        with pytest.raises(DemandAcrossComponents):
            split_blocks(multi("abcd", [("a", "b", 1), ("c", "d", 1)], [("a", "c", 1)]))

    def test_relabels_scrambled_cycle(self):
        # cycle 1-3-2-4 with labels out of clockwise order
        inst = multi([1, 2, 3, 4], [(1, 3, 1), (3, 2, 1), (2, 4, 1), (4, 1, 1)], [(1, 2, 1)])
        (b,) = split_blocks(inst)
        order = [b.labels[k] for k in range(1, 5)]
        assert order in ([1, 3, 2, 4], [1, 4, 2, 3])
        collapse_parallel(b.instance)


class TestParallel:
    def test_simple_identity(self, four_cycle):
        simple, emap = collapse_parallel(from_simple(four_cycle))
        assert simple.caps == four_cycle.caps
        assert all(len(parts) == 1 for parts in emap.values())

    def test_merge(self):
        inst = multi([1, 2, 3], [(1, 2, 2), (2, 3, 1), (3, 1, 1), (2, 1, 3)])
        simple, emap = collapse_parallel(inst)
        assert simple.caps[(1, 2)] == 5
        assert emap[(1, 2)] == ((1, 2), (4, 3))

    def test_three_parallels(self):
        inst = multi([1, 2, 3], [(1, 2, 1), (1, 2, 1), (1, 2, 1), (2, 3, 1), (1, 3, 1)])
        assert collapse_parallel(inst)[0].caps[(1, 2)] == 3

    def test_missing_outer_edge(self):
        with pytest.raises(MissingOuterEdge):
            collapse_parallel(multi([1, 2, 3, 4], [(1, 2, 1), (2, 3, 1), (3, 4, 1)]))

    def test_distribute(self):
        emap = {(1, 2): ((4, Fraction(2)), (7, Fraction(3))), (2, 3): ((5, Fraction(1)),)}
        assert distribute_capacity_increase(emap, {(1, 2): 5, (2, 3): 1}) == {4: 2, 7: 3, 5: 1}
        out = distribute_capacity_increase(emap, {(1, 2): Fraction(13, 2), (2, 3): Fraction(5, 2)})
        assert out == {4: Fraction(7, 2), 7: 3, 5: Fraction(5, 2)}
        with pytest.raises(CapacityDecreased):
            distribute_capacity_increase(emap, {(1, 2): 4, (2, 3): 1})


@given(st.integers(3, 11), st.integers(0, 10 ** 6))
def test_from_simple_roundtrip(n, seed):
    g = build_graph(n, random_chords(n, n // 4, random.Random(seed)))
    inst = McfInstance(g, {e: Fraction(k + 1) for k, e in enumerate(g.edges)}, ())
    simple, _ = collapse_parallel(from_simple(inst))
    assert simple.caps == inst.caps and simple.graph.chords == g.chords
