import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from outerflow.driver import GenParams, gen_instance
from outerflow.fracflow import FractionalFlow, solve_fractional
from outerflow.geometry import Face
from outerflow.instance import CutConditionViolated, Demand, make_instance
from outerflow.pinning import (
    InfeasibleFlow,
    PathMissesBothAnchors,
    check_invariants,
    classify_demands,
    init_pinning,
    leaf_face,
    pin_demand,
    pin_step,
    run_pinning,
    verify_outcome,
)


def start(inst, backend="exact"):
    return init_pinning(inst, solve_fractional(inst), backend)


@pytest.fixture
def square_chord():
    return make_instance(4, [(1, 3)], 2, [(2, 4, 1), (1, 3, 1)])


def test_initial_labels(square_chord):
    st_ = start(square_chord)
    assert st_.labels == {(1, 2): 1, (1, 4): 1, (2, 3): 1, (3, 4): 1, (1, 3): 0}
    assert st_.partition == {1: [1], 2: [2]}
    assert check_invariants(st_) == []


def test_leaf_face_tie_break(square_chord):
    f = leaf_face(start(square_chord))
    assert f.vertex_seq == (1, 2, 3)
    assert f.closing_edge == (1, 3)


def test_classify(square_chord):
    st_ = start(square_chord)
    assert classify_demands(st_, leaf_face(st_)) == ([1], [])


def test_classify_face_pair():
    inst = make_instance(5, [(1, 4)], 2, [(1, 3, 1), (2, 5, 1)])
    st_ = start(inst)
    f = leaf_face(st_)
    assert f.vertex_seq == (1, 2, 3, 4)
    assert classify_demands(st_, f) == ([2], [1])


class TestPinDemand:
    def test_d2_inside(self):
        f = Face((1, 2, 3, 4))
        assert pin_demand(Demand(1, 1, 3, 1), (1, 2, 3), f, False) == [(1, 2), (2, 3)]

    def test_d2_around(self):
        f = Face((1, 2, 3, 4))
        assert pin_demand(Demand(1, 1, 3, 1), (1, 4, 3), f, False) == [(1, 4), (4, 3)]

    def test_d2_reversed_orientation(self):
        f = Face((1, 2, 3, 4))
        assert pin_demand(Demand(1, 3, 1, 1), (3, 2, 1), f, False) == [(3, 2), (2, 1)]

    def test_d1_fan(self):
        f = Face((1, 2, 3))
        assert pin_demand(Demand(1, 2, 4, 1), (2, 3, 4), f, True) == [(2, 3), (3, 4)]
        assert pin_demand(Demand(1, 2, 4, 1), (2, 1, 4), f, True) == [(2, 1), (1, 4)]
        assert pin_demand(Demand(1, 4, 2, 1), (4, 1, 2), f, True) == [(4, 1), (1, 2)]

    def test_route_must_hit_anchor(self):
        f = Face((1, 2, 3))
        with pytest.raises(PathMissesBothAnchors):
            pin_demand(Demand(1, 2, 5, 1), (2, 5), f, True)


def test_four_cycle_outcome(four_cycle):
    out = run_pinning(four_cycle)
    assert out.iterations == 1
    assert set(out.caps.values()) == {Fraction(23, 10)}
    assert verify_outcome(four_cycle, out) == []
    assert len(out.trace) == 1
    line = out.trace[0].line()
    assert line.startswith("iter 1 face 1,2,3,4 d1 0 d2 2 ring ")
    assert line.endswith("labels 0:0 1:0 2:4")
    for g in (1, 2):
        assert len(out.partition[g]) == 2


def test_ssw_bump(four_cycle):
    out = run_pinning(four_cycle, "ssw")
    assert set(out.caps.values()) == {Fraction(5, 2)}


def test_good_instance_untouched():
    inst = make_instance(5, [(1, 3)], 1, [(1, 2, 1), (1, 3, 1)])
    out = run_pinning(inst)
    assert out.partition == {1: [1], 2: [2]}
    assert out.iterations == 2


def test_step_after_end_raises(four_cycle):
    st_ = start(four_cycle)
    pin_step(st_)
    with pytest.raises(ValueError):
        pin_step(st_)


def test_rejects_cut_violation():
    with pytest.raises(CutConditionViolated):
        run_pinning(make_instance(4, [], 1, [(1, 3, 3)]))


def test_rejects_infeasible_start(four_cycle):
    with pytest.raises(InfeasibleFlow):
        init_pinning(four_cycle, FractionalFlow({1: [], 2: []}))


@given(st.integers(3, 8), st.integers(0, 10 ** 6), st.sampled_from(["exact", "ssw"]))
def test_outcome_properties(n, seed, backend):
    r = random.Random(seed)
    inst = gen_instance(GenParams(n, r.randint(0, n - 3), r.randint(1, 6), 0, seed))
    out = run_pinning(inst, backend)  # invariants are checked after every step
    assert out.iterations == len(inst.graph.faces)
    assert verify_outcome(inst, out) == []
    bump = out.alpha * out.d_max
    for e, c in inst.caps.items():
        assert out.caps[e] - c == (bump if inst.graph.is_outer(e) else 2 * bump)
