from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from outerflow.driver import GenParams, as_multi, gen_instance, gen_ring, solve
from outerflow.formats import (
    BadVertex,
    ParseError,
    emit_routing,
    format_instance,
    format_ring,
    format_ring_routing,
    parse_instance,
    parse_ring,
    parse_routing,
)
from outerflow.instance import InstanceError
from outerflow.ringload import solve_ring_exact

SQUARE = """\
# unit square
p outerplanar 4 4 2
e 1 2 1
e 2 3 1
e 3 4 1
e 4 1 1   # closing edge
d 1 3 1
d 2 4 1
"""


def test_parse_square():
    inst = parse_instance(SQUARE)
    assert inst.vertices == (1, 2, 3, 4)
    assert inst.edges[4].ends == frozenset((1, 4))
    assert [(g.id, g.u, g.v, g.value) for g in inst.demands] == [(1, 1, 3, 1), (2, 2, 4, 1)]


def test_rationals():
    inst = parse_instance(SQUARE.replace("e 1 2 1", "e 1 2 3/4").replace("d 1 3 1", "d 1 3 0.5"))
    assert inst.edges[1].cap == Fraction(3, 4)
    assert inst.demands[0].value == Fraction(1, 2)


@pytest.mark.parametrize("text, err, line", [
    ("", ParseError, None),
    ("p ring 4 0\n", ParseError, 1),
    ("p outerplanar 2 1 0\ne 1 2 1\n", ParseError, 1),
    (SQUARE.replace("e 2 3 1", "e 2 9 1"), BadVertex, 4),
    (SQUARE.replace("e 2 3 1", "e 2 2 1"), BadVertex, 4),
    (SQUARE.replace("e 2 3 1", "e 2 3 -1"), ParseError, 4),
    (SQUARE.replace("e 2 3 1", "e 2 3 x"), ParseError, 4),
    (SQUARE.replace("d 2 4 1", "q 2 4 1"), ParseError, 8),
    (SQUARE.replace("p outerplanar 4 4 2", "p outerplanar 4 4 3"), ParseError, 2),
])
def test_parse_errors(text, err, line):
    with pytest.raises(err) as info:
        parse_instance(text)
    assert info.value.line == line


def test_structural_errors():
    with pytest.raises(InstanceError):
        parse_instance(SQUARE.replace("e 2 3 1", "e 1 3 1"))  # outer edge {2,3} missing
    crossing = "p outerplanar 4 6 0\ne 1 2 1\ne 2 3 1\ne 3 4 1\ne 4 1 1\ne 1 3 1\ne 2 4 1\n"
    with pytest.raises(Exception) as info:
        parse_instance(crossing)
    assert not isinstance(info.value, AssertionError)


@given(st.integers(3, 10), st.integers(0, 8), st.integers(0, 10 ** 6))
def test_instance_roundtrip(n, m, seed):
    inst = gen_instance(GenParams(n, seed % (n - 2), m, None, seed))
    back = parse_instance(format_instance(inst, "c"))
    multi = as_multi(inst)
    assert back.edges == multi.edges and back.demands == multi.demands


def test_ring_roundtrip():
    ring = gen_ring(6, 4, 3)
    back = parse_ring(format_ring(ring, "seed 3"))
    assert back.caps == ring.caps and back.demands == ring.demands
    with pytest.raises(BadVertex):
        parse_ring("p ring 4 0\ne 1 3 1\n")
    with pytest.raises(ParseError):
        parse_ring("p ring 3 0\ne 1 2 1\ne 2 3 1\n")


def test_ring_routing_text():
    ring = parse_ring("p ring 4 2\ne 1 2 1\ne 2 3 1\ne 3 4 1\ne 4 1 1\nd 1 3 1\nd 2 4 1\n")
    routing, viol = solve_ring_exact(ring)
    assert format_ring_routing(ring, routing, viol) == \
        "p ringrouting 2\nz 1 cw 1 2 3\nz 2 cw 2 3 4\nviolation 1\n"


def test_routing_roundtrip(four_cycle):
    res = solve(four_cycle)
    text = emit_routing(res.routing, res.violation, res.bound)
    assert text.splitlines()[-2:] == ["violation 1", "bound 18/5"]
    routing, viol, bound = parse_routing(text, res.instance)
    assert routing == res.routing and viol == 1 and bound == Fraction(18, 5)


def test_routing_without_edge_ids():
    inst = parse_instance(SQUARE)
    routing, viol, bound = parse_routing("p routing 2\nr 1 1 2 3\nr 2 2 1 4\n", inst)
    assert routing.routes[1].edges == (1, 2)
    assert routing.routes[2].edges == (1, 4)
    assert viol is None and bound is None


@pytest.mark.parametrize("text", [
    "p routing 2\nr 1 1 2 3\n",
    "p routing 1\nr 1 1 2 3\nr 1 1 2 3\n",
    "p routing 1\nr 1 1 3\n",
    "p routing 1\nr 1 1 2\nw 2 1\n",
    "p routing 1\nr 1 1 2\nviolation\n",
])
def test_routing_errors(text):
    with pytest.raises(ParseError):
        parse_routing(text, parse_instance(SQUARE))
