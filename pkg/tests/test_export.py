from __future__ import annotations

import re

from compmdp import diagram as d
from compmdp.algebra import flatten
from compmdp.dsl import parse_component
from compmdp.engine import solve_component_mc
from compmdp.export import to_native, to_prism
from compmdp.generators import generate_patrol
from compmdp.model import Arity, Exit, OpenMDP, isomorphic, make_romdp

from conftest import TASK_TEXT


def test_prism_task():
    text = to_prism(parse_component(TASK_TEXT))
    assert "mdp" in text.splitlines()
    assert "s : [0..2] init 0;" in text
    assert "[work] s=0 -> 0.2:(s'=0) + 0.8:(s'=1);" in text
    assert "[] s=1 -> 1:(s'=1);" in text  # absorbing exit
    assert 's=0 : 4;' in text
    assert 'label "exit1" = s=1;' in text
    assert "infinity" in text  # reward-convention caveat


def test_prism_identity_has_no_positions():
    text = to_prism(flatten(d.identity(1)))
    assert "s : [0..1] init 0;" in text
    assert 'label "exit1" = s=0;' in text


def test_prism_dead_end_and_partial_rows():
    c = make_romdp(1, 1, ["go", "x-y"], {"q": 1, "dead": 0}, ["q"],
                   {("q", "go"): {Exit(1): 0.5, "dead": 0.5}, ("q", "x-y"): {Exit(1): 1.0}})
    text = to_prism(OpenMDP(Arity(1), Arity(1), c))
    assert "[x_y] s=0" in text  # action names are sanitised
    assert "[] s=1 -> 1:(s'=3);" in text  # dead end goes to the sink


def test_prism_commands_are_distributions():
    g = generate_patrol()
    prog = g.program()
    text = to_prism(flatten(prog.expr, prog.bindings))
    for line in text.splitlines():
        if "->" in line and line.strip().startswith("["):
            probs = [float(x) for x in re.findall(r"([0-9.eE-]+):\(s'", line)]
            assert abs(sum(probs) - 1) < 1e-12


def test_native_round_trip():
    g = generate_patrol()
    prog = g.program()
    flat = flatten(prog.expr, prog.bindings)
    again = parse_component(to_native(flat))
    assert isomorphic(flat.body, again.body) is not None


def test_native_bidirectional_keeps_arity():
    o = parse_component("omdp b { arity (1,1) -> (1,0) actions [a] positions { x reward 1 } "
                        "entry 1 -> x trans x a { exit 1: 0.5, exit 2: 0.5 } }")
    again = parse_component(to_native(o))
    assert (again.dom, again.cod) == (o.dom, o.cod)
    assert solve_component_mc(again.body).allclose(solve_component_mc(o.body))
