from __future__ import annotations

import pytest

from compmdp import diagram as d
from compmdp.dsl import format_real, parse_component, parse_diagram, print_component, print_diagram, print_expr
from compmdp.errors import ArityMismatch, DiagramSyntaxError, UnboundName, ValidationError
from compmdp.generators import generate_packets, generate_patrol, generate_wholesale
from compmdp.model import Arity, Exit, isomorphic

from conftest import TASK_TEXT


def test_parse_task_component():
    o = parse_component(TASK_TEXT)
    b = o.body
    assert (o.dom, o.cod) == (Arity(1), Arity(1))
    assert b.positions == ("q",) and b.rewards["q"] == 4.0
    assert b.row("q", "work") == {"q": 0.2, Exit(1): 0.8}


def test_missing_entry_is_syntax_error():
    text = TASK_TEXT.replace("  entry 1 -> q\n", "")
    with pytest.raises(DiagramSyntaxError) as err:
        parse_component(text)
    assert err.value.line > 0 and "entry" in str(err.value)


def test_row_sum_violation():
    with pytest.raises(ValidationError) as err:
        parse_component(TASK_TEXT.replace("exit 1: 0.8", "exit 1: 0.7"))
    assert "row-sum" in err.value.report.rules()
    assert "task" in str(err.value)


def test_bidirectional_component():
    text = """omdp b {
      arity (1,1) -> (1,0)   # one wire returns on the left
      actions [a]
      positions { x reward 1.5 }
      entry 1 -> x
      trans x a { exit 1: 0.5, exit 2: 0.5 }
    }"""
    o = parse_component(text)
    assert (o.dom, o.cod) == (Arity(1, 1), Arity(1, 0))
    assert (o.body.m, o.body.n) == (1, 2)


def test_entry_straight_to_exit_and_empty_positions():
    o = parse_component("mdp w { arity 1 -> 1 actions [a] positions { } entry 1 -> exit 1 }")
    assert o.body.entry == (Exit(1),) and o.body.positions == ()


def test_component_print_round_trip():
    o = parse_component(TASK_TEXT)
    again = parse_component(print_component(o, "task"))
    assert isomorphic(o.body, again.body) == {"q": "q"}
    assert print_component(again, "task") == print_component(o, "task")


def test_format_real():
    assert format_real(0.2) == "0.2"
    assert format_real(1 / 3) == "0.333333333333" or float(format_real(1 / 3)) == 1 / 3
    assert float(format_real(0.1 + 0.2)) == 0.1 + 0.2


def write_task(tmp_path):
    (tmp_path / "task.omdp").write_text(TASK_TEXT)
    return tmp_path


def test_parse_let_example(tmp_path):
    prog = parse_diagram('let T = load "task.omdp"; T ; T', base_dir=write_task(tmp_path))
    assert list(prog.bindings) == ["T"]
    assert isinstance(prog.expr, d.Seq)
    assert prog.expr.left == d.Var("T", None) and prog.expr.right == d.Var("T", None)


def test_solve_line_with_entrance_exit(tmp_path):
    prog = parse_diagram('let T = load "task.omdp";\nsolve T (+) T entrance 2 exit 2', base_dir=write_task(tmp_path))
    assert (prog.entrance, prog.exit) == (2, 2)
    assert prog.expr.sig.body == (2, 2)


def test_precedence_seq_binds_tighter(tmp_path):
    prog = parse_diagram('let T = load "task.omdp"; solve T ; T (+) T ; T', base_dir=write_task(tmp_path))
    e = prog.expr
    assert isinstance(e, d.Sum) and isinstance(e.left, d.Seq) and isinstance(e.right, d.Seq)


def test_trace_arity_checked(tmp_path):
    (tmp_path / "e.omdp").write_text(
        "mdp e { arity 1 -> 2 actions [a] positions { x reward 0 } entry 1 -> x "
        "trans x a { exit 1: 0.5, exit 2: 0.5 } }")
    with pytest.raises(ArityMismatch):
        parse_diagram('let E = load "e.omdp"; solve tr[1](E)', base_dir=tmp_path)


def test_seq_arity_checked(tmp_path):
    with pytest.raises(ArityMismatch):
        parse_diagram('let T = load "task.omdp"; solve T ; id[2]', base_dir=write_task(tmp_path))


def test_unbound_name():
    with pytest.raises(UnboundName):
        parse_diagram("solve X ; id[1]")


def test_syntax_errors_carry_position():
    with pytest.raises(DiagramSyntaxError) as err:
        parse_diagram("solve id[1] ;; id[1]")
    assert err.value.line == 1 and err.value.col > 1
    with pytest.raises(DiagramSyntaxError):
        parse_diagram("let solve = id[1]; solve id[1]")
    with pytest.raises(DiagramSyntaxError):
        parse_diagram("solve swap[1]")


def test_print_examples():
    assert print_expr(d.identity(1)) == "id[1]"
    assert print_expr(d.seq(d.identity(1), d.identity(1))) == "id[1] ; id[1]"
    e = d.seq(d.plus(d.identity(1), d.identity(1)), d.swap(1, 1))
    assert print_expr(e) == "(id[1] (+) id[1]) ; swap[1,1]"
    right = d.seq(d.identity(1), d.seq(d.identity(1), d.identity(1)))
    assert print_expr(right) == "id[1] ; (id[1] ; id[1])"
    assert print_expr(d.trace(1, d.swap(1, 1))) == "tr[1](swap[1,1])"


@pytest.mark.parametrize("gen", [
    lambda: generate_patrol(tasks=2, rooms=3, floors=2, buildings=2, di="mid"),
    lambda: generate_wholesale(stages=2, hubs=2, regions=4, di="low"),
    lambda: generate_packets(steps=4, blocks=6, fz="int", di="mid"),
])
def test_generator_outputs_round_trip(gen):
    g = gen()
    prog = g.program()
    text = print_diagram(prog)
    again = parse_diagram(text, loader=g.loader())
    assert again.bindings == prog.bindings and again.expr == prog.expr
    assert print_diagram(again) == text
