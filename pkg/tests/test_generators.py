from __future__ import annotations

import pytest

from compmdp import diagram as d
from compmdp.algebra import flatten
from compmdp.generators import (
    di_copies,
    generate_packets,
    generate_patrol,
    generate_wholesale,
    patrol_positions,
)
from compmdp.oracle import brute_force
from compmdp.randgen import terminates
from compmdp.semantics import Evaluator, extract_optimal

FAMILIES = {
    "patrol": lambda di, **kw: generate_patrol(tasks=2, rooms=3, floors=2, buildings=3, di=di, **kw),
    "wholesale": lambda di, **kw: generate_wholesale(stages=2, hubs=2, regions=4, di=di, **kw),
    "packets": lambda di, **kw: generate_packets(steps=5, blocks=20, di=di, **kw),
}


def solve(g):
    prog = g.program()
    ev = Evaluator(prog.bindings)
    p, r, _ = extract_optimal(ev.evaluate(prog.expr), 1, 1)
    return p, r, ev.stats


@pytest.mark.parametrize("family", sorted(FAMILIES))
def test_same_seed_is_byte_identical(family):
    assert FAMILIES[family]("high", seed=7).files == FAMILIES[family]("high", seed=7).files


@pytest.mark.parametrize("family", sorted(FAMILIES))
def test_env_seed_override(family, monkeypatch):
    monkeypatch.setenv("COMPMDP_SEED", "99")
    a = FAMILIES[family]("high", seed=1).files
    b = FAMILIES[family]("high", seed=2).files
    assert a == b


@pytest.mark.parametrize("family", sorted(FAMILIES))
def test_di_mid_doubles_bindings(family):
    high = FAMILIES[family]("high")
    mid = FAMILIES[family]("mid")
    shared = sum(1 for line in high.files[high.diagram].splitlines()
                 if line.startswith(("let Source", "let Sink")))
    assert mid.binding_count() - shared == 2 * (high.binding_count() - shared)


@pytest.mark.parametrize("family", sorted(FAMILIES))
def test_di_scales_component_solves(family):
    p0, r0, base = solve(FAMILIES[family]("high"))
    shared = 2 if family == "wholesale" else 0  # Source and Sink are never duplicated
    for di in ("mid", "low"):
        p, r, st = solve(FAMILIES[family](di))
        k = di_copies(di, family)
        assert st.component_solves - shared == k * (base.component_solves - shared)
        assert abs(p - p0) <= 1e-12 and abs(r - r0) <= 1e-12 * max(1.0, abs(r0))


def test_patrol_position_count():
    for sizes in [(2, 2, 1, 1), (1, 1, 1, 1), (3, 2, 2, 3)]:
        g = generate_patrol(*sizes)
        prog = g.program()
        assert len(flatten(prog.expr, prog.bindings).body.positions) == patrol_positions(*sizes)
        assert d.implicit_size(prog.expr, prog.bindings) == patrol_positions(*sizes)


@pytest.mark.parametrize("g", [
    generate_patrol(),
    generate_wholesale(stages=1, hubs=1, regions=2),
    generate_wholesale(stages=2, hubs=1, regions=2),
    generate_packets(steps=2, blocks=3, variants=2),
])
def test_small_instances_match_oracle(g):
    prog = g.program()
    flat = flatten(prog.expr, prog.bindings)
    assert terminates(flat)
    best = brute_force(flat, limit=1 << 20)
    p, r, _ = solve(g)
    assert abs(p - best.p[0, 0]) < 1e-9 and abs(r - best.r[0, 0]) < 1e-9


def test_packets_freeze_equivalence():
    a = solve(generate_packets(steps=20, blocks=10, fz="none"))
    b = solve(generate_packets(steps=20, blocks=10, fz="int"))
    assert abs(a[0] - b[0]) < 1e-9 and abs(a[1] - b[1]) < 1e-9
    assert b[2].freezes > 0


def test_bad_sizes():
    with pytest.raises(ValueError):
        generate_patrol(tasks=0)
    with pytest.raises(ValueError):
        generate_patrol(buildings=2, di="low")
    with pytest.raises(ValueError):
        generate_packets(fz="all")


def test_write(tmp_path):
    g = generate_patrol()
    paths = g.write(tmp_path)
    assert {p.name for p in paths} == set(g.files)
    assert (tmp_path / "patrol.diag").read_text() == g.files["patrol.diag"]
