from __future__ import annotations

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from compmdp import diagram as d
from compmdp.algebra import flatten
from compmdp.dsl import parse_diagram, print_diagram
from compmdp.engine import path_oracle, seq_batch, solve_component_mc, sum_batch, trace_batch
from compmdp.randgen import random_diagram, random_romc
from compmdp.semantics import SemanticArrow, extract_optimal, prune, solve_diagram

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def prim_loader(env, expr):
    refs = {}
    for node in list(d.walk(expr)) + [n for b in env.values() for n in d.walk(b)]:
        if isinstance(node, d.Prim):
            refs[node.ref] = node.component
    return refs.__getitem__


def test_round_trip_many_random_asts():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        rd = random_diagram(rng, depth=4, bidir_prob=0.3, freeze_prob=0.2, let_prob=0.3)
        text = print_diagram(rd.env, rd.expr)
        prog = parse_diagram(text, loader=prim_loader(rd.env, rd.expr))
        assert prog.bindings == rd.env and prog.expr == rd.expr
        assert print_diagram(prog) == text


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_parsed_diagrams_evaluate(seed):
    # whatever the parser accepts the evaluator accepts as well
    rd = random_diagram(np.random.default_rng(seed), depth=3, bidir_prob=0.3)
    prog = parse_diagram(print_diagram(rd.env, rd.expr), loader=prim_loader(rd.env, rd.expr))
    f = solve_diagram(prog.expr, prog.bindings)
    assert (f.m, f.n) == prog.expr.sig.body == (rd.flat.body.m, rd.flat.body.n)


@settings(max_examples=80, deadline=None)
@given(seeds)
def test_path_oracle_sandwich(seed):
    rng = np.random.default_rng(seed)
    c = random_romc(rng, 2, 2, max_positions=5)
    s = solve_component_mc(c)
    horizon = 60
    rmax = max(c.rewards.values(), default=0.0)
    for i in range(c.m):
        for j in range(c.n):
            p, r, res = path_oracle(c, i + 1, j + 1, horizon)
            assert p - 1e-12 <= s.p[i, j] <= p + res + 1e-12
            assert r - 1e-9 <= s.r[i, j]
            if res < 1e-8:
                assert abs(s.p[i, j] - p) < 1e-6


@settings(max_examples=100, deadline=None)
@given(seeds, st.integers(1, 6), st.integers(1, 3), st.integers(1, 3))
def test_prune_keeps_optimum(seed, k, m, n):
    rng = np.random.default_rng(seed)
    P = rng.integers(0, 5, size=(k, m, n)) / 8.0  # coarse values create ties and duplicates
    R = rng.integers(0, 4, size=(k, m, n)) * (P > 0)
    f = SemanticArrow(P, R.astype(float), tuple(("t", x) for x in range(k)))
    g = prune(f)
    for i in range(m):
        for j in range(n):
            assert extract_optimal(g, i + 1, j + 1)[:2] == extract_optimal(f, i + 1, j + 1)[:2]


def _random_arrow(rng, m, n):
    p = rng.random((m, n))
    p /= p.sum(axis=1, keepdims=True) * (1 + rng.random((m, 1)))
    return p, rng.random((m, n)) * 3 * (p > 0)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_operators_are_monotone(seed):
    rng = np.random.default_rng(seed)
    l, m, n = 1 + rng.integers(2), 1 + rng.integers(2), 1 + rng.integers(2)
    pf, rf = _random_arrow(rng, l + m, l + n)
    pg, rg = _random_arrow(rng, l + n, m)
    which = rng.integers(4)
    up_p, up_r = pf.copy(), rf.copy()
    a, b = rng.integers(l + m), rng.integers(l + n)
    if which % 2:
        up_r[a, b] += rng.random()
    else:
        up_p[a, b] = min(1.0, up_p[a, b] + rng.random() * (1 - pf[a].sum()))
    for op in (
        lambda P, R: seq_batch(P[None], R[None], pg[None], rg[None]),
        lambda P, R: sum_batch(P[None], R[None], pg[None], rg[None]),
        lambda P, R: trace_batch(l, P[None], R[None]),
    ):
        base_p, base_r = op(pf, rf)
        new_p, new_r = op(up_p, up_r)
        assert (new_p >= base_p - 1e-12).all() and (new_r >= base_r - 1e-12).all()


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_flatten_and_compositional_agree_on_wire_structure(seed):
    rd = random_diagram(np.random.default_rng(seed), depth=3, bidir_prob=0.4)
    assert rd.expr.sig.body == (rd.flat.body.m, rd.flat.body.n)
    flat_wires = tuple(t.index if not isinstance(t, str) else None for t in rd.flat.body.entry)
    assert flat_wires == rd.expr.sig.wires.targets
