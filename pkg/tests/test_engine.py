from __future__ import annotations

import numpy as np
import pytest

from compmdp.algebra import identity_wire, seq_ro, sum_ro, trace_ro
from compmdp.engine import (
    DENSE_LIMIT,
    SemanticArrowMC,
    path_oracle,
    seq_mc,
    solve_component_mc,
    solve_schedulers,
    sum_mc,
    trace_mc,
)
from compmdp.errors import ArityMismatch, BudgetExceeded, MalformedModel
from compmdp.model import Exit, induced_mc, make_romdp
from compmdp.randgen import random_romc, random_romdp

from conftest import task_mdp


def arrow(p, r):
    return SemanticArrowMC(np.array(p, dtype=float), np.array(r, dtype=float))


def test_identity_wire():
    s = solve_component_mc(identity_wire(1))
    assert s.p.tolist() == [[1.0]] and s.r.tolist() == [[0.0]]


def test_task_geometric_series():
    s = solve_component_mc(task_mdp())
    assert s.p[0, 0] == pytest.approx(1.0, abs=1e-12)
    assert s.r[0, 0] == pytest.approx(5.0, abs=1e-12)


def test_dead_end_loses_mass():
    c = make_romdp(1, 1, ["*"], {"q": 1, "d": 0}, ["q"], {("q", "*"): {Exit(1): 0.5, "d": 0.5}})
    s = solve_component_mc(c)
    assert s.p[0, 0] == pytest.approx(0.5) and s.r[0, 0] == pytest.approx(0.5)


def test_unreachable_exit_is_snapped_to_zero():
    c = make_romdp(1, 2, ["*"], {"q": 3}, ["q"], {("q", "*"): {Exit(1): 1.0}})
    s = solve_component_mc(c)
    assert s.p[0, 1] == 0.0 and s.r[0, 1] == 0.0


def test_solve_requires_chain():
    c = make_romdp(1, 1, ["x", "y"], {"q": 0}, ["q"], {("q", "x"): {Exit(1): 1.0}})
    with pytest.raises(MalformedModel):
        solve_component_mc(c)


def test_large_chain_uses_sparse_path():
    n = DENSE_LIMIT + 500
    names = [f"s{i}" for i in range(n)]
    trans = {(names[i], "*"): {names[i]: 0.5, (names[i + 1] if i + 1 < n else Exit(1)): 0.5} for i in range(n)}
    c = make_romdp(1, 1, ["*"], {q: 1.0 for q in names}, [names[0]], trans, positions=names)
    s = solve_component_mc(c)
    assert s.p[0, 0] == pytest.approx(1.0, abs=1e-9)
    assert s.r[0, 0] == pytest.approx(2.0 * n, rel=1e-9)


def test_seq_mc_example():
    out = seq_mc(arrow([[0.5]], [[1]]), arrow([[0.5]], [[2]]))
    assert out.p[0, 0] == pytest.approx(0.25) and out.r[0, 0] == pytest.approx(1.5)


def test_seq_mc_identity_and_zero():
    f = arrow([[0.3, 0.5]], [[1, 2]])
    assert seq_mc(f, SemanticArrowMC.identity(2)).allclose(f)
    zero = arrow([[0.0]], [[0.0]])
    g = arrow([[0.7]], [[3.0]])
    out = seq_mc(zero, g)
    assert out.p[0, 0] == 0.0 and out.r[0, 0] == 0.0
    with pytest.raises(ArityMismatch):
        seq_mc(f, g)


def test_sum_mc_block_diagonal():
    out = sum_mc(arrow([[0.5]], [[1]]), arrow([[0.25]], [[2]]))
    assert out.p.tolist() == [[0.5, 0.0], [0.0, 0.25]]
    assert out.r.tolist() == [[1.0, 0.0], [0.0, 2.0]]
    empty = SemanticArrowMC(np.zeros((0, 0)), np.zeros((0, 0)))
    f = arrow([[0.5]], [[1]])
    assert sum_mc(f, empty).allclose(f)


def test_trace_zero_loops_is_identity():
    f = arrow([[0.5, 0.5]], [[1, 2]])
    assert trace_mc(0, f).allclose(f)


def test_trace_geometric_loop():
    # port 1 is the loop: B = 0.5 (loop->loop), A = 0.5 (entrance->loop), C = 1 (loop->exit)
    f = arrow([[0.5, 1.0], [0.5, 0.0]], [[0, 0], [0, 0]])
    assert trace_mc(1, f).p[0, 0] == pytest.approx(1.0)


def test_trace_reward_loop_matches_flattened():
    # entrance 2 and loop entrance 1 both lead to q (R=1); q leaves to the loop or the exit
    e = make_romdp(2, 2, ["*"], {"q": 1.0}, ["q", "q"], {("q", "*"): {Exit(1): 0.5, Exit(2): 0.5}})
    traced = trace_mc(1, solve_component_mc(e))
    flat = solve_component_mc(trace_ro(1, e))
    assert traced.p[0, 0] == pytest.approx(1.0) and traced.r[0, 0] == pytest.approx(2.0)
    assert traced.allclose(flat, 1e-12)


def test_path_oracle_examples():
    assert path_oracle(identity_wire(1), 1, 1, 0) == (1.0, 0.0, 0.0)
    p, r, res = path_oracle(task_mdp(), 1, 1, 100)
    assert abs(p - 1) < 1e-9 and abs(r - 5) < 1e-6 and res < 1e-60


def test_path_oracle_monotone_in_horizon(rng):
    for _ in range(20):
        c = random_romc(rng, 1, 2)
        last = -1.0
        for h in range(0, 30, 3):
            p, _, _ = path_oracle(c, 1, 1, h)
            assert p >= last - 1e-15
            last = p


def test_path_oracle_budget():
    with pytest.raises(BudgetExceeded):
        path_oracle(task_mdp(), 1, 1, 1000, budget=10)


def test_solve_schedulers_matches_individual_solves(rng):
    for _ in range(20):
        c = random_romdp(rng, 2, 2, max_positions=4, n_actions=2)
        scheds = list(c.schedulers())
        idx = {a: i for i, a in enumerate(c.actions)}
        choices = np.array([[idx[s[q]] for q in c.positions] for s in scheds])
        P, R = solve_schedulers(c, choices)
        for k, s in enumerate(scheds):
            one = solve_component_mc(induced_mc(c, s))
            assert np.allclose(P[k], one.p, atol=1e-12) and np.allclose(R[k], one.r, atol=1e-12)


def test_decomposition_small(rng):
    for _ in range(30):
        c, e = random_romc(rng, 2, 2), random_romc(rng, 2, 1)
        assert solve_component_mc(seq_ro(c, e)).allclose(seq_mc(solve_component_mc(c), solve_component_mc(e)))
        assert solve_component_mc(sum_ro(c, e)).allclose(sum_mc(solve_component_mc(c), solve_component_mc(e)),
                                                         1e-12)


def test_realizability_and_subnormality(rng):
    for _ in range(50):
        s = solve_component_mc(random_romc(rng, 2, 3, max_positions=5))
        assert (s.p.sum(axis=1) <= 1 + 1e-9).all()
        assert (s.r[s.p == 0] == 0).all()
        assert (s.r >= -1e-12).all()
