"""Seeded checks of the traced symmetric monoidal axioms and of compositionality.

Every axiom instance builds two diagram expressions over random components
and compares them twice: structurally (exact isomorphism of the flattened
models) and semantically (pruned fronts equal up to a tolerance). The
structural check also holds for the trace axioms because flattening resolves
loops the same way on both sides.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import diagram as d
from .algebra import flatten, seq_ro, sum_ro, trace_ro
from .bidir import int_seq, int_sum
from .errors import WireCycle
from .model import Arity, isomorphic
from .randgen import random_omdp, random_romdp
from .semantics import EvalConfig, SemanticArrow, SemOps, lift_romdp, prune, seq_sem, solve_diagram, sum_sem, trace_sem

TOL = 1e-9


def fronts_equal(f: SemanticArrow, g: SemanticArrow, tol: float = TOL) -> bool:
    """Set equality of two fronts up to ``tol``.

    Both sides are first thinned with ``tol``-dominance, which removes
    behaviours that survive exact pruning on one side only because of
    rounding. Each remaining behaviour must then have a partner on the other
    side within ``tol`` in every entry.
    """
    if f.P.shape[1:] != g.P.shape[1:]:
        return False
    a, b = prune(f, tol), prune(g, tol)
    va = np.concatenate([a.P.reshape(len(a), -1), a.R.reshape(len(a), -1)], axis=1)
    vb = np.concatenate([b.P.reshape(len(b), -1), b.R.reshape(len(b), -1)], axis=1)
    if va.shape[1] == 0:
        return True
    close = np.abs(va[:, None, :] - vb[None, :, :]).max(axis=2) <= tol
    return bool(close.any(axis=1).all() and close.any(axis=0).all())


# ------------------------------------------------------------------ builders


class _Leaves:
    def __init__(self, rng):
        self.rng = rng
        self.count = 0

    def comp(self, m: int, n: int) -> d.Expr:
        self.count += 1
        return d.prim(f"x{self.count}", random_romdp(self.rng, m, n, max_positions=3))

    def size(self, lo: int = 1, hi: int = 2) -> int:
        return int(self.rng.integers(lo, hi + 1))


def _seq_unit(g: _Leaves):
    m, n = g.size(), g.size()
    a = g.comp(m, n)
    return [(d.seq(d.identity(m), a), a), (d.seq(a, d.identity(n)), a)]


def _seq_assoc(g: _Leaves):
    k = [g.size() for _ in range(4)]
    a, b, c = g.comp(k[0], k[1]), g.comp(k[1], k[2]), g.comp(k[2], k[3])
    return [(d.seq(d.seq(a, b), c), d.seq(a, d.seq(b, c)))]


def _sum_assoc(g: _Leaves):
    a, b, c = (g.comp(g.size(), g.size()) for _ in range(3))
    return [(d.plus(d.plus(a, b), c), d.plus(a, d.plus(b, c)))]


def _bifunc1(g: _Leaves):
    m, n = g.size(), g.size()
    return [(d.plus(d.identity(m), d.identity(n)), d.identity(m + n))]


def _bifunc2(g: _Leaves):
    m1, n1, k1, m2, n2, k2 = (g.size() for _ in range(6))
    a, b = g.comp(m1, n1), g.comp(m2, n2)
    c, e = g.comp(n1, k1), g.comp(n2, k2)
    return [(d.seq(d.plus(a, b), d.plus(c, e)), d.plus(d.seq(a, c), d.seq(b, e)))]


def _swap1(g: _Leaves):
    m = g.size()
    return [(d.swap(m, 0), d.identity(m)), (d.swap(0, m), d.identity(m))]


def _swap2(g: _Leaves):
    l, m, n = g.size(), g.size(), g.size()
    lhs = d.swap(l, m + n)
    rhs = d.seq(d.plus(d.swap(l, m), d.identity(n)), d.plus(d.identity(m), d.swap(l, n)))
    return [(lhs, rhs)]


def _swap3(g: _Leaves):
    m, n = g.size(), g.size()
    return [(d.seq(d.swap(m, n), d.swap(n, m)), d.identity(m + n))]


def _swap_nat(g: _Leaves):
    m, n, m2, n2 = (g.size() for _ in range(4))
    a, b = g.comp(m, n), g.comp(m2, n2)
    return [(d.seq(d.plus(a, b), d.swap(n, n2)), d.seq(d.swap(m, m2), d.plus(b, a)))]


def _vanishing1(g: _Leaves):
    a = g.comp(g.size(), g.size())
    return [(d.trace(0, a), a)]


def _vanishing2(g: _Leaves):
    l, k = g.size(), g.size()
    a = g.comp(l + k + g.size(), l + k + g.size())
    return [(d.trace(l + k, a), d.trace(k, d.trace(l, a)))]


def _superposing(g: _Leaves):
    l = g.size()
    a = g.comp(l + g.size(), l + g.size())
    b = g.comp(g.size(), g.size())
    return [(d.plus(d.trace(l, a), b), d.trace(l, d.plus(a, b)))]


def _yanking(g: _Leaves):
    m = g.size()
    return [(d.trace(m, d.swap(m, m)), d.identity(m))]


def _naturality1(g: _Leaves):
    l, m, n, m2 = (g.size() for _ in range(4))
    a, b = g.comp(l + m, l + n), g.comp(m2, m)
    return [(d.trace(l, d.seq(d.plus(d.identity(l), b), a)), d.seq(b, d.trace(l, a)))]


def _naturality2(g: _Leaves):
    l, m, n, n2 = (g.size() for _ in range(4))
    a, b = g.comp(l + m, l + n), g.comp(n, n2)
    return [(d.trace(l, d.seq(a, d.plus(d.identity(l), b))), d.seq(d.trace(l, a), b))]


def _dinaturality(g: _Leaves):
    l, k, m, n = (g.size() for _ in range(4))
    a, b = g.comp(l + m, k + n), g.comp(k, l)
    return [(d.trace(l, d.seq(a, d.plus(b, d.identity(n)))), d.trace(k, d.seq(d.plus(b, d.identity(m)), a)))]


@dataclass(frozen=True)
class Axiom:
    name: str
    build: Callable
    structural: bool  # holds up to isomorphism of the flattened models
    wire_only: bool = False


AXIOMS: tuple[Axiom, ...] = (
    Axiom("seq-unit", _seq_unit, True),
    Axiom("seq-assoc", _seq_assoc, True),
    Axiom("sum-assoc", _sum_assoc, True),
    Axiom("bifunctoriality-1", _bifunc1, True, wire_only=True),
    Axiom("bifunctoriality-2", _bifunc2, True),
    Axiom("swap-1", _swap1, True, wire_only=True),
    Axiom("swap-2", _swap2, True, wire_only=True),
    Axiom("swap-3", _swap3, True, wire_only=True),
    Axiom("swap-naturality", _swap_nat, True),
    Axiom("vanishing-1", _vanishing1, True),
    Axiom("vanishing-2", _vanishing2, True),
    Axiom("superposing", _superposing, True),
    Axiom("yanking", _yanking, True, wire_only=True),
    Axiom("naturality-1", _naturality1, True),
    Axiom("naturality-2", _naturality2, True),
    Axiom("dinaturality", _dinaturality, True),
)


@dataclass
class AxiomResult:
    name: str
    instances: int = 0
    structural_failures: int = 0
    semantic_failures: int = 0
    examples: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.instances > 0 and not (self.structural_failures or self.semantic_failures)


def check_pair(lhs: d.Expr, rhs: d.Expr, structural: bool, cfg: EvalConfig = EvalConfig(), tol: float = TOL):
    """(structural_ok, semantic_ok); structural_ok is None when not applicable."""
    s_ok = None
    if structural:
        s_ok = isomorphic(flatten(lhs).body, flatten(rhs).body) is not None
    sem_ok = fronts_equal(solve_diagram(lhs, {}, cfg), solve_diagram(rhs, {}, cfg), tol)
    return s_ok, sem_ok


def run_axiom(ax: Axiom, rng: np.random.Generator, cases: int = 100, tol: float = TOL) -> AxiomResult:
    res = AxiomResult(ax.name)
    attempts = 0
    while res.instances < cases:
        attempts += 1
        if attempts > 50 * cases:
            break
        try:
            pairs = ax.build(_Leaves(rng))
        except WireCycle:
            continue  # a random component wired an entrance straight into the loop
        for lhs, rhs in pairs:
            s_ok, sem_ok = check_pair(lhs, rhs, ax.structural, tol=tol)
            res.structural_failures += s_ok is False
            res.semantic_failures += not sem_ok
            if (s_ok is False or not sem_ok) and len(res.examples) < 3:
                res.examples.append((lhs, rhs))
        res.instances += 1
    return res


def run_axioms(seed: int = 0, cases: int = 100, names=None, tol: float = TOL) -> list[AxiomResult]:
    rng = np.random.default_rng(seed)
    return [run_axiom(ax, rng, cases, tol) for ax in AXIOMS if names is None or ax.name in names]


# ------------------------------------------------------------ functoriality


def functoriality_seq(rng, cfg: EvalConfig = EvalConfig(), bidir: bool = False) -> bool:
    """Solving a sequential composite equals composing the solutions."""
    if bidir:
        while True:
            dom, mid, cod = (Arity(int(rng.integers(0, 2)) + 1, int(rng.integers(0, 2))) for _ in range(3))
            a, b = random_omdp(rng, dom, mid, n_actions=2), random_omdp(rng, mid, cod, n_actions=2)
            try:
                whole = lift_romdp(flatten(d.seq(d.prim("a", a), d.prim("b", b))).body, cfg)
                break
            except WireCycle:
                continue
        parts = int_seq(SemOps(cfg), lift_romdp(a.body, cfg), lift_romdp(b.body, cfg), dom, mid, cod)
        return fronts_equal(whole, parts)
    m, l, n = (int(rng.integers(1, 3)) for _ in range(3))
    a, b = random_romdp(rng, m, l, n_actions=2), random_romdp(rng, l, n, n_actions=2)
    return fronts_equal(lift_romdp(seq_ro(a, b), cfg), seq_sem(lift_romdp(a, cfg), lift_romdp(b, cfg), cfg))


def functoriality_sum(rng, cfg: EvalConfig = EvalConfig(), bidir: bool = False) -> bool:
    if bidir:
        # sums never close loops of bare wires, so no retry is needed
        ar = [Arity(int(rng.integers(0, 2)) + 1, int(rng.integers(0, 2))) for _ in range(4)]
        a, b = random_omdp(rng, ar[0], ar[1], n_actions=2), random_omdp(rng, ar[2], ar[3], n_actions=2)
        whole = lift_romdp(flatten(d.plus(d.prim("a", a), d.prim("b", b))).body, cfg)
        parts = int_sum(SemOps(cfg), lift_romdp(a.body, cfg), lift_romdp(b.body, cfg), *ar)
        return fronts_equal(whole, parts)
    a = random_romdp(rng, int(rng.integers(1, 3)), int(rng.integers(1, 3)), n_actions=2)
    b = random_romdp(rng, int(rng.integers(1, 3)), int(rng.integers(1, 3)), n_actions=2)
    return fronts_equal(lift_romdp(sum_ro(a, b), cfg), sum_sem(lift_romdp(a, cfg), lift_romdp(b, cfg), cfg))


def functoriality_trace(rng, cfg: EvalConfig = EvalConfig()) -> bool:
    while True:
        l = int(rng.integers(1, 3))
        e = random_romdp(rng, l + int(rng.integers(1, 3)), l + int(rng.integers(1, 3)))
        try:
            whole = lift_romdp(trace_ro(l, e), cfg)
        except WireCycle:
            continue
        return fronts_equal(whole, trace_sem(l, lift_romdp(e, cfg), cfg))
