"""Seeded random open MDPs and diagrams for self-tests and property tests.

Probabilities are multiples of 1/8 and rewards are small integers, so sums
of probabilities are exact in floating point and structural comparisons of
composites can be exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import diagram as d
from .algebra import flatten
from .errors import ArityMismatch, FrozenMultiExit, WireCycle
from .model import Arity, Exit, OpenMDP, RoMDP, make_romdp, validate
from .semantics import end_trap, reachable

ACTIONS = ("a", "b")
DENOM = 8
KIND_WEIGHTS = (0.2, 0.35, 0.2, 0.25)  # leaf, seq, sum, trace


def _split(rng, total: int, parts: int) -> list[int]:
    """Random composition of ``total`` into ``parts`` positive integers."""
    cuts = sorted(rng.choice(np.arange(1, total), size=parts - 1, replace=False)) if parts > 1 else []
    bounds = [0, *cuts, total]
    return [bounds[i + 1] - bounds[i] for i in range(parts)]


def random_romdp(
    rng: np.random.Generator,
    m: int,
    n: int,
    max_positions: int = 3,
    n_actions: Optional[int] = None,
    actions: tuple[str, ...] = ACTIONS,
    entrance_wire_prob: float = 0.15,
) -> RoMDP:
    """A valid random roMDP ``m -> n`` with at least one position."""
    k_act = n_actions if n_actions is not None else int(rng.integers(1, len(actions) + 1))
    acts = actions[:k_act]
    N = int(rng.integers(1, max_positions + 1))
    names = [f"q{i}" for i in range(N)]

    # every exit gets exactly one owner: an entrance wired to it, or a (position, action)
    entrance_exit: dict[int, int] = {}
    owned: dict[tuple[int, str], list[int]] = {}
    free_entrances = list(range(m))
    rng.shuffle(free_entrances)
    preferred = [(N - 1, a) for a in acts]
    for j in range(1, n + 1):
        if free_entrances and rng.random() < entrance_wire_prob:
            entrance_exit[free_entrances.pop()] = j
            continue
        if preferred:
            key = preferred.pop(0)
        else:
            key = (int(rng.integers(N)), acts[int(rng.integers(k_act))])
        owned.setdefault(key, []).append(j)

    trans: dict[tuple[str, str], dict] = {}
    for qi in range(N):
        for a in acts:
            exits = [Exit(j) for j in owned.get((qi, a), [])]
            progress = exits + [names[t] for t in range(qi + 1, N)]
            others = [names[t] for t in range(0, qi + 1)]
            pool = progress + others
            size = int(rng.integers(1, min(3, len(pool)) + 1))
            picks: list = []
            if progress:
                picks.append(progress[int(rng.integers(len(progress)))])
            while len(picks) < size:
                t = pool[int(rng.integers(len(pool)))]
                if t not in picks:
                    picks.append(t)
            weights = _split(rng, DENOM, len(picks)) if len(picks) > 1 else [DENOM]
            trans[(names[qi], a)] = {t: w / DENOM for t, w in zip(picks, weights)}

    entry = []
    for i in range(m):
        if i in entrance_exit:
            entry.append(Exit(entrance_exit[i]))
        else:
            entry.append(names[int(rng.integers(N))])
    rewards = {q: float(rng.integers(0, 6)) for q in names}
    out = make_romdp(m, n, acts, rewards, entry, trans, positions=names)
    assert validate(out).ok, validate(out)
    return out


def random_romc(rng: np.random.Generator, m: int, n: int, max_positions: int = 3) -> RoMDP:
    return random_romdp(rng, m, n, max_positions, n_actions=1, actions=("*",))


def random_omdp(rng: np.random.Generator, dom: Arity, cod: Arity, **kw) -> OpenMDP:
    body = random_romdp(rng, dom.right + cod.left, cod.right + dom.left, **kw)
    return OpenMDP(dom, cod, body)


def terminates(o: OpenMDP | RoMDP) -> bool:
    """Every scheduler reaches an exit almost surely from every entrance."""
    body = o.body if isinstance(o, OpenMDP) else o
    return not (reachable(body) & end_trap(body))


def scheduler_space(o: OpenMDP | RoMDP) -> int:
    """Number of schedulers the brute-force oracle will enumerate."""
    body = o.body if isinstance(o, OpenMDP) else o
    total = 1
    for q in body.positions:
        total *= max(1, sum(1 for a in body.actions if body.row(q, a)))
    return total


# ------------------------------------------------------------------ diagrams


@dataclass
class RandomDiagram:
    env: dict
    expr: d.Expr
    flat: OpenMDP


class _Gen:
    def __init__(self, rng, max_positions, bidir_prob, freeze_prob, let_prob, weights=KIND_WEIGHTS):
        self.rng = rng
        self.weights = weights
        self.max_positions = max_positions
        self.bidir_prob = bidir_prob
        self.freeze_prob = freeze_prob
        self.let_prob = let_prob
        self.env: dict[str, d.Expr] = {}
        self.count = 0

    def leaf(self, dom: Arity, cod: Optional[Arity] = None) -> d.Expr:
        rng = self.rng
        if cod is None:
            left = int(rng.random() < self.bidir_prob)
            cod = Arity(int(rng.integers(1, 3)), left)
        if cod == dom and rng.random() < 0.15:
            return d.identity(dom.right, dom.left)
        if dom.left == 0 and cod.left == 0 and dom.right >= 2 and cod.right == dom.right and rng.random() < 0.15:
            a = int(rng.integers(1, dom.right))
            return d.swap(a, dom.right - a)
        self.count += 1
        comp = random_omdp(rng, dom, cod, max_positions=self.max_positions)
        leaf = d.prim(f"c{self.count}", comp)
        if rng.random() < self.let_prob:
            name = f"B{len(self.env) + 1}"
            self.env[name] = leaf
            return d.var(name, self.env)
        return leaf

    def gen(self, depth: int, dom: Arity) -> d.Expr:
        rng = self.rng
        if depth <= 0:
            return self.leaf(dom)
        kind = rng.choice(["leaf", "seq", "sum", "trace"], p=self.weights)
        if kind == "leaf":
            e = self.leaf(dom)
        elif kind == "seq":
            a = self.gen(depth - 1, dom)
            if isinstance(a, d.Var) and a.sig.cod == dom and rng.random() < 0.5:
                e = d.seq(a, a)
            else:
                e = d.seq(a, self.gen(depth - 1, a.sig.cod))
        elif kind == "sum":
            if dom.right + dom.left < 2:
                e = d.plus(self.gen(depth - 1, dom), self.leaf(Arity(0, 0), Arity(1, 0)))
            else:
                r1 = int(rng.integers(0, dom.right + 1))
                l1 = int(rng.integers(0, dom.left + 1))
                if r1 + l1 == 0:
                    r1 = 1 if dom.right else 0
                    l1 = 0 if dom.right else 1
                a = self.gen(depth - 1, Arity(r1, l1))
                b = self.gen(depth - 1, Arity(dom.right - r1, dom.left - l1))
                # sum puts b's leftward wires first, so the domain order changes
                e = d.plus(a, b)
                if e.sig.dom != dom:
                    e = d.seq(self.leaf(dom, e.sig.dom), e)
        else:
            if dom.left:
                return self.gen(depth, dom)  # tr needs a rightward operand
            l = int(rng.integers(1, 3))
            inner = self.gen(depth - 1, Arity(dom.right + l))
            c = inner.sig.cod
            if c.left or c.right < l + 1:
                inner = d.seq(inner, self.leaf(c, Arity(l + int(rng.integers(1, 3)))))
            e = d.trace(l, inner)
        if e.sig.body[1] == 1 and rng.random() < self.freeze_prob:
            e = d.freeze(e)
        return e


def random_diagram(
    rng: np.random.Generator,
    depth: int = 3,
    max_positions: int = 3,
    max_schedulers: int = 4096,
    bidir_prob: float = 0.0,
    freeze_prob: float = 0.0,
    let_prob: float = 0.2,
    dom: Optional[Arity] = None,
    tries: int = 1000,
    weights: tuple[float, float, float, float] = KIND_WEIGHTS,
    min_depth: int = 1,
) -> RandomDiagram:
    """A terminating random diagram whose flattened model has few schedulers."""
    for _ in range(tries):
        g = _Gen(rng, max_positions, bidir_prob, freeze_prob, let_prob, weights)
        start = dom or Arity(int(rng.integers(1, 3)))
        try:
            expr = g.gen(int(rng.integers(min(min_depth, depth), depth + 1)), start)
            flat = flatten(expr, g.env)
        except (WireCycle, ArityMismatch, FrozenMultiExit):
            continue
        if scheduler_space(flat) > max_schedulers or not terminates(flat):
            continue
        if any(isinstance(n, d.Freeze) for n in _all_nodes(expr, g.env)):
            if not all(terminates(flatten(n.inner, g.env)) for n in _all_nodes(expr, g.env)
                       if isinstance(n, d.Freeze)):
                continue
        return RandomDiagram(g.env, expr, flat)
    raise RuntimeError("could not generate a suitable random diagram")


def _all_nodes(expr, env):
    for n in d.walk(expr):
        yield n
    for b in env.values():
        yield from d.walk(b)
