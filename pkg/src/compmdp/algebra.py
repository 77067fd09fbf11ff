"""Structural composition of open MDPs: wires, ``;``, sum, trace and twists.

Composites keep the positions of their operands. When both operands of a
binary operation own positions, the left operand's names get the prefix
``L/`` and the right operand's ``R/``; when one side is position-free (a wire)
names pass through unchanged. Scheduler tags use the same rule, so a witness
scheduler can be mapped onto a flattened model by name.
"""

from __future__ import annotations

from typing import Iterable, Mapping

from .bidir import body_shape, int_seq, int_sum, sum_arity
from .errors import ActionSetMismatch, ArityMismatch, WireCycle
from .model import Arity, Exit, OpenMDP, RoMDP, Target

DEFAULT_ACTIONS = ("*",)


def identity_wire(m: int, actions: Iterable[str] = DEFAULT_ACTIONS) -> RoMDP:
    if m < 0:
        raise ArityMismatch("identity", ">= 0", m)
    return RoMDP(m, m, tuple(actions), (), {}, tuple(Exit(i) for i in range(1, m + 1)), {})


def swap_wire(m: int, n: int, actions: Iterable[str] = DEFAULT_ACTIONS) -> RoMDP:
    if m < 0 or n < 0:
        raise ArityMismatch("swap", ">= 0", (m, n))
    entry = [Exit(i + n) for i in range(1, m + 1)] + [Exit(i - m) for i in range(m + 1, m + n + 1)]
    return RoMDP(m + n, n + m, tuple(actions), (), {}, tuple(entry), {})


def rename(a: RoMDP, prefix: str) -> RoMDP:
    """Prefix every position name."""
    if not prefix or not a.positions:
        return a
    f = lambda t: t if isinstance(t, Exit) else prefix + t  # noqa: E731
    return RoMDP(
        a.m,
        a.n,
        a.actions,
        tuple(prefix + q for q in a.positions),
        {prefix + q: r for q, r in a.rewards.items()},
        tuple(f(t) for t in a.entry),
        {(prefix + s, act): {f(t): p for t, p in row.items()} for (s, act), row in a.transitions.items()},
    )


def _prefixes(a: RoMDP, b: RoMDP) -> tuple[str, str]:
    if a.positions and b.positions:
        return "L/", "R/"
    return "", ""


def _check_actions(a: RoMDP, b: RoMDP) -> None:
    if set(a.actions) != set(b.actions):
        raise ActionSetMismatch(f"action sets differ: {sorted(a.actions)} vs {sorted(b.actions)}")


def _merge(row: Mapping[Target, float], f) -> dict[Target, float]:
    out: dict[Target, float] = {}
    for t, p in row.items():
        t2 = f(t)
        out[t2] = out.get(t2, 0.0) + p
    return out


def seq_ro(a: RoMDP, b: RoMDP) -> RoMDP:
    """Glue the exits of ``a`` to the entrances of ``b``."""
    if a.n != b.m:
        raise ArityMismatch("seq", a.n, b.m)
    _check_actions(a, b)
    pa, pb = _prefixes(a, b)
    a, b = rename(a, pa), rename(b, pb)

    def through(t: Target) -> Target:
        return b.entry[t.index - 1] if isinstance(t, Exit) else t

    trans = {key: _merge(row, through) for key, row in a.transitions.items()}
    trans.update({key: dict(row) for key, row in b.transitions.items()})
    return RoMDP(
        a.m,
        b.n,
        a.actions,
        a.positions + b.positions,
        {**a.rewards, **b.rewards},
        tuple(through(t) for t in a.entry),
        trans,
    )


def sum_ro(a: RoMDP, b: RoMDP) -> RoMDP:
    """Place ``a`` above ``b``; ``b``'s entrances and exits are shifted."""
    _check_actions(a, b)
    pa, pb = _prefixes(a, b)
    a, b = rename(a, pa), rename(b, pb)
    shift = lambda t: Exit(t.index + a.n) if isinstance(t, Exit) else t  # noqa: E731
    trans = {key: dict(row) for key, row in a.transitions.items()}
    trans.update({key: {shift(t): p for t, p in row.items()} for key, row in b.transitions.items()})
    return RoMDP(
        a.m + b.m,
        a.n + b.n,
        a.actions,
        a.positions + b.positions,
        {**a.rewards, **b.rewards},
        a.entry + tuple(shift(t) for t in b.entry),
        trans,
    )


def trace_ro(l: int, a: RoMDP) -> RoMDP:
    """Feed exits ``1..l`` back into entrances ``1..l``."""
    if l < 0 or a.m < l or a.n < l:
        raise ArityMismatch("trace", f">= {l} wires on both sides", f"{a.m}->{a.n}")
    if l == 0:
        return a

    def resolve(t: Target) -> Target:
        seen: set[int] = set()
        while isinstance(t, Exit) and t.index <= l:
            if t.index in seen:
                raise WireCycle(t.index)
            seen.add(t.index)
            t = a.entry[t.index - 1]
        if isinstance(t, Exit):
            return Exit(t.index - l)
        return t

    for k in range(1, l + 1):
        resolve(Exit(k))
    return RoMDP(
        a.m - l,
        a.n - l,
        a.actions,
        a.positions,
        dict(a.rewards),
        tuple(resolve(t) for t in a.entry[l:]),
        {key: _merge(row, resolve) for key, row in a.transitions.items()},
    )


def pad_actions(a: RoMDP, actions: Iterable[str]) -> RoMDP:
    """Extend the action set; new actions get empty rows.

    An empty row is never an enabled choice, so padding changes neither the
    scheduler count nor any optimal value, and it cannot break unique access
    to exits (a copied row could).
    """
    actions = tuple(actions)
    missing = [x for x in a.actions if x not in actions]
    if missing:
        raise ActionSetMismatch(f"padding would drop actions {missing}")
    if actions == a.actions:
        return a
    return RoMDP(a.m, a.n, actions, a.positions, a.rewards, a.entry, a.transitions)


# ---------------------------------------------------------------- bidirectional


class RoOps:
    """Backend that builds rightward models for the bidirectional wiring."""

    def __init__(self, actions: Iterable[str]):
        self.actions = tuple(actions)

    def seq(self, x: RoMDP, y: RoMDP) -> RoMDP:
        return seq_ro(x, y)

    def sum(self, x: RoMDP, y: RoMDP) -> RoMDP:
        return sum_ro(x, y)

    def trace(self, l: int, x: RoMDP) -> RoMDP:
        return trace_ro(l, x)

    def identity(self, k: int) -> RoMDP:
        return identity_wire(k, self.actions)

    def swap(self, a: int, b: int) -> RoMDP:
        return swap_wire(a, b, self.actions)


def twist_to_ro(a: OpenMDP) -> RoMDP:
    return a.body


def twist_to_o(a: RoMDP, dom: Arity, cod: Arity) -> OpenMDP:
    if (a.m, a.n) != body_shape(dom, cod):
        raise ArityMismatch("twist", body_shape(dom, cod), (a.m, a.n))
    return OpenMDP(dom, cod, a)


def seq_o(a: OpenMDP, b: OpenMDP) -> OpenMDP:
    if a.cod != b.dom:
        raise ArityMismatch("seq", str(a.cod), str(b.dom))
    _check_actions(a.body, b.body)
    if a.rightward and b.rightward:
        return OpenMDP(a.dom, b.cod, seq_ro(a.body, b.body))
    body = int_seq(RoOps(a.body.actions), a.body, b.body, a.dom, a.cod, b.cod)
    return OpenMDP(a.dom, b.cod, body)


def sum_o(a: OpenMDP, b: OpenMDP) -> OpenMDP:
    _check_actions(a.body, b.body)
    dom, cod = sum_arity(a.dom, b.dom), sum_arity(a.cod, b.cod)
    if a.rightward and b.rightward:
        return OpenMDP(dom, cod, sum_ro(a.body, b.body))
    body = int_sum(RoOps(a.body.actions), a.body, b.body, a.dom, a.cod, b.dom, b.cod)
    return OpenMDP(dom, cod, body)


def identity_o(arity: Arity, actions: Iterable[str] = DEFAULT_ACTIONS) -> OpenMDP:
    return OpenMDP(arity, arity, identity_wire(arity.right + arity.left, actions))


def unit_o(arity: Arity, actions: Iterable[str] = DEFAULT_ACTIONS) -> OpenMDP:
    """Cup ``(0,0) -> (r,l) (+) (l,r)``: bends wires back leftward."""
    k = arity.right + arity.left
    return OpenMDP(Arity(0, 0), Arity(k, k), identity_wire(k, actions))


def counit_o(arity: Arity, actions: Iterable[str] = DEFAULT_ACTIONS) -> OpenMDP:
    """Cap ``(l,r) (+) (r,l) -> (0,0)``."""
    k = arity.right + arity.left
    return OpenMDP(Arity(k, k), Arity(0, 0), identity_wire(k, actions))


def trace_o(l: int, a: OpenMDP) -> OpenMDP:
    """Trace over the first ``l`` rightward wires of a rightward oMDP."""
    if not a.rightward:
        raise ArityMismatch("trace", "a rightward operand", f"{a.dom}->{a.cod}")
    body = trace_ro(l, a.body)
    return OpenMDP(Arity(body.m), Arity(body.n), body)


# ------------------------------------------------------------------- flatten


def flatten(expr, env=None, actions: Iterable[str] | None = None) -> OpenMDP:
    """Build the single monolithic oMDP denoted by a diagram expression.

    All components are padded to the union of their action sets first, so
    every operand of every composite shares one action set.
    """
    from . import diagram as d

    env = env or {}
    acts = tuple(actions) if actions is not None else d.action_universe(expr, env)
    memo: dict[str, OpenMDP] = {}

    def go(e) -> OpenMDP:
        if isinstance(e, d.Prim):
            c = e.component
            return OpenMDP(c.dom, c.cod, pad_actions(c.body, acts))
        if isinstance(e, d.Var):
            if e.name not in env:
                from .errors import UnboundName

                raise UnboundName(e.name)
            if e.name not in memo:
                memo[e.name] = go(env[e.name])
            return memo[e.name]
        if isinstance(e, d.Seq):
            return seq_o(go(e.left), go(e.right))
        if isinstance(e, d.Sum):
            return sum_o(go(e.left), go(e.right))
        if isinstance(e, d.Trace):
            return trace_o(e.loops, go(e.inner))
        if isinstance(e, d.Freeze):
            return go(e.inner)
        if isinstance(e, d.Wire):
            return wire_o(e.kind, e.params, acts)
        raise TypeError(f"not a diagram node: {e!r}")

    return go(expr)


def wire_o(kind: str, params: tuple[int, ...], actions: Iterable[str] = DEFAULT_ACTIONS) -> OpenMDP:
    if kind == "id":
        return identity_o(Arity(*params), actions)
    if kind == "swap":
        m, n = params
        return OpenMDP(Arity(m + n), Arity(n + m), swap_wire(m, n, actions))
    if kind == "unit":
        return unit_o(Arity(*params), actions)
    if kind == "counit":
        return counit_o(Arity(*params), actions)
    raise ValueError(f"unknown wire kind {kind!r}")
