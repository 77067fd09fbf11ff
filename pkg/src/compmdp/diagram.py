"""Abstract syntax of string diagrams and their static checks.

Nodes are immutable and carry their inferred arity (``dom``/``cod``) plus a
:class:`~compmdp.bidir.WireMap` of their body. Building a node through the
smart constructors below (``seq``, ``plus``, ``trace``, ``freeze``, ...)
checks arities and rejects loops made only of wires, so an expression that can
be built can also be evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional, Union

from .bidir import WIRE_OPS, WireMap, body_shape, int_seq, int_sum, sum_arity
from .errors import ArityMismatch, FrozenMultiExit, UnboundName
from .model import Arity, Exit, OpenMDP, RoMDP


@dataclass(frozen=True)
class Sig:
    dom: Arity
    cod: Arity
    wires: WireMap = field(compare=False, repr=False)

    @property
    def rightward(self) -> bool:
        return self.dom.left == 0 and self.cod.left == 0

    @property
    def body(self) -> tuple[int, int]:
        return body_shape(self.dom, self.cod)

    def __str__(self) -> str:
        if self.rightward:
            return f"{self.dom.right}->{self.cod.right}"
        return f"{self.dom}->{self.cod}"


@dataclass(frozen=True)
class Prim:
    ref: str
    component: OpenMDP = field(compare=False, repr=False)
    sig: Sig = field(compare=False, repr=False)


@dataclass(frozen=True)
class Var:
    name: str
    sig: Sig = field(compare=False, repr=False)


@dataclass(frozen=True)
class Seq:
    left: "Expr"
    right: "Expr"
    sig: Sig = field(compare=False, repr=False)


@dataclass(frozen=True)
class Sum:
    left: "Expr"
    right: "Expr"
    sig: Sig = field(compare=False, repr=False)


@dataclass(frozen=True)
class Trace:
    loops: int
    inner: "Expr"
    sig: Sig = field(compare=False, repr=False)


@dataclass(frozen=True)
class Freeze:
    inner: "Expr"
    sig: Sig = field(compare=False, repr=False)


@dataclass(frozen=True)
class Wire:
    """``kind`` is one of ``id``, ``swap``, ``unit``, ``counit``."""

    kind: str
    params: tuple[int, ...]
    sig: Sig = field(compare=False, repr=False)


Expr = Union[Prim, Var, Seq, Sum, Trace, Freeze, Wire]
Env = Mapping[str, Expr]


def _wiremap_of(body: RoMDP) -> WireMap:
    return WireMap(body.m, body.n, tuple(t.index if isinstance(t, Exit) else None for t in body.entry))


def prim(ref: str, component: OpenMDP | RoMDP) -> Prim:
    if isinstance(component, RoMDP):
        component = OpenMDP(Arity(component.m), Arity(component.n), component)
    return Prim(ref, component, Sig(component.dom, component.cod, _wiremap_of(component.body)))


def var(name: str, env: Env) -> Var:
    if name not in env:
        raise UnboundName(name)
    return Var(name, env[name].sig)


def identity(right: int, left: int = 0) -> Wire:
    a = Arity(right, left)
    return Wire("id", (right, left) if left else (right,), Sig(a, a, WIRE_OPS.identity(right + left)))


def swap(m: int, n: int) -> Wire:
    return Wire("swap", (m, n), Sig(Arity(m + n), Arity(n + m), WIRE_OPS.swap(m, n)))


def unit(right: int, left: int = 0) -> Wire:
    k = right + left
    return Wire("unit", (right, left), Sig(Arity(0, 0), Arity(k, k), WIRE_OPS.identity(k)))


def counit(right: int, left: int = 0) -> Wire:
    k = right + left
    return Wire("counit", (right, left), Sig(Arity(k, k), Arity(0, 0), WIRE_OPS.identity(k)))


def seq(a: Expr, b: Expr) -> Seq:
    sa, sb = a.sig, b.sig
    if sa.cod != sb.dom:
        raise ArityMismatch("';'", str(sa.cod) if not sa.rightward else sa.cod.right,
                            str(sb.dom) if not sb.rightward else sb.dom.right)
    if sa.rightward and sb.rightward:
        wires = WIRE_OPS.seq(sa.wires, sb.wires)
    else:
        wires = int_seq(WIRE_OPS, sa.wires, sb.wires, sa.dom, sa.cod, sb.cod)
    return Seq(a, b, Sig(sa.dom, sb.cod, wires))


def plus(a: Expr, b: Expr) -> Sum:
    sa, sb = a.sig, b.sig
    if sa.rightward and sb.rightward:
        wires = WIRE_OPS.sum(sa.wires, sb.wires)
    else:
        wires = int_sum(WIRE_OPS, sa.wires, sb.wires, sa.dom, sa.cod, sb.dom, sb.cod)
    return Sum(a, b, Sig(sum_arity(sa.dom, sb.dom), sum_arity(sa.cod, sb.cod), wires))


def trace(loops: int, inner: Expr) -> Trace:
    s = inner.sig
    if not s.rightward:
        raise ArityMismatch("tr", "a rightward operand", str(s))
    # a trace must leave at least one entrance and one exit: an arrow with no
    # entrances or no exits has nothing to solve
    if loops < 0 or s.dom.right <= loops or s.cod.right <= loops:
        raise ArityMismatch(f"tr[{loops}]", f"{loops}+m->{loops}+n with m, n >= 1", str(s))
    wires = WIRE_OPS.trace(loops, s.wires)
    return Trace(loops, inner, Sig(Arity(wires.m), Arity(wires.n), wires))


def freeze(inner: Expr) -> Freeze:
    s = inner.sig
    n = s.body[1]
    if n != 1:
        raise FrozenMultiExit(n)
    return Freeze(inner, s)


# ------------------------------------------------------------------ traversal


def children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, (Seq, Sum)):
        return (e.left, e.right)
    if isinstance(e, (Trace, Freeze)):
        return (e.inner,)
    return ()


def walk(e: Expr) -> Iterator[Expr]:
    yield e
    for c in children(e):
        yield from walk(c)


def free_vars(e: Expr) -> list[str]:
    out: list[str] = []
    for node in walk(e):
        if isinstance(node, Var) and node.name not in out:
            out.append(node.name)
    return out


def referenced_bindings(e: Expr, env: Env) -> list[str]:
    """All binding names reachable from ``e``, dependencies first."""
    order: list[str] = []

    def visit(name: str, stack: tuple[str, ...]) -> None:
        if name in order:
            return
        if name not in env:
            raise UnboundName(name)
        if name in stack:
            raise UnboundName(name)
        for dep in free_vars(env[name]):
            visit(dep, stack + (name,))
        order.append(name)

    for name in free_vars(e):
        visit(name, ())
    return order


def components(e: Expr, env: Env) -> list[OpenMDP]:
    """Every component used by ``e``, following bindings."""
    seen: list[OpenMDP] = []
    stack = [e]
    done: set[str] = set()
    while stack:
        node = stack.pop()
        for sub in walk(node):
            if isinstance(sub, Prim):
                seen.append(sub.component)
            elif isinstance(sub, Var) and sub.name not in done:
                if sub.name not in env:
                    raise UnboundName(sub.name)
                done.add(sub.name)
                stack.append(env[sub.name])
    return seen


def action_universe(e: Expr, env: Env) -> tuple[str, ...]:
    acts: list[str] = []
    for c in components(e, env):
        for a in c.body.actions:
            if a not in acts:
                acts.append(a)
    return tuple(acts) if acts else ("*",)


def count_leaves(e: Expr) -> int:
    return sum(isinstance(n, (Prim, Var)) for n in walk(e))


def implicit_size(e: Expr, env: Env, memo: Optional[dict] = None) -> int:
    """Number of positions of the flattened model, computed without flattening."""
    memo = {} if memo is None else memo
    if isinstance(e, Prim):
        return len(e.component.body.positions)
    if isinstance(e, Var):
        if e.name not in memo:
            memo[e.name] = implicit_size(env[e.name], env, memo)
        return memo[e.name]
    return sum(implicit_size(c, env, memo) for c in children(e))
