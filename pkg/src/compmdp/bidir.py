"""Bidirectional composition built out of rightward operations.

Bidirectional arrows ``(m_r, m_l) -> (n_r, n_l)`` are represented by their
twisted rightward bodies ``m_r + n_l -> n_r + m_l``. Sequential composition and
sum of bidirectional arrows are then fixed rightward diagrams of swaps,
identities and a trace. The functions here only build those diagrams; the
actual arithmetic is supplied by an ``ops`` backend, so the very same wiring is
used for structural models, semantic arrows and bare wire maps.

A backend provides ``seq(x, y)``, ``sum(x, y)``, ``trace(l, x)``,
``identity(k)`` and ``swap(a, b)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol, TypeVar

from .errors import ArityMismatch, WireCycle
from .model import Arity

T = TypeVar("T")


class Ops(Protocol[T]):
    def seq(self, x: T, y: T) -> T: ...
    def sum(self, x: T, y: T) -> T: ...
    def trace(self, l: int, x: T) -> T: ...
    def identity(self, k: int) -> T: ...
    def swap(self, a: int, b: int) -> T: ...


def int_seq(ops: Ops[T], a: T, b: T, m: Arity, l: Arity, n: Arity) -> T:
    """Body of ``a ; b`` for ``a : m -> l`` and ``b : l -> n``.

    The leftward wires between the two operands become a loop: whatever ``b``
    sends leftward is fed back into ``a``.
    """
    S, I = ops.swap, ops.identity
    x = ops.sum(S(l.left, m.right), I(n.left))
    x = ops.seq(x, ops.sum(a, I(n.left)))
    x = ops.seq(x, ops.sum(I(l.right), S(m.left, n.left)))
    x = ops.seq(x, ops.sum(b, I(m.left)))
    x = ops.seq(x, ops.sum(S(n.right, l.left), I(m.left)))
    return ops.trace(l.left, x)


def int_sum(ops: Ops[T], a: T, b: T, a_dom: Arity, a_cod: Arity, b_dom: Arity, b_cod: Arity) -> T:
    """Body of ``a (+) b``.

    Rightward wires of ``a`` come before those of ``b``; on the leftward side
    the order is reversed, so ``b``'s leftward wires come first.
    """
    S, I = ops.swap, ops.identity
    m, n, k, l = a_dom, a_cod, b_dom, b_cod
    x = ops.sum(S(m.right, k.right), S(l.left, n.left))
    x = ops.seq(x, ops.sum(ops.sum(I(k.right), a), I(l.left)))
    x = ops.seq(x, ops.sum(S(k.right, n.right), S(m.left, l.left)))
    x = ops.seq(x, ops.sum(ops.sum(I(n.right), b), I(m.left)))
    return x


def sum_arity(x: Arity, y: Arity) -> Arity:
    return Arity(x.right + y.right, y.left + x.left)


def body_shape(dom: Arity, cod: Arity) -> tuple[int, int]:
    return dom.right + cod.left, cod.right + dom.left


# ----------------------------------------------------------------- wire maps


@dataclass(frozen=True)
class WireMap:
    """Where each entrance goes when it is wired straight to an exit.

    ``targets[i]`` is the 1-based exit reached directly from entrance ``i + 1``
    or ``None`` when that entrance leads into a position. This is enough to
    detect loops made purely of wires without building any model.
    """

    m: int
    n: int
    targets: tuple[Optional[int], ...]


class WireOps:
    def identity(self, k: int) -> WireMap:
        return WireMap(k, k, tuple(range(1, k + 1)))

    def swap(self, a: int, b: int) -> WireMap:
        t = [i + b for i in range(1, a + 1)] + [i - a for i in range(a + 1, a + b + 1)]
        return WireMap(a + b, b + a, tuple(t))

    def seq(self, x: WireMap, y: WireMap) -> WireMap:
        if x.n != y.m:
            raise ArityMismatch("seq", x.n, y.m)
        return WireMap(x.m, y.n, tuple(None if t is None else y.targets[t - 1] for t in x.targets))

    def sum(self, x: WireMap, y: WireMap) -> WireMap:
        shifted = tuple(None if t is None else t + x.n for t in y.targets)
        return WireMap(x.m + y.m, x.n + y.n, x.targets + shifted)

    def trace(self, l: int, x: WireMap) -> WireMap:
        if x.m < l or x.n < l:
            raise ArityMismatch("trace", f">= {l} wires on both sides", f"{x.m}->{x.n}")

        def follow(start: int) -> Optional[int]:
            seen = set()
            t = x.targets[start - 1]
            while t is not None and t <= l:
                if t in seen:
                    raise WireCycle(t)
                seen.add(t)
                t = x.targets[t - 1]
            return None if t is None else t - l

        for k in range(1, l + 1):
            follow(k)
        return WireMap(x.m - l, x.n - l, tuple(follow(i) for i in range(l + 1, x.m + 1)))


WIRE_OPS = WireOps()
