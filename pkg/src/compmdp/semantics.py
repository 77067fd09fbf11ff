"""Scheduler-set semantics: Pareto fronts of (p, r) behaviours and the evaluator.

A :class:`SemanticArrow` holds the behaviours of one subdiagram, one per
memoryless scheduler that survived pruning. Each behaviour carries a *tag*, a
small tree recording which scheduler of which component produced it::

    ("leaf", ref, ((position, action), ...))
    ("frozen", ref, ((position, action), ...))
    ("seq", left, right) | ("sum", left, right) | ("trace", l, inner)
    ("wire",)

Composites combine every behaviour of one operand with every behaviour of the
other and prune again. Because all composition operators are monotone in the
pointwise order, a dominated behaviour can never become part of an optimum.
"""

from __future__ import annotations

import itertools
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from . import diagram as d
from .algebra import flatten
from .bidir import int_seq, int_sum
from .engine import (
    seq_batch,
    solve_schedulers,
    sum_batch,
    swap_matrix,
    trace_batch,
)
from .errors import (
    ArityMismatch,
    EmptyFront,
    FrozenMultiExit,
    FrozenNotAlmostSure,
    SchedulerExplosion,
    UnboundName,
)
from .model import Exit, OpenMDP, RoMDP

WIRE_TAG = ("wire",)
TIE_TOL = 1e-12
# product chunks are pruned as they are produced once they exceed this many floats
PRODUCT_ENTRIES = 4_000_000


@dataclass(frozen=True)
class EvalConfig:
    max_schedulers: int = 65_536
    prune_eps: float = 0.0
    memoization: bool = True
    prune: bool = True

    def __post_init__(self):
        if self.max_schedulers < 1:
            raise ValueError("max_schedulers must be at least 1")
        if self.prune_eps < 0:
            raise ValueError("prune_eps must be nonnegative")

    def fingerprint(self) -> tuple:
        return (self.max_schedulers, self.prune_eps, self.prune)


@dataclass(frozen=True, eq=False)
class SemanticArrow:
    """Stacked behaviours: ``P[k]`` and ``R[k]`` are the matrices of element ``k``."""

    P: np.ndarray
    R: np.ndarray
    tags: tuple

    @property
    def m(self) -> int:
        return self.P.shape[1]

    @property
    def n(self) -> int:
        return self.P.shape[2]

    def __len__(self) -> int:
        return self.P.shape[0]

    @staticmethod
    def single(p: np.ndarray, r: np.ndarray, tag=WIRE_TAG) -> "SemanticArrow":
        return SemanticArrow(np.asarray(p, float)[None], np.asarray(r, float)[None], (tag,))

    @staticmethod
    def identity(k: int) -> "SemanticArrow":
        return SemanticArrow.single(np.eye(k), np.zeros((k, k)))

    @staticmethod
    def swap(a: int, b: int) -> "SemanticArrow":
        return SemanticArrow.single(swap_matrix(a, b), np.zeros((a + b, a + b)))


# ------------------------------------------------------------------- pruning


def prune(f: SemanticArrow, eps: float = 0.0) -> SemanticArrow:
    """Drop every behaviour that another kept behaviour matches or beats entrywise.

    Candidates are visited by decreasing total mass, so for ``eps == 0`` an
    element can only be dominated by one visited earlier; among exact
    duplicates the smallest tag is visited first and kept.
    """
    k = len(f)
    if k <= 1:
        return f
    V = np.concatenate([f.P.reshape(k, -1), f.R.reshape(k, -1)], axis=1)
    total = V.sum(axis=1)
    order = sorted(range(k), key=lambda i: (-total[i], f.tags[i]))
    V = V[order]
    remaining = np.arange(k)
    keep = []
    while remaining.size:
        top = remaining[0]
        keep.append(order[top])
        beaten = np.all(V[top] >= V[remaining] - eps, axis=1)
        remaining = remaining[~beaten]
    keep_idx = np.array(keep)
    return SemanticArrow(f.P[keep_idx], f.R[keep_idx], tuple(f.tags[i] for i in keep))


def _maybe_prune(f: SemanticArrow, cfg: EvalConfig) -> SemanticArrow:
    return prune(f, cfg.prune_eps) if cfg.prune else f


# ------------------------------------------------------------------ operators


def lift_romdp(a: RoMDP, cfg: EvalConfig = EvalConfig(), ref: str = "") -> SemanticArrow:
    """Behaviours of ``a`` under all memoryless schedulers, pruned."""
    enabled = [a.enabled_actions(q) for q in a.positions]
    count = 1
    for e in enabled:
        count *= len(e)
    if count > cfg.max_schedulers:
        raise SchedulerExplosion(count, cfg.max_schedulers, ref)
    act_index = {x: i for i, x in enumerate(a.actions)}
    combos = list(itertools.product(*enabled))
    choices = np.array([[act_index[x] for x in c] for c in combos], dtype=np.intp).reshape(count, len(a.positions))
    P, R = solve_schedulers(a, choices)
    tags = tuple(("leaf", ref, tuple(zip(a.positions, c))) for c in combos)
    return _maybe_prune(SemanticArrow(P, R, tags), cfg)


def seq_sem(f: SemanticArrow, g: SemanticArrow, cfg: EvalConfig = EvalConfig()) -> SemanticArrow:
    if f.n != g.m:
        raise ArityMismatch("seq", f.n, g.m)
    return _product(f, g, seq_batch, "seq", cfg)


def sum_sem(f: SemanticArrow, g: SemanticArrow, cfg: EvalConfig = EvalConfig()) -> SemanticArrow:
    return _product(f, g, sum_batch, "sum", cfg)


def _product(f, g, op, name, cfg) -> SemanticArrow:
    out_shape = op(f.P[:1], f.R[:1], g.P[:1], g.R[:1])[0].shape[2:]
    per_f = max(1, PRODUCT_ENTRIES // max(1, len(g) * int(np.prod(out_shape))))
    acc: Optional[SemanticArrow] = None
    for start in range(0, len(f), per_f):
        stop = min(len(f), start + per_f)
        P, R = op(f.P[start:stop], f.R[start:stop], g.P, g.R)
        kf, kg = P.shape[:2]
        tags = tuple((name, f.tags[start + i], g.tags[j]) for i in range(kf) for j in range(kg))
        part = SemanticArrow(P.reshape(kf * kg, *out_shape), R.reshape(kf * kg, *out_shape), tags)
        acc = part if acc is None else _concat(acc, part)
        if cfg.prune and len(acc) > 1:
            acc = prune(acc, cfg.prune_eps)
    return acc


def _concat(a: SemanticArrow, b: SemanticArrow) -> SemanticArrow:
    return SemanticArrow(np.concatenate([a.P, b.P]), np.concatenate([a.R, b.R]), a.tags + b.tags)


def trace_sem(l: int, h: SemanticArrow, cfg: EvalConfig = EvalConfig()) -> SemanticArrow:
    P, R = trace_batch(l, h.P, h.R)
    tags = tuple(("trace", l, t) for t in h.tags) if l else h.tags
    return _maybe_prune(SemanticArrow(P, R, tags), cfg)


class SemOps:
    """Backend for the bidirectional wiring over semantic arrows."""

    def __init__(self, cfg: EvalConfig):
        self.cfg = cfg

    def seq(self, x, y):
        return seq_sem(x, y, self.cfg)

    def sum(self, x, y):
        return sum_sem(x, y, self.cfg)

    def trace(self, l, x):
        return trace_sem(l, x, self.cfg)

    def identity(self, k):
        return SemanticArrow.identity(k)

    def swap(self, a, b):
        return SemanticArrow.swap(a, b)


# ---------------------------------------------------------------- extraction


def extract_optimal(f: SemanticArrow, i: int, j: int):
    """Behaviour with the largest reward at ``(i, j)``.

    Rewards within a relative ``1e-12`` of the maximum count as ties; ties go
    to the larger probability, then to the smallest tag.
    """
    if len(f) == 0:
        raise EmptyFront("no behaviours to choose from")
    if not (1 <= i <= f.m and 1 <= j <= f.n):
        raise IndexError(f"entrance/exit ({i},{j}) outside {f.m}x{f.n}")
    k = lexmax_index(f.P[:, i - 1, j - 1], f.R[:, i - 1, j - 1], f.tags)
    return float(f.P[k, i - 1, j - 1]), float(f.R[k, i - 1, j - 1]), f.tags[k]


def lexmax_index(p: np.ndarray, r: np.ndarray, keys) -> int:
    rmax = r.max()
    cand = np.flatnonzero(r >= rmax - TIE_TOL * max(1.0, abs(rmax)))
    pmax = p[cand].max()
    cand = cand[p[cand] >= pmax - TIE_TOL]
    return min(cand, key=lambda k: keys[k])


def scheduler_from_tag(tag) -> dict[str, str]:
    """Memoryless scheduler over the flattened position names."""
    kind = tag[0]
    if kind in ("leaf", "frozen"):
        return dict(tag[2])
    if kind == "wire":
        return {}
    if kind == "trace":
        return scheduler_from_tag(tag[2])
    left, right = scheduler_from_tag(tag[1]), scheduler_from_tag(tag[2])
    if left and right:
        out = {"L/" + q: a for q, a in left.items()}
        out.update({"R/" + q: a for q, a in right.items()})
        return out
    return {**left, **right}


# -------------------------------------------------------------------- freeze


def end_trap(mdp: RoMDP) -> set[str]:
    """Positions from which some scheduler can avoid every exit forever.

    Greatest set ``Z`` such that each member is a dead end or has an action
    whose whole support stays inside ``Z``.
    """
    rows = {q: [mdp.row(q, a) for a in mdp.actions if mdp.row(q, a)] for q in mdp.positions}
    Z = set(mdp.positions)
    changed = True
    while changed:
        changed = False
        for q in list(Z):
            if not rows[q]:
                continue
            if not any(all(not isinstance(t, Exit) and t in Z for t in row) for row in rows[q]):
                Z.discard(q)
                changed = True
    return Z


def reachable(mdp: RoMDP) -> set[str]:
    seen = {t for t in mdp.entry if not isinstance(t, Exit)}
    stack = list(seen)
    while stack:
        q = stack.pop()
        for a in mdp.actions:
            for t in mdp.row(q, a):
                if not isinstance(t, Exit) and t not in seen:
                    seen.add(t)
                    stack.append(t)
    return seen


def optimal_policy(mdp: RoMDP, tol: float = 1e-10, max_sweeps: int = 100_000) -> dict[str, str]:
    """Reward-maximising memoryless policy for an MDP that surely reaches its exit.

    Only positions reachable from an entrance are optimised (the others keep
    their first enabled action). Value iteration provides a starting policy;
    policy iteration with exact sparse solves then improves it until no
    action is strictly better anywhere.
    """
    import scipy.sparse as sp
    from scipy.sparse.linalg import splu

    live = [q for q in mdp.positions if q in reachable(mdp)]
    policy_out = {q: mdp.enabled_actions(q)[0] for q in mdp.positions}
    N = len(live)
    if N == 0:
        return policy_out
    idx = {q: k for k, q in enumerate(live)}
    reward = np.array([mdp.rewards[q] for q in live])
    acts = list(mdp.actions)
    mats = []
    enabled = np.zeros((len(acts), N), dtype=bool)
    for ai, a in enumerate(acts):
        rows, cols, vals = [], [], []
        for q in live:
            row = mdp.row(q, a)
            if row:
                enabled[ai, idx[q]] = True
            for t, p in row.items():
                if not isinstance(t, Exit):
                    rows.append(idx[q])
                    cols.append(idx[t])
                    vals.append(p)
        mats.append(sp.csr_matrix((vals, (rows, cols)), shape=(N, N)))

    def q_values(y):
        Q = np.stack([reward + M @ y for M in mats])
        return np.where(enabled, Q, -np.inf)

    y = np.zeros(N)
    for _ in range(max_sweeps):
        y_new = q_values(y).max(axis=0)
        delta = np.abs(y_new - y).max()
        y = y_new
        if delta <= tol * max(1.0, np.abs(y).max()):
            break
    policy = q_values(y).argmax(axis=0)
    eye = sp.identity(N, format="csc")
    cols = np.arange(N)
    for _ in range(10 * N + 10):
        M = sum((sp.diags((policy == ai).astype(float)) @ mats[ai] for ai in range(len(acts))),
                sp.csr_matrix((N, N)))
        y = splu((eye - M).tocsc()).solve(reward)
        Q = q_values(y)
        current = Q[policy, cols]
        better = Q.max(axis=0) > current + 1e-12 * np.maximum(1.0, np.abs(current))
        if not better.any():
            break
        policy = np.where(better, Q.argmax(axis=0), policy)
    for q in live:
        policy_out[q] = acts[policy[idx[q]]]
    return policy_out


def solve_frozen(o: OpenMDP, ref: str = "freeze") -> SemanticArrow:
    """Monolithic solution of a single-exit block, as a one-element front."""
    body = o.body
    if body.n != 1:
        raise FrozenMultiExit(body.n)
    bad = reachable(body) & end_trap(body)
    if bad:
        raise FrozenNotAlmostSure(
            f"frozen block {ref!r}: from {sorted(bad)[0]!r} some scheduler avoids the exit; "
            "the block cannot be summarised by a single behaviour"
        )
    policy = optimal_policy(body)
    choices = np.array([[body.actions.index(policy[q]) for q in body.positions]], dtype=np.intp)
    P, R = solve_schedulers(body, choices.reshape(1, len(body.positions)))
    tag = ("frozen", ref, tuple(sorted(policy.items())))
    return SemanticArrow(P, R, (tag,))


# ----------------------------------------------------------------- evaluator


@dataclass
class SolveStats:
    component_solves: int = 0
    cache_hits: int = 0
    lifts: int = 0
    freezes: int = 0
    front_sizes: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def as_dict(self) -> dict:
        return {
            "componentSolves": self.component_solves,
            "cacheHits": self.cache_hits,
            "lifts": self.lifts,
            "freezes": self.freezes,
            "frontSizes": dict(self.front_sizes),
            "wallTime": self.wall_time,
        }


class Evaluator:
    """Evaluates diagrams against a binding environment with a name-keyed memo.

    ``component_solves`` counts evaluations that did real work: every binding
    evaluated for the first time plus every unbound ``load`` or ``freeze``.
    Looking a binding up again counts as a cache hit.
    """

    def __init__(self, env: Mapping[str, d.Expr] | None = None, cfg: EvalConfig = EvalConfig(), threads: int = 1):
        self.env = dict(env or {})
        self.cfg = cfg
        self.threads = max(1, threads)
        self.stats = SolveStats()
        self._memo: dict[tuple, SemanticArrow] = {}
        self._pending: dict[tuple, threading.Event] = {}
        self._lock = threading.Lock()
        self._ops = SemOps(cfg)

    def evaluate(self, expr: d.Expr) -> SemanticArrow:
        t0 = time.perf_counter()
        if self.threads > 1 and self.cfg.memoization:
            self._prefetch(expr)
        out = self._eval(expr, "root", bound=False)
        self.stats.wall_time += time.perf_counter() - t0
        return out

    def _prefetch(self, expr: d.Expr) -> None:
        names = d.referenced_bindings(expr, self.env)
        level: dict[str, int] = {}
        for name in names:
            deps = d.free_vars(self.env[name])
            level[name] = 1 + max((level[x] for x in deps), default=-1)
        with ThreadPoolExecutor(self.threads) as pool:
            for lv in range(max(level.values(), default=-1) + 1):
                batch = [n for n in names if level[n] == lv]
                list(pool.map(lambda n: self._binding(n, count_hit=False), batch))

    def _key(self, name: str) -> tuple:
        return (name, self.cfg.fingerprint())

    def _binding(self, name: str, count_hit: bool = True) -> SemanticArrow:
        if name not in self.env:
            raise UnboundName(name)
        if not self.cfg.memoization:
            with self._lock:
                self.stats.component_solves += 1
            return self._eval(self.env[name], f"let:{name}", bound=True)
        key = self._key(name)
        with self._lock:
            if key in self._memo:
                if count_hit:
                    self.stats.cache_hits += 1
                return self._memo[key]
            ev = self._pending.get(key)
            owner = ev is None
            if owner:
                ev = self._pending[key] = threading.Event()
        if not owner:
            ev.wait()
            with self._lock:
                if count_hit:
                    self.stats.cache_hits += 1
                return self._memo[key]
        try:
            value = self._eval(self.env[name], f"let:{name}", bound=True)
        except BaseException:
            with self._lock:
                del self._pending[key]
            ev.set()
            raise
        with self._lock:
            self._memo.setdefault(key, value)
            self.stats.component_solves += 1
            del self._pending[key]
        ev.set()
        return self._memo[key]

    def _record(self, path: str, f: SemanticArrow) -> SemanticArrow:
        with self._lock:
            self.stats.front_sizes[path] = len(f)
        return f

    def _eval(self, e: d.Expr, path: str, bound: bool) -> SemanticArrow:
        cfg = self.cfg
        if isinstance(e, d.Var):
            return self._binding(e.name)
        if isinstance(e, d.Prim):
            with self._lock:
                self.stats.lifts += 1
                if not bound:
                    self.stats.component_solves += 1
            return self._record(path, lift_romdp(e.component.body, cfg, e.ref))
        if isinstance(e, d.Wire):
            return SemanticArrow.identity(e.sig.body[0]) if e.kind != "swap" else SemanticArrow.swap(*e.params)
        if isinstance(e, d.Freeze):
            with self._lock:
                self.stats.freezes += 1
                if not bound:
                    self.stats.component_solves += 1
            return self._record(path, solve_frozen(flatten(e.inner, self.env), path))
        if isinstance(e, d.Trace):
            inner = self._eval(e.inner, path + ".tr", False)
            return self._record(path, trace_sem(e.loops, inner, cfg))
        if isinstance(e, (d.Seq, d.Sum)):
            a = self._eval(e.left, path + ".L", False)
            b = self._eval(e.right, path + ".R", False)
            sa, sb = e.left.sig, e.right.sig
            if isinstance(e, d.Seq):
                if sa.rightward and sb.rightward:
                    out = seq_sem(a, b, cfg)
                else:
                    out = int_seq(self._ops, a, b, sa.dom, sa.cod, sb.cod)
            else:
                if sa.rightward and sb.rightward:
                    out = sum_sem(a, b, cfg)
                else:
                    out = int_sum(self._ops, a, b, sa.dom, sa.cod, sb.dom, sb.cod)
            return self._record(path, out)
        raise TypeError(f"not a diagram node: {e!r}")


def solve_diagram(expr: d.Expr, env: Mapping[str, d.Expr] | None = None, cfg: EvalConfig = EvalConfig(),
                  threads: int = 1) -> SemanticArrow:
    return Evaluator(env, cfg, threads).evaluate(expr)
