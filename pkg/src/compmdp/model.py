"""Open MDPs: data types, validation, scheduler fixing and isomorphism.

An :class:`RoMDP` is a rightward open MDP with ``m`` entrances on the left and
``n`` exits on the right. Entrances and exits are numbered from 1. A transition
target is either a position name (``str``) or an :class:`Exit`.

A bidirectional :class:`OpenMDP` is stored as its twisted rightward body: an
oMDP ``(m_r, m_l) -> (n_r, n_l)`` has body entrances ``m_r + n_l`` (the
rightward entrances on its left side first, then the leftward entrances on its
right side) and body exits ``n_r + m_l`` (rightward exits on the right first,
then leftward exits on the left).

Values are treated as immutable once built; every operation returns a new model.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Union

from .errors import IncompleteScheduler, MalformedModel

ROW_SUM_TOL = 1e-12
MC_ACTION = "*"


@dataclass(frozen=True, order=True)
class Exit:
    index: int

    def __repr__(self) -> str:
        return f"Exit({self.index})"


Target = Union[str, Exit]
Scheduler = Mapping[str, str]


@dataclass(frozen=True)
class Arity:
    right: int
    left: int = 0

    def __post_init__(self):
        if self.right < 0 or self.left < 0:
            raise MalformedModel(f"negative arity {self}")

    def __str__(self) -> str:
        return f"({self.right},{self.left})"


@dataclass(frozen=True)
class RoMDP:
    m: int
    n: int
    actions: tuple[str, ...]
    positions: tuple[str, ...]
    rewards: Mapping[str, float]
    entry: tuple[Target, ...]
    transitions: Mapping[tuple[str, str], Mapping[Target, float]] = field(default_factory=dict)

    def row(self, s: str, a: str) -> Mapping[Target, float]:
        return self.transitions.get((s, a), {})

    def enabled_actions(self, s: str) -> tuple[str, ...]:
        """Actions with a nonzero row at ``s``, keeping one action per distinct row.

        A position whose rows are all zero is a dead end and keeps its first
        action as the only choice. Zero rows and duplicate rows never change the
        set of optimal values, so schedulers are enumerated over this list.
        """
        seen: list[Mapping[Target, float]] = []
        out = []
        for a in self.actions:
            row = self.row(s, a)
            if not row or row in seen:
                continue
            seen.append(row)
            out.append(a)
        return tuple(out) if out else self.actions[:1]

    def scheduler_count(self) -> int:
        count = 1
        for s in self.positions:
            count *= len(self.enabled_actions(s))
        return count

    def schedulers(self) -> Iterable[dict[str, str]]:
        choices = [self.enabled_actions(s) for s in self.positions]
        for combo in itertools.product(*choices):
            yield dict(zip(self.positions, combo))

    @property
    def is_chain(self) -> bool:
        return len(self.actions) == 1


RoMC = RoMDP


@dataclass(frozen=True)
class OpenMDP:
    dom: Arity
    cod: Arity
    body: RoMDP

    def __post_init__(self):
        m = self.dom.right + self.cod.left
        n = self.cod.right + self.dom.left
        if (self.body.m, self.body.n) != (m, n):
            raise MalformedModel(
                f"body is {self.body.m}->{self.body.n} but arities {self.dom}->{self.cod} need {m}->{n}"
            )

    @property
    def rightward(self) -> bool:
        return self.dom.left == 0 and self.cod.left == 0


def make_romdp(
    m: int,
    n: int,
    actions: Iterable[str],
    rewards: Mapping[str, float],
    entry: Iterable[Target],
    transitions: Mapping[tuple[str, str], Mapping[Target, float]] | None = None,
    positions: Iterable[str] | None = None,
) -> RoMDP:
    """Build an :class:`RoMDP`, dropping zero-probability entries."""
    trans: dict[tuple[str, str], dict[Target, float]] = {}
    for key, row in (transitions or {}).items():
        clean = {t: float(p) for t, p in row.items() if p != 0}
        if clean:
            trans[key] = clean
    pos = tuple(positions) if positions is not None else tuple(rewards)
    return RoMDP(
        m=m,
        n=n,
        actions=tuple(actions),
        positions=pos,
        rewards={q: float(rewards.get(q, 0.0)) for q in pos},
        entry=tuple(entry),
        transitions=trans,
    )


def as_open(a: RoMDP) -> OpenMDP:
    return OpenMDP(Arity(a.m), Arity(a.n), a)


# --------------------------------------------------------------------- validation


@dataclass(frozen=True)
class Violation:
    rule: str
    message: str
    element: object = None


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def rules(self) -> set[str]:
        return {v.rule for v in self.violations}


def validate(mdp: RoMDP) -> ValidationReport:
    """Check every structural invariant of a rightward open MDP."""
    out: list[Violation] = []
    add = lambda rule, msg, el=None: out.append(Violation(rule, msg, el))  # noqa: E731

    if mdp.m < 0 or mdp.n < 0:
        add("arity", f"negative arity {mdp.m}->{mdp.n}")
    if not mdp.actions:
        add("actions", "action set is empty")
    if len(set(mdp.actions)) != len(mdp.actions):
        add("actions", "duplicate action names")
    if len(set(mdp.positions)) != len(mdp.positions):
        add("positions", "duplicate position names")
    posset = set(mdp.positions)
    actset = set(mdp.actions)

    def target_ok(t) -> bool:
        if isinstance(t, Exit):
            return 1 <= t.index <= mdp.n
        return t in posset

    if len(mdp.entry) != mdp.m:
        add("entry", f"entry function has {len(mdp.entry)} entries, expected {mdp.m}")
    for i, t in enumerate(mdp.entry, start=1):
        if not target_ok(t):
            add("entry", f"entrance {i} maps to unknown target {t!r}", i)

    for q in mdp.positions:
        r = mdp.rewards.get(q)
        if r is None:
            add("reward", f"position {q!r} has no reward", q)
        elif not r >= 0:
            add("reward", f"position {q!r} has negative reward {r}", q)
    for q in mdp.rewards:
        if q not in posset:
            add("reward", f"reward given for unknown position {q!r}", q)

    for (s, a), row in mdp.transitions.items():
        if s not in posset:
            add("transition", f"transition from unknown position {s!r}", (s, a))
        if a not in actset:
            add("transition", f"unknown action {a!r} at {s!r}", (s, a))
        total = 0.0
        for t, p in row.items():
            if not target_ok(t):
                add("transition", f"({s},{a}) targets unknown {t!r}", (s, a, t))
            if not 0.0 <= p <= 1.0:
                add("probability", f"P({s},{a},{t}) = {p} outside [0,1]", (s, a, t))
            total += p
        if abs(total) > ROW_SUM_TOL and abs(total - 1.0) > ROW_SUM_TOL:
            add("row-sum", f"row ({s},{a}) sums to {total!r}, expected 0 or 1", (s, a))

    # unique access to each exit
    accessors: dict[int, set] = {}
    for i, t in enumerate(mdp.entry, start=1):
        if isinstance(t, Exit):
            accessors.setdefault(t.index, set()).add(("entrance", i))
    per_position: dict[tuple[str, int], set[str]] = {}
    for (s, a), row in mdp.transitions.items():
        for t, p in row.items():
            if isinstance(t, Exit) and p > 0:
                accessors.setdefault(t.index, set()).add(("position", s))
                per_position.setdefault((s, t.index), set()).add(a)
    for j, srcs in sorted(accessors.items()):
        if len(srcs) > 1:
            names = ", ".join(f"{k} {v}" for k, v in sorted(srcs, key=str))
            add("unique-exit", f"exit {j} is accessed by {names}", j)
    for (s, j), acts in sorted(per_position.items()):
        if len(acts) > 1:
            add("unique-exit", f"exit {j} is reached from {s!r} by actions {sorted(acts)}", (s, j))
    return ValidationReport(tuple(out))


def normalize_exits(mdp: RoMDP) -> RoMDP:
    """Insert zero-reward access positions so that every exit has one accessor."""
    report = validate(mdp)
    other = [v for v in report.violations if v.rule != "unique-exit"]
    if other:
        raise MalformedModel(f"{other[0].rule}: {other[0].message}")
    if report.ok:
        return mdp

    sources: dict[int, set] = {}
    for i, t in enumerate(mdp.entry, start=1):
        if isinstance(t, Exit):
            sources.setdefault(t.index, set()).add(("e", i))
    for (s, a), row in mdp.transitions.items():
        for t in row:
            if isinstance(t, Exit):
                sources.setdefault(t.index, set()).add(("q", s, a))
    shared = {
        j for j, src in sources.items()
        if len({x[:2] for x in src}) > 1 or len(src) > len({x[:2] for x in src})
    }
    taken = set(mdp.positions)
    access: dict[int, str] = {}
    for j in sorted(shared):
        name = f"acc{j}"
        while name in taken:
            name += "'"
        taken.add(name)
        access[j] = name

    def redirect(t: Target) -> Target:
        if isinstance(t, Exit) and t.index in access:
            return access[t.index]
        return t

    trans: dict[tuple[str, str], dict[Target, float]] = {}
    for key, row in mdp.transitions.items():
        new: dict[Target, float] = {}
        for t, p in row.items():
            t2 = redirect(t)
            new[t2] = new.get(t2, 0.0) + p
        trans[key] = new
    rewards = dict(mdp.rewards)
    for j, q in access.items():
        rewards[q] = 0.0
        trans[(q, mdp.actions[0])] = {Exit(j): 1.0}
    return RoMDP(
        m=mdp.m,
        n=mdp.n,
        actions=mdp.actions,
        positions=mdp.positions + tuple(access[j] for j in sorted(access)),
        rewards=rewards,
        entry=tuple(redirect(t) for t in mdp.entry),
        transitions=trans,
    )


def induced_mc(mdp: RoMDP, tau: Scheduler) -> RoMC:
    """Fix the scheduler ``tau``; the result has the single action ``*``."""
    missing = [q for q in mdp.positions if q not in tau]
    if missing:
        raise IncompleteScheduler(f"scheduler misses positions {missing}")
    trans = {}
    for q in mdp.positions:
        row = mdp.row(q, tau[q])
        if row:
            trans[(q, MC_ACTION)] = dict(row)
    return RoMDP(
        m=mdp.m,
        n=mdp.n,
        actions=(MC_ACTION,),
        positions=mdp.positions,
        rewards=dict(mdp.rewards),
        entry=mdp.entry,
        transitions=trans,
    )


# ------------------------------------------------------------------- isomorphism


def _signature(mdp: RoMDP, q: str) -> tuple:
    sig = [mdp.rewards[q]]
    for a in sorted(mdp.actions):
        row = mdp.row(q, a)
        exits = tuple(sorted((t.index, p) for t, p in row.items() if isinstance(t, Exit)))
        inner = tuple(sorted(p for t, p in row.items() if not isinstance(t, Exit)))
        sig.append((a, exits, inner))
    return tuple(sig)


def isomorphic(a: RoMDP, b: RoMDP) -> Optional[dict[str, str]]:
    """Return a structure-preserving bijection of positions, or ``None``.

    Probabilities and rewards are compared exactly.
    """
    if (a.m, a.n) != (b.m, b.n) or set(a.actions) != set(b.actions):
        return None
    if len(a.positions) != len(b.positions):
        return None

    eta: dict[str, str] = {}
    used: set[str] = set()
    for ta, tb in zip(a.entry, b.entry):
        if isinstance(ta, Exit) or isinstance(tb, Exit):
            if ta != tb:
                return None
            continue
        if eta.get(ta, tb) != tb:
            return None
        eta[ta] = tb
    if len(set(eta.values())) != len(eta):
        return None
    used.update(eta.values())

    sig_b: dict[tuple, list[str]] = {}
    for q in b.positions:
        sig_b.setdefault(_signature(b, q), []).append(q)
    cands = {q: sig_b.get(_signature(a, q), []) for q in a.positions}
    for q, img in eta.items():
        if img not in cands[q]:
            return None

    def consistent(q: str) -> bool:
        # check rows of q and rows pointing into q among assigned positions
        for act in a.actions:
            row_a = a.row(q, act)
            row_b = b.row(eta[q], act)
            for t, p in row_a.items():
                if isinstance(t, Exit):
                    if row_b.get(t) != p:
                        return False
                elif t in eta and row_b.get(eta[t]) != p:
                    return False
            for t, p in row_b.items():
                if not isinstance(t, Exit) and t in used:
                    pre = next((k for k, v in eta.items() if v == t), None)
                    if pre is not None and row_a.get(pre) != p:
                        return False
        return True

    for q in list(eta):
        if not consistent(q):
            return None

    order = _search_order(a, list(eta))
    todo = [q for q in order if q not in eta]

    def search(k: int) -> bool:
        if k == len(todo):
            return True
        q = todo[k]
        for img in cands[q]:
            if img in used:
                continue
            eta[q] = img
            used.add(img)
            if consistent(q) and search(k + 1):
                return True
            del eta[q]
            used.discard(img)
        return False

    return dict(eta) if search(0) else None


def _search_order(a: RoMDP, seeds: list[str]) -> list[str]:
    order: list[str] = []
    seen: set[str] = set()
    frontier = list(seeds) + list(a.positions)
    while frontier:
        q = frontier.pop(0)
        if q in seen:
            continue
        seen.add(q)
        order.append(q)
        succ = sorted(
            {t for act in a.actions for t in a.row(q, act) if not isinstance(t, Exit)}
        )
        frontier[:0] = [t for t in succ if t not in seen]
    return order
