"""Numerical core: solving open Markov chains and composing their (p, r) pairs.

For an open chain with ``m`` entrances and ``n`` exits the solution is a pair of
``m x n`` matrices: ``p[i, j]`` is the probability of leaving through exit ``j``
after entering at ``i`` and ``r[i, j]`` is the reward collected on those paths,
weighted by their probability (not conditioned on reaching ``j``).

Every solver works on a *batch* of chains or arrows at once: arrays carry a
leading batch axis so that all memoryless schedulers of a component are solved
by a handful of vectorised calls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import breadth_first_order
from scipy.sparse.linalg import splu

from .errors import ArityMismatch, BudgetExceeded, MalformedModel, SingularSystem
from .model import Exit, RoMDP

SNAP = 1e-15
DENSE_LIMIT = 2000
# rough cap on the number of float64 entries materialised per batched solve
BATCH_ENTRIES = 8_000_000


@dataclass(frozen=True, eq=False)
class SemanticArrowMC:
    p: np.ndarray
    r: np.ndarray

    @property
    def m(self) -> int:
        return self.p.shape[0]

    @property
    def n(self) -> int:
        return self.p.shape[1]

    @staticmethod
    def identity(k: int) -> "SemanticArrowMC":
        return SemanticArrowMC(np.eye(k), np.zeros((k, k)))

    @staticmethod
    def swap(a: int, b: int) -> "SemanticArrowMC":
        return SemanticArrowMC(swap_matrix(a, b), np.zeros((a + b, a + b)))

    def allclose(self, other: "SemanticArrowMC", atol: float = 1e-9) -> bool:
        return (
            self.p.shape == other.p.shape
            and np.allclose(self.p, other.p, rtol=0, atol=atol)
            and np.allclose(self.r, other.r, rtol=0, atol=atol)
        )


def swap_matrix(a: int, b: int) -> np.ndarray:
    out = np.zeros((a + b, a + b))
    for i in range(a):
        out[i, i + b] = 1.0
    for i in range(a, a + b):
        out[i, i - a] = 1.0
    return out


def snap(p: np.ndarray, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Zero out entries whose probability is numerically nothing."""
    tiny = p < SNAP
    if tiny.any():
        p = np.where(tiny, 0.0, p)
        r = np.where(tiny, 0.0, r)
    return p, r


# ------------------------------------------------------------ chain matrices


def _index(c: RoMDP) -> dict[str, int]:
    return {q: k for k, q in enumerate(c.positions)}


def action_rows(c: RoMDP) -> np.ndarray:
    """Dense array ``rows[q, a, :]`` over positions followed by exits."""
    idx = _index(c)
    N = len(c.positions)
    act = {a: k for k, a in enumerate(c.actions)}
    rows = np.zeros((N, len(c.actions), N + c.n))
    for (s, a), row in c.transitions.items():
        for t, p in row.items():
            col = N + t.index - 1 if isinstance(t, Exit) else idx[t]
            rows[idx[s], act[a], col] += p
    return rows


def _entry_index(c: RoMDP) -> tuple[np.ndarray, np.ndarray]:
    """Per entrance: position index (or -1) and exit index (or -1), 0-based."""
    idx = _index(c)
    pos = np.full(c.m, -1, dtype=np.intp)
    ext = np.full(c.m, -1, dtype=np.intp)
    for i, t in enumerate(c.entry):
        if isinstance(t, Exit):
            ext[i] = t.index - 1
        else:
            pos[i] = idx[t]
    return pos, ext


def _assemble(pos, ext, X, Y, n):
    """Read entrance rows out of per-position solutions ``X, Y`` of shape (k, N, n)."""
    k = X.shape[0]
    m = len(pos)
    P = np.zeros((k, m, n))
    R = np.zeros((k, m, n))
    for i in range(m):
        if pos[i] >= 0:
            P[:, i] = X[:, pos[i]]
            R[:, i] = Y[:, pos[i]]
        else:
            P[:, i, ext[i]] = 1.0
    return snap(P, R)


def _alive_batch(inner: np.ndarray, out: np.ndarray) -> np.ndarray:
    """States with a positive-probability path to some exit, for each batch member."""
    alive = out.sum(axis=-1) > 0
    N = inner.shape[-1]
    if N > 32:
        return np.stack([_alive_graph(inner[k] > 0, alive[k]) for k in range(inner.shape[0])])
    adj = (inner > 0).astype(np.float64)
    for _ in range(N):
        nxt = alive | (np.einsum("kij,kj->ki", adj, alive.astype(np.float64)) > 0)
        if (nxt == alive).all():
            break
        alive = nxt
    return alive


def _alive_graph(adj, seed: np.ndarray) -> np.ndarray:
    """Backward search from ``seed`` along the edges of ``adj`` (dense or sparse)."""
    N = len(seed)
    g = sp.csr_matrix(adj, shape=(N, N), dtype=float)
    sink = sp.csr_matrix((np.ones(int(seed.sum())), (np.flatnonzero(seed), np.full(int(seed.sum()), N))),
                         shape=(N, N + 1))
    full = sp.vstack([sp.hstack([g, sp.csr_matrix((N, 1))]).tocsr() + sink, sp.csr_matrix((1, N + 1))])
    order = breadth_first_order(full.T.tocsr(), N, directed=True, return_predecessors=False)
    alive = np.zeros(N + 1, dtype=bool)
    alive[order] = True
    return alive[:N]


def solve_dense_batch(inner: np.ndarray, out: np.ndarray, reward: np.ndarray):
    """Least solutions of ``x = out + inner x`` and ``y = reward * x + inner y``.

    ``inner`` is (k, N, N), ``out`` is (k, N, n) and ``reward`` is (N,) or
    (k, N). States that cannot reach any exit are fixed to zero, which makes
    the remaining system nonsingular and selects the least solution.
    """
    k, N, _ = inner.shape
    n = out.shape[-1]
    if N == 0:
        z = np.zeros((k, 0, n))
        return z, z.copy()
    alive = _alive_batch(inner, out)
    mask = alive[:, :, None]
    inner = np.where(mask, inner, 0.0)
    out = np.where(mask, out, 0.0)
    M = np.eye(N)[None] - inner
    try:
        X = np.linalg.solve(M, out)
        rw = np.broadcast_to(reward, (k, N))[:, :, None]
        Y = np.linalg.solve(M, rw * X)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - pruning prevents this
        raise SingularSystem(str(exc)) from exc
    return X, Y


def solve_sparse(inner: sp.spmatrix, out: np.ndarray, reward: np.ndarray):
    """Single-chain counterpart of :func:`solve_dense_batch` for large chains."""
    N = inner.shape[0]
    n = out.shape[1]
    inner = sp.csr_matrix(inner)
    alive = _alive_graph(inner > 0, out.sum(axis=1) > 0)
    X = np.zeros((N, n))
    Y = np.zeros((N, n))
    keep = np.flatnonzero(alive)
    if keep.size == 0:
        return X, Y
    sub = inner[keep][:, keep]
    M = (sp.identity(keep.size, format="csc") - sub).tocsc()
    try:
        lu = splu(M)
    except RuntimeError as exc:  # pragma: no cover
        raise SingularSystem(str(exc)) from exc
    xs = lu.solve(np.ascontiguousarray(out[keep]))
    ys = lu.solve(reward[keep][:, None] * xs)
    X[keep] = xs
    Y[keep] = ys
    return X, Y


def chain_arrays(c: RoMDP, action: str | None = None):
    """Inner matrix, exit matrix and reward vector of a chain (or of one action)."""
    a = c.actions[0] if action is None else action
    idx = _index(c)
    N = len(c.positions)
    rows, cols, vals = [], [], []
    out = np.zeros((N, c.n))
    for (s, act), row in c.transitions.items():
        if act != a:
            continue
        for t, p in row.items():
            if isinstance(t, Exit):
                out[idx[s], t.index - 1] += p
            else:
                rows.append(idx[s])
                cols.append(idx[t])
                vals.append(p)
    inner = sp.coo_matrix((vals, (rows, cols)), shape=(N, N)).tocsr()
    reward = np.array([c.rewards[q] for q in c.positions], dtype=float)
    return inner, out, reward


def solve_component_mc(c: RoMDP, action: str | None = None) -> SemanticArrowMC:
    """Reachability and weighted reward for every (entrance, exit) pair."""
    if action is None and len(c.actions) != 1:
        raise MalformedModel("solve_component_mc expects a chain; fix a scheduler first")
    inner, out, reward = chain_arrays(c, action)
    N = inner.shape[0]
    if N > DENSE_LIMIT:
        X, Y = solve_sparse(inner, out, reward)
    else:
        X, Y = solve_dense_batch(inner.toarray()[None], out[None], reward)
        X, Y = X[0], Y[0]
    pos, ext = _entry_index(c)
    P, R = _assemble(pos, ext, X[None], Y[None], c.n)
    return SemanticArrowMC(P[0], R[0])


def solve_schedulers(c: RoMDP, choices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Solve the chains induced by many schedulers at once.

    ``choices[k, q]`` is the index (into ``c.actions``) chosen at position
    ``q`` by the ``k``-th scheduler. Returns stacked ``p`` and ``r`` matrices
    of shape (k, m, n).
    """
    N = len(c.positions)
    K = choices.shape[0]
    pos, ext = _entry_index(c)
    reward = np.array([c.rewards[q] for q in c.positions], dtype=float)
    if N > DENSE_LIMIT:
        Ps, Rs = [], []
        for k in range(K):
            sched = {q: c.actions[choices[k, i]] for i, q in enumerate(c.positions)}
            P, R = _solve_sparse_sched(c, sched, reward, pos, ext)
            Ps.append(P)
            Rs.append(R)
        return np.stack(Ps), np.stack(Rs)
    rows = action_rows(c)
    per = max(1, BATCH_ENTRIES // max(1, N * (N + c.n)))
    Ps, Rs = [], []
    ar = np.arange(N)
    for start in range(0, K, per):
        ch = choices[start:start + per]
        full = rows[ar[None, :], ch]  # (k, N, N + n)
        X, Y = solve_dense_batch(full[:, :, :N], full[:, :, N:], reward)
        P, R = _assemble(pos, ext, X, Y, c.n)
        Ps.append(P)
        Rs.append(R)
    if not Ps:
        return np.zeros((0, c.m, c.n)), np.zeros((0, c.m, c.n))
    return np.concatenate(Ps), np.concatenate(Rs)


def _solve_sparse_sched(c: RoMDP, sched, reward, pos, ext):
    idx = _index(c)
    N = len(c.positions)
    rows, cols, vals = [], [], []
    out = np.zeros((N, c.n))
    for q in c.positions:
        for t, p in c.row(q, sched[q]).items():
            if isinstance(t, Exit):
                out[idx[q], t.index - 1] += p
            else:
                rows.append(idx[q])
                cols.append(idx[t])
                vals.append(p)
    inner = sp.coo_matrix((vals, (rows, cols)), shape=(N, N)).tocsr()
    X, Y = solve_sparse(inner, out, reward)
    P, R = _assemble(pos, ext, X[None], Y[None], c.n)
    return P[0], R[0]


# ------------------------------------------------------- arrow-level operators


def seq_mc(f: SemanticArrowMC, g: SemanticArrowMC) -> SemanticArrowMC:
    if f.n != g.m:
        raise ArityMismatch("seq", f.n, g.m)
    P, R = seq_batch(f.p[None], f.r[None], g.p[None], g.r[None])
    return SemanticArrowMC(P[0, 0], R[0, 0])


def seq_batch(Pf, Rf, Pg, Rg):
    """All pairwise sequential composites; result shape (kf, kg, m, n)."""
    P = np.einsum("aij,bjk->abik", Pf, Pg)
    R = np.einsum("aij,bjk->abik", Pf, Rg) + np.einsum("aij,bjk->abik", Rf, Pg)
    return snap(P, R)


def sum_mc(f: SemanticArrowMC, g: SemanticArrowMC) -> SemanticArrowMC:
    P, R = sum_batch(f.p[None], f.r[None], g.p[None], g.r[None])
    return SemanticArrowMC(P[0, 0], R[0, 0])


def sum_batch(Pf, Rf, Pg, Rg):
    kf, m1, n1 = Pf.shape
    kg, m2, n2 = Pg.shape
    P = np.zeros((kf, kg, m1 + m2, n1 + n2))
    R = np.zeros_like(P)
    P[:, :, :m1, :n1] = Pf[:, None]
    R[:, :, :m1, :n1] = Rf[:, None]
    P[:, :, m1:, n1:] = Pg[None]
    R[:, :, m1:, n1:] = Rg[None]
    return P, R


def trace_mc(l: int, f: SemanticArrowMC) -> SemanticArrowMC:
    P, R = trace_batch(l, f.p[None], f.r[None])
    return SemanticArrowMC(P[0], R[0])


def trace_batch(l: int, P: np.ndarray, R: np.ndarray):
    """Close ``l`` loops on a batch of arrows of shape (k, l+m, l+n).

    Loop ports that can never escape to an output get value zero (the least
    fixed point); the rest solve ``x = C + B x`` and
    ``y = C_r + B_r x + B y``, after which the outputs are
    ``D + A x`` and ``D_r + A_r x + A y``.
    """
    k, M, N = P.shape
    if M < l or N < l:
        raise ArityMismatch("trace", f">= {l} wires on both sides", f"{M}->{N}")
    if l == 0:
        return P, R
    B, C, A, D = P[:, :l, :l], P[:, :l, l:], P[:, l:, :l], P[:, l:, l:]
    Br, Cr, Ar, Dr = R[:, :l, :l], R[:, :l, l:], R[:, l:, :l], R[:, l:, l:]
    if N - l == 0:
        return np.zeros((k, M - l, 0)), np.zeros((k, M - l, 0))
    X, Y = _loop_solve(B, C, Br, Cr)
    Pout = D + A @ X
    Rout = Dr + Ar @ X + A @ Y
    return snap(Pout, Rout)


def _loop_solve(B, C, Br, Cr):
    alive = _alive_batch(B, C)
    mask = alive[:, :, None]
    B0 = np.where(mask, B, 0.0)
    C0 = np.where(mask, C, 0.0)
    Br0 = np.where(mask, Br, 0.0)
    Cr0 = np.where(mask, Cr, 0.0)
    M = np.eye(B.shape[-1])[None] - B0
    try:
        X = np.linalg.solve(M, C0)
        Y = np.linalg.solve(M, Cr0 + Br0 @ X)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise SingularSystem(str(exc)) from exc
    return X, Y


# ------------------------------------------------------------------ oracle


def path_oracle(c: RoMDP, i: int, j: int, horizon: int, budget: int = 10**8):
    """Sum over all paths from entrance ``i`` to exit ``j`` taking at most
    ``horizon`` transitions out of positions.

    Paths are aggregated by their current position, which gives the same sums
    as listing them one by one. Returns ``(p_lower, r_lower, residual)`` where
    ``residual`` is the probability mass at the horizon that sits in positions
    from which exit ``j`` is still reachable; mass trapped elsewhere can never
    add to either sum, so ``p_lower <= p <= p_lower + residual``.
    """
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    if len(c.actions) != 1:
        raise MalformedModel("path_oracle expects a chain")
    start = c.entry[i - 1]
    if isinstance(start, Exit):
        return (1.0 if start.index == j else 0.0), 0.0, 0.0
    inner, out, reward = chain_arrays(c)
    work = horizon * max(1, inner.nnz + len(c.positions))
    if work > budget:
        raise BudgetExceeded(f"path enumeration needs ~{work} steps, budget is {budget}")
    inner_t = inner.T.tocsr()
    to_j = out[:, j - 1]
    mass = np.zeros(len(c.positions))
    mass[c.positions.index(start)] = 1.0
    acc = reward * mass
    p_lower = 0.0
    r_lower = 0.0
    for _ in range(horizon):
        p_lower += float(mass @ to_j)
        r_lower += float(acc @ to_j)
        mass = inner_t @ mass
        acc = inner_t @ acc + reward * mass
    live = _alive_graph(inner, to_j > 0)
    return p_lower, r_lower, float(mass[live].sum())

