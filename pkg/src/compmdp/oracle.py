"""Brute-force reference: enumerate every memoryless scheduler of a flat model.

This deliberately shares no code with the compositional engine. It builds the
induced chains itself, finds the states that can reach an exit by its own
graph search and solves the linear systems with plain dense algebra.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .model import Exit, OpenMDP, RoMDP

TIE_TOL = 1e-12


@dataclass
class OracleResult:
    p: np.ndarray  # m x n, value of the optimal scheduler at each (i, j)
    r: np.ndarray
    schedulers: int


def _dense(mdp: RoMDP):
    N = len(mdp.positions)
    idx = {q: k for k, q in enumerate(mdp.positions)}
    T = np.zeros((len(mdp.actions), N, N + mdp.n))
    for ai, a in enumerate(mdp.actions):
        for q in mdp.positions:
            for t, p in mdp.row(q, a).items():
                col = N + t.index - 1 if isinstance(t, Exit) else idx[t]
                T[ai, idx[q], col] += p
    return T, idx


def chain_values(inner: np.ndarray, out: np.ndarray, reward: np.ndarray):
    """Least solution for one chain via explicit graph search and a dense solve."""
    N = inner.shape[0]
    good = out.sum(axis=1) > 0
    edges = inner > 0
    while True:
        grown = good | (edges & good[None, :]).any(axis=1)
        if (grown == good).all():
            break
        good = grown
    keep = np.flatnonzero(good)
    X = np.zeros((N, out.shape[1]))
    Y = np.zeros_like(X)
    if keep.size:
        A = np.eye(len(keep)) - inner[np.ix_(keep, keep)]
        X[keep] = np.linalg.solve(A, out[keep])
        Y[keep] = np.linalg.solve(A, reward[keep, None] * X[keep])
    return X, Y


def entrance_values(mdp: RoMDP, X, Y, idx):
    m, n = mdp.m, mdp.n
    p = np.zeros((m, n))
    r = np.zeros((m, n))
    for i, t in enumerate(mdp.entry):
        if isinstance(t, Exit):
            p[i, t.index - 1] = 1.0
        else:
            p[i] = X[idx[t]]
            r[i] = Y[idx[t]]
    return p, r


def under_scheduler(mdp: RoMDP, sched: dict[str, str]):
    """(p, r) matrices of the chain induced by ``sched``."""
    T, idx = _dense(mdp)
    N = len(mdp.positions)
    rows = np.array([T[mdp.actions.index(sched[q]), idx[q]] for q in mdp.positions]).reshape(N, N + mdp.n)
    reward = np.array([mdp.rewards[q] for q in mdp.positions], dtype=float)
    X, Y = chain_values(rows[:, :N], rows[:, N:], reward)
    return entrance_values(mdp, X, Y, idx)


def brute_force(model: OpenMDP | RoMDP, limit: int = 1 << 16, all_actions: bool = False) -> OracleResult:
    """Optimal (p, r) at every entrance/exit pair over all memoryless schedulers.

    Optimal means largest ``r``, ties (relative 1e-12) broken by largest ``p``.
    By default a position only chooses among actions with a nonempty row
    (an empty row just drops the mass, which can never beat continuing);
    ``all_actions`` enumerates literally every action.
    """
    mdp = model.body if isinstance(model, OpenMDP) else model
    N = len(mdp.positions)
    T, idx = _dense(mdp)
    choices = []
    for q in mdp.positions:
        live = [ai for ai in range(len(mdp.actions)) if all_actions or T[ai, idx[q]].any()]
        choices.append(live or [0])
    total = int(np.prod([len(c) for c in choices])) if choices else 1
    if total > limit:
        raise ValueError(f"{total} schedulers exceed the brute-force limit {limit}")
    reward = np.array([mdp.rewards[q] for q in mdp.positions], dtype=float)
    best_p = np.full((mdp.m, mdp.n), -1.0)
    best_r = np.full((mdp.m, mdp.n), -1.0)
    for combo in itertools.product(*choices):
        rows = T[list(combo), list(range(N))] if N else np.zeros((0, mdp.n))
        X, Y = chain_values(rows[:, :N], rows[:, N:], reward)
        p, r = entrance_values(mdp, X, Y, idx)
        tol = TIE_TOL * np.maximum(1.0, np.abs(best_r))
        better = (r > best_r + tol) | ((np.abs(r - best_r) <= tol) & (p > best_p))
        best_p = np.where(better, p, best_p)
        best_r = np.where(better, r, best_r)
    return OracleResult(best_p, best_r, total)
