"""Exporters for flattened models: the native component format and PRISM."""

from __future__ import annotations

import re

from .dsl import format_real, print_component
from .model import Exit, OpenMDP

PRISM_CAVEAT = """\
// Caveat on rewards: this tool reports the expected reward as a weighted sum,
// i.e. the reward of each path times its probability, summed over the paths
// that reach the chosen exit. PRISM's R{"reward"}max=? [ F "exitJ" ] instead
// returns infinity whenever the exit is missed with positive probability and
// otherwise accumulates reward along all paths. The two agree only when the
// exit is reached almost surely; otherwise compare reachability
// (Pmax=? [ F "exitJ" ]) and treat reward comparisons with care.
"""


def to_native(model: OpenMDP, name: str = "flat") -> str:
    return print_component(model, name)


def _ident(s: str) -> str:
    out = re.sub(r"[^A-Za-z0-9_]", "_", s)
    return out if re.match(r"[A-Za-z_]", out) else "a_" + out


def to_prism(model: OpenMDP, entrance: int = 1) -> str:
    """Explicit-state PRISM MDP started at ``entrance``.

    States ``0..N-1`` are positions in flattened order, ``N..N+n-1`` the exits
    (absorbing), and ``N+n`` a sink for positions without any outgoing row.
    """
    b = model.body
    N, n = len(b.positions), b.n
    if not 1 <= entrance <= b.m:
        raise ValueError(f"entrance {entrance} outside 1..{b.m}")
    idx = {q: k for k, q in enumerate(b.positions)}
    sink = N + n

    def state(t) -> int:
        return N + t.index - 1 if isinstance(t, Exit) else idx[t]

    lines = [
        "// flattened model exported by compmdp",
        "// states: positions 0..%d, exits %d..%d, sink %d" % (N - 1, N, N + n - 1, sink),
    ]
    lines += [f"//   {k}: {q}" for k, q in enumerate(b.positions)]
    lines += PRISM_CAVEAT.rstrip("\n").splitlines()
    lines += ["", "mdp", "", "module flat", f"  s : [0..{sink}] init {state(b.entry[entrance - 1])};"]
    for q in b.positions:
        k = idx[q]
        any_row = False
        for a in b.actions:
            row = b.row(q, a)
            if not row:
                continue
            any_row = True
            upd = " + ".join(f"{format_real(p)}:(s'={state(t)})" for t, p in row.items())
            total = sum(row.values())
            lines.append(f"  [{_ident(a)}] s={k} -> {upd};" if abs(total - 1) < 1e-12 else
                         f"  [{_ident(a)}] s={k} -> {upd} + {format_real(1 - total)}:(s'={sink});")
        if not any_row:
            lines.append(f"  [] s={k} -> 1:(s'={sink});")
    for j in range(n):
        lines.append(f"  [] s={N + j} -> 1:(s'={N + j});")
    lines.append(f"  [] s={sink} -> 1:(s'={sink});")
    lines += ["endmodule", "", 'rewards "reward"']
    for q in b.positions:
        if b.rewards[q]:
            lines.append(f"  s={idx[q]} : {format_real(b.rewards[q])};")
    lines.append("endrewards")
    lines.append("")
    for j in range(n):
        lines.append(f'label "exit{j + 1}" = s={N + j};')
    return "\n".join(lines) + "\n"
