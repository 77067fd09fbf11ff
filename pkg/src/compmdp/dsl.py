"""Text formats: component files and diagram files.

Component file::

    mdp task {
      arity 1 -> 1
      actions [go]
      positions { q reward 4 }
      entry 1 -> q
      trans q go { q: 0.2, exit 1: 0.8 }
    }

``omdp`` components use ``arity (r,l) -> (r,l)``; their entrances and exits
are numbered as in the twisted rightward body.

Diagram file::

    let T = load "task.omdp";
    let Room = T ; T;
    solve tr[1](E) (+) id[1] entrance 1 exit 1

``;`` binds tighter than ``(+)``; both associate to the left. Besides the core
forms the parser accepts ``id[r,l]``, ``unit[r,l]`` and ``counit[r,l]`` for
bidirectional wires. The ``solve`` line is optional, as are its entrance and
exit.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Optional

from . import diagram as d
from .errors import DiagramSyntaxError, ValidationError
from .model import Arity, Exit, OpenMDP, RoMDP, make_romdp, validate

TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<plus>\(\+\))
  | (?P<arrow>->)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<number>[-+]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?(?![A-Za-z_]))
  | (?P<name>[A-Za-z_][A-Za-z0-9_./']*)
  | (?P<punct>[{}\[\](),:;=])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    out = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = TOKEN_RE.match(text, pos)
        if not m:
            raise DiagramSyntaxError(line, pos - line_start + 1, "a token", text[pos])
        kind = m.lastgroup
        tok = m.group()
        if kind != "ws":
            out.append(Token(kind, tok, line, pos - line_start + 1))
        nl = tok.count("\n")
        if nl:
            line += nl
            line_start = pos + tok.rfind("\n") + 1
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


class _Cursor:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def fail(self, expected: str):
        t = self.tok
        raise DiagramSyntaxError(t.line, t.col, expected, t.text or "end of input")

    def at(self, text: str) -> bool:
        return self.tok.kind in ("punct", "arrow", "plus", "name") and self.tok.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(repr(text))
        return self.advance()

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def name(self, what: str = "a name") -> str:
        if self.tok.kind != "name":
            self.fail(what)
        return self.advance().text

    def int(self) -> int:
        t = self.tok
        if t.kind != "number" or not re.fullmatch(r"\d+", t.text):
            self.fail("a nonnegative integer")
        self.advance()
        return int(t.text)

    def real(self) -> float:
        if self.tok.kind != "number":
            self.fail("a number")
        return float(self.advance().text)

    def string(self) -> str:
        if self.tok.kind != "string":
            self.fail("a quoted string")
        raw = self.advance().text[1:-1]
        return re.sub(r"\\(.)", r"\1", raw)


# ------------------------------------------------------------------ components


def parse_component(text: str, check: bool = True) -> OpenMDP:
    """Parse one component file; the result is validated unless ``check`` is off."""
    c = _Cursor(text)
    name, o = _component(c)
    if c.tok.kind != "eof":
        c.fail("end of input")
    if check:
        report = validate(o.body)
        if not report.ok:
            raise ValidationError(report, f"component {name}")
    return o


def _component(c: _Cursor) -> tuple[str, OpenMDP]:
    kind = c.name("'mdp' or 'omdp'")
    if kind not in ("mdp", "omdp"):
        c.i -= 1
        c.fail("'mdp' or 'omdp'")
    name = c.name("a component name")
    c.expect("{")
    c.expect("arity")
    if c.at("("):
        c.advance()
        r1 = c.int()
        c.expect(",")
        l1 = c.int()
        c.expect(")")
        c.expect("->")
        c.expect("(")
        r2 = c.int()
        c.expect(",")
        l2 = c.int()
        c.expect(")")
        dom, cod = Arity(r1, l1), Arity(r2, l2)
    else:
        dom = Arity(c.int())
        c.expect("->")
        cod = Arity(c.int())
    c.expect("actions")
    c.expect("[")
    actions = [c.name("an action name")]
    while c.at(","):
        c.advance()
        actions.append(c.name("an action name"))
    c.expect("]")
    c.expect("positions")
    c.expect("{")
    rewards: dict[str, float] = {}
    order: list[str] = []
    while not c.at("}"):
        q = c.name("a position name or '}'")
        c.expect("reward")
        rewards[q] = c.real()
        order.append(q)
    c.expect("}")
    c.expect("entry")
    entry: dict[int, object] = {}
    while c.tok.kind == "number":
        i = c.int()
        c.expect("->")
        entry[i] = _target(c)
    trans: dict[tuple[str, str], dict] = {}
    while c.at("trans"):
        c.advance()
        s = c.name("a position name")
        a = c.name("an action name")
        c.expect("{")
        row: dict = {}
        while True:
            t = _target(c)
            c.expect(":")
            row[t] = row.get(t, 0.0) + c.real()
            if not c.at(","):
                break
            c.advance()
        c.expect("}")
        trans.setdefault((s, a), {}).update(row)
    c.expect("}")
    m, n = dom.right + cod.left, cod.right + dom.left
    # a gap in the numbering shows up as a dangling Exit(0), which validate reports
    ent = [entry.get(i, Exit(0)) for i in range(1, max(entry, default=0) + 1)]
    body = make_romdp(m, n, actions, rewards, ent, trans, positions=order)
    return name, OpenMDP(dom, cod, body)


def _target(c: _Cursor):
    if c.at("exit"):
        c.advance()
        return Exit(c.int())
    return c.name("a position or 'exit'")


def format_real(x: float) -> str:
    """Twelve significant digits, or more when needed to read back the same float."""
    s = f"{x:.12g}"
    return s if float(s) == x else repr(float(x))


def print_component(o: OpenMDP | RoMDP, name: str = "model") -> str:
    if isinstance(o, RoMDP):
        o = OpenMDP(Arity(o.m), Arity(o.n), o)
    b = o.body
    kind = "mdp" if o.rightward else "omdp"
    lines = [f"{kind} {name} {{"]
    if o.rightward:
        lines.append(f"  arity {o.dom.right} -> {o.cod.right}")
    else:
        lines.append(f"  arity ({o.dom.right},{o.dom.left}) -> ({o.cod.right},{o.cod.left})")
    lines.append(f"  actions [{', '.join(b.actions)}]")
    if b.positions:
        lines.append("  positions {")
        lines.extend(f"    {q} reward {format_real(b.rewards[q])}" for q in b.positions)
        lines.append("  }")
    else:
        lines.append("  positions { }")
    tgt = lambda t: f"exit {t.index}" if isinstance(t, Exit) else t  # noqa: E731
    lines.append(" ".join(["  entry"] + [f"{i} -> {tgt(t)}" for i, t in enumerate(b.entry, 1)]))
    for q in b.positions:
        for a in b.actions:
            row = b.row(q, a)
            if row:
                body = ", ".join(f"{tgt(t)}: {format_real(p)}" for t, p in row.items())
                lines.append(f"  trans {q} {a} {{ {body} }}")
    lines.append("}")
    return "\n".join(lines) + "\n"


# -------------------------------------------------------------------- diagrams

KEYWORDS = {"let", "solve", "load", "tr", "freeze", "id", "swap", "unit", "counit", "entrance", "exit"}


@dataclass
class Program:
    bindings: dict[str, d.Expr]
    expr: Optional[d.Expr]
    entrance: Optional[int] = None
    exit: Optional[int] = None
    sources: dict[str, str] = field(default_factory=dict)

    def __iter__(self) -> Iterator:
        yield self.bindings
        yield self.expr


Loader = Callable[[str], OpenMDP]


def file_loader(base_dir: str | Path = ".") -> Loader:
    base = Path(base_dir)
    cache: dict[str, OpenMDP] = {}

    def load(path: str) -> OpenMDP:
        if path not in cache:
            full = Path(path) if Path(path).is_absolute() else base / path
            cache[path] = parse_component(full.read_text(encoding="utf-8"))
        return cache[path]

    return load


def parse_diagram(text: str, loader: Loader | None = None, base_dir: str | Path = ".") -> Program:
    """Parse a diagram file into its bindings and final expression."""
    c = _Cursor(text)
    p = _DiagramParser(c, loader or file_loader(base_dir))
    return p.program()


class _DiagramParser:
    def __init__(self, c: _Cursor, loader: Loader):
        self.c = c
        self.loader = loader
        self.env: dict[str, d.Expr] = {}
        self.in_let = False

    def program(self) -> Program:
        c = self.c
        while c.at("let"):
            c.advance()
            tok = c.tok
            name = c.name("a binding name")
            if name in KEYWORDS:
                raise DiagramSyntaxError(tok.line, tok.col, "a binding name", name)
            c.expect("=")
            self.in_let = True
            self.env[name] = self.expr()
            self.in_let = False
            c.expect(";")
        expr = None
        entrance = exit_ = None
        if c.at("solve") or c.tok.kind != "eof":
            # the "solve" keyword may be omitted before the final expression
            if c.at("solve"):
                c.advance()
            expr = self.expr()
            if c.at("entrance"):
                c.advance()
                entrance = c.int()
            if c.at("exit"):
                c.advance()
                exit_ = c.int()
        if c.tok.kind != "eof":
            c.fail("'let', 'solve' or end of input" if expr is None else "end of input")
        return Program(self.env, expr, entrance, exit_)

    def _seq_continues(self) -> bool:
        c = self.c
        if not c.at(";"):
            return False
        nxt = c.peek()
        if nxt.kind == "eof" or (nxt.kind == "name" and nxt.text in ("let", "solve")):
            return False
        # Inside a binding, "; NAME" with NAME unbound cannot continue the
        # sequence (it would be an unbound reference), so the ";" ends the
        # binding and NAME starts the final expression.
        if self.in_let and nxt.kind == "name" and nxt.text not in KEYWORDS and nxt.text not in self.env:
            return False
        return True

    def expr(self) -> d.Expr:
        left = self.seq_expr()
        while self.c.tok.kind == "plus":
            self.c.advance()
            left = d.plus(left, self.seq_expr())
        return left

    def seq_expr(self) -> d.Expr:
        left = self.atom()
        while self._seq_continues():
            self.c.advance()
            left = d.seq(left, self.atom())
        return left

    def _params(self) -> tuple[int, ...]:
        c = self.c
        c.expect("[")
        out = [c.int()]
        while c.at(","):
            c.advance()
            out.append(c.int())
        c.expect("]")
        return tuple(out)

    def atom(self) -> d.Expr:
        c = self.c
        t = c.tok
        if c.at("("):
            c.advance()
            e = self.expr()
            c.expect(")")
            return e
        if t.kind != "name":
            c.fail("an expression")
        word = t.text
        if word == "tr":
            c.advance()
            (l,) = self._exact(self._params(), 1, t)
            c.expect("(")
            inner = self.expr()
            c.expect(")")
            return d.trace(l, inner)
        if word == "freeze":
            c.advance()
            c.expect("(")
            inner = self.expr()
            c.expect(")")
            return d.freeze(inner)
        if word == "id":
            c.advance()
            ps = self._params()
            if len(ps) > 2:
                raise DiagramSyntaxError(t.line, t.col, "id[n] or id[r,l]", word)
            return d.identity(*ps)
        if word == "swap":
            c.advance()
            return d.swap(*self._exact(self._params(), 2, t))
        if word in ("unit", "counit"):
            c.advance()
            ps = self._exact(self._params(), 2, t)
            return d.unit(*ps) if word == "unit" else d.counit(*ps)
        if word == "load":
            c.advance()
            path = c.string()
            return d.prim(path, self.loader(path))
        if word in KEYWORDS:
            c.fail("an expression")
        c.advance()
        return d.var(word, self.env)

    @staticmethod
    def _exact(ps: tuple[int, ...], k: int, t: Token) -> tuple[int, ...]:
        if len(ps) != k:
            raise DiagramSyntaxError(t.line, t.col, f"{k} parameter(s) for {t.text}", str(len(ps)))
        return ps


# -------------------------------------------------------------------- printing

_SUM, _SEQ, _ATOM = 0, 1, 2


def print_expr(e: d.Expr) -> str:
    return _show(e, _SUM)


def _level(e: d.Expr) -> int:
    if isinstance(e, d.Sum):
        return _SUM
    if isinstance(e, d.Seq):
        return _SEQ
    return _ATOM


def _show(e: d.Expr, need: int) -> str:
    if isinstance(e, d.Sum):
        s = f"{_show(e.left, _SUM)} (+) {_show(e.right, _SEQ)}"
    elif isinstance(e, d.Seq):
        s = f"{_show(e.left, _SEQ)} ; {_show(e.right, _ATOM)}"
    elif isinstance(e, d.Trace):
        s = f"tr[{e.loops}]({_show(e.inner, _SUM)})"
    elif isinstance(e, d.Freeze):
        s = f"freeze({_show(e.inner, _SUM)})"
    elif isinstance(e, d.Wire):
        s = f"{e.kind}[{','.join(map(str, e.params))}]"
    elif isinstance(e, d.Prim):
        escaped = e.ref.replace("\\", "\\\\").replace('"', '\\"')
        s = f'load "{escaped}"'
    elif isinstance(e, d.Var):
        s = e.name
    else:
        raise TypeError(f"not a diagram node: {e!r}")
    return f"({s})" if _level(e) < need else s


def print_diagram(bindings, expr: Optional[d.Expr] = None, entrance: Optional[int] = None,
                  exit: Optional[int] = None) -> str:
    """Canonical text: one binding per line, then the ``solve`` line."""
    if isinstance(bindings, Program):
        prog = bindings
        bindings, expr, entrance, exit = prog.bindings, prog.expr, prog.entrance, prog.exit
    lines = [f"let {name} = {print_expr(e)};" for name, e in bindings.items()]
    if expr is not None:
        tail = f"solve {print_expr(expr)}"
        if entrance is not None:
            tail += f" entrance {entrance}"
        if exit is not None:
            tail += f" exit {exit}"
        lines.append(tail)
    return "\n".join(lines) + "\n"
