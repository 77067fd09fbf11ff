"""Exception hierarchy shared by every layer of the checker."""

from __future__ import annotations


class CompMDPError(Exception):
    """Base class for all errors raised by this package."""


class MalformedModel(CompMDPError):
    pass


class ValidationError(CompMDPError):
    def __init__(self, report, context: str = ""):
        self.report = report
        first = report.violations[0] if report.violations else None
        detail = f"{first.rule}: {first.message}" if first else "invalid model"
        prefix = f"{context}: " if context else ""
        super().__init__(f"{prefix}{detail}")


class DiagramSyntaxError(CompMDPError):
    def __init__(self, line: int, col: int, expected: str, found: str = ""):
        self.line = line
        self.col = col
        self.expected = expected
        self.found = found
        msg = f"line {line}, col {col}: expected {expected}"
        if found:
            msg += f", found {found!r}"
        super().__init__(msg)


class ArityMismatch(CompMDPError):
    def __init__(self, node: str, expected, found):
        self.node = node
        self.expected = expected
        self.found = found
        super().__init__(f"arity mismatch in {node}: expected {expected}, found {found}")


class ActionSetMismatch(CompMDPError):
    pass


class WireCycle(CompMDPError):
    def __init__(self, port: int):
        self.port = port
        super().__init__(f"loop port {port} closes a cycle of bare wires")


class UnboundName(CompMDPError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unbound name {name!r}")


class IncompleteScheduler(CompMDPError):
    pass


class SchedulerExplosion(CompMDPError):
    def __init__(self, count: int, cap: int, component: str = ""):
        self.count = count
        self.cap = cap
        where = f" in {component}" if component else ""
        super().__init__(
            f"{count} memoryless schedulers{where} exceed the cap of {cap}; "
            "consider wrapping this subdiagram in freeze(...)"
        )


class FrozenMultiExit(CompMDPError):
    def __init__(self, exits: int):
        self.exits = exits
        super().__init__(f"frozen block must have exactly one exit, it has {exits}")


class FrozenNotAlmostSure(CompMDPError):
    """A frozen block where some scheduler avoids the exit with positive probability."""


class EmptyFront(CompMDPError):
    pass


class BudgetExceeded(CompMDPError):
    pass


class SingularSystem(CompMDPError):
    pass
