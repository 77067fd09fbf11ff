"""Compositional model checking of open MDPs arranged in string diagrams."""

from .algebra import flatten, seq_o, seq_ro, sum_o, sum_ro, trace_ro
from .dsl import parse_component, parse_diagram, print_diagram
from .engine import SemanticArrowMC, solve_component_mc
from .model import Arity, Exit, OpenMDP, RoMDP, make_romdp, validate
from .semantics import EvalConfig, Evaluator, SemanticArrow, extract_optimal, solve_diagram

__all__ = [
    "Arity",
    "EvalConfig",
    "Evaluator",
    "Exit",
    "OpenMDP",
    "RoMDP",
    "SemanticArrow",
    "SemanticArrowMC",
    "extract_optimal",
    "flatten",
    "make_romdp",
    "parse_component",
    "parse_diagram",
    "print_diagram",
    "seq_o",
    "seq_ro",
    "solve_component_mc",
    "solve_diagram",
    "sum_o",
    "sum_ro",
    "trace_ro",
    "validate",
]
