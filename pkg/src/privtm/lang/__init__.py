"""The small concurrent language: AST, parser and explorers."""
from .ast import ABORTED_VAL, COMMITTED_VAL, Program, show_value
from .interp import Bounds, ExploreResult, explore, explore_atomic, explore_exact
from .parser import ProgramError, parse_program

__all__ = ["ABORTED_VAL", "COMMITTED_VAL", "Program", "show_value", "Bounds", "ExploreResult",
           "explore", "explore_atomic", "explore_exact", "ProgramError", "parse_program"]
