"""The probabilistic modal mu-calculus: syntax, parsing and satisfaction."""

from .formula import (
    FALSE,
    TRUE,
    Box,
    Conj,
    Diamond,
    Disj,
    Down,
    Formula,
    Mu,
    Neg,
    Nu,
    OPlus,
    OPlusW,
    Ref,
    Var,
    conj,
    size,
    substitute,
    walk,
)
from .syntax import EquationSystem, parse_equations, parse_formula, print_equations, print_formula
