"""Probabilistic (bi)simulation checking and characteristic formulae in pMu."""

from .charform import CharSystem, char_equations, char_formula, state_var, transform_to_formula
from .dist import Dist, DistributionError, convex_combine, format_dist, parse_dist
from .kinds import RelationKind
from .lifting import StateDistRelation, StateRelation, WeightFunction, lift_check, lift_check_equivalence, lift_check_sd
from .logic import EquationSystem, parse_equations, parse_formula, print_equations, print_formula
from .logic.semantics import FragmentError, FragmentSpec, check_postfixpoint, greatest_solution, nu_membership, satisfies
from .plts import PLTS, TAU, DivergenceError, ParseError, detect_divergence, parse_plts, refuses, serialize_plts
from .polyhedra import CapExceeded
from .relations import check_sd_relation, compute_relation, compute_sd_relation, distinguish
from .weak import refusal_reachable, strong_successors, weak_successors

__all__ = [
    "CapExceeded",
    "CharSystem",
    "Dist",
    "DistributionError",
    "DivergenceError",
    "EquationSystem",
    "FragmentError",
    "FragmentSpec",
    "PLTS",
    "ParseError",
    "RelationKind",
    "StateDistRelation",
    "StateRelation",
    "TAU",
    "WeightFunction",
    "char_equations",
    "char_formula",
    "check_postfixpoint",
    "check_sd_relation",
    "compute_relation",
    "compute_sd_relation",
    "convex_combine",
    "detect_divergence",
    "distinguish",
    "format_dist",
    "greatest_solution",
    "lift_check",
    "lift_check_equivalence",
    "lift_check_sd",
    "nu_membership",
    "parse_dist",
    "parse_equations",
    "parse_formula",
    "parse_plts",
    "print_equations",
    "print_formula",
    "refusal_reachable",
    "refuses",
    "satisfies",
    "serialize_plts",
    "state_var",
    "strong_successors",
    "transform_to_formula",
    "weak_successors",
]
