"""PDDL generation, checking and external-solver cross-validation."""

from .check import PddlCheckError, check_domain, check_pair, check_problem
from .compile import MappingError, PddlArtifact, compile_domain, compile_problem, generate
from .external import Divergence, cross_validate, parse_plan_output, run_solver

__all__ = [
    "Divergence",
    "MappingError",
    "PddlArtifact",
    "PddlCheckError",
    "check_domain",
    "check_pair",
    "check_problem",
    "compile_domain",
    "compile_problem",
    "cross_validate",
    "generate",
    "parse_plan_output",
    "run_solver",
]
