"""Predicate-based state/transition models: parsing, execution, planning and PDDL generation."""

from .engine import TransitionStep, apply_transition, eval_computation, state_hash, successors
from .planner import Plan, PlanFailure, ValidationError, find_plan, validate_plan
from .syntax import ParseError, merge_models, parse_model, print_canonical
from .terms import (
    ActionPredicate,
    Compound,
    FunctionCall,
    Lit,
    Model,
    Num,
    Predicate,
    State,
    TransformationRules,
    TransitionSpec,
    Var,
)
from .unify import Substitution, match_precondition, unify

__version__ = "0.1.0"

__all__ = [
    "ActionPredicate",
    "Compound",
    "FunctionCall",
    "Lit",
    "Model",
    "Num",
    "ParseError",
    "Plan",
    "PlanFailure",
    "Predicate",
    "State",
    "Substitution",
    "TransformationRules",
    "TransitionSpec",
    "TransitionStep",
    "ValidationError",
    "Var",
    "apply_transition",
    "eval_computation",
    "find_plan",
    "match_precondition",
    "merge_models",
    "parse_model",
    "print_canonical",
    "state_hash",
    "successors",
    "unify",
    "validate_plan",
]
