"""Influence diagrams and decision trees."""
from .model import (
    PROB_TOL,
    ChanceNode,
    DecisionNode,
    InfluenceDiagram,
    InvalidDiagramError,
    UtilityTable,
    ValidationReport,
    Violation,
    validate_diagram,
)
from .oracle import DEFAULT_STATE_CAP, StateSpaceError, enumerate_policies
from .tree import (
    Chance,
    Decision,
    DecisionTree,
    Evaluation,
    MalformedTreeError,
    Terminal,
    compile_to_tree,
    evaluate_diagram,
    fold_back,
)

__all__ = [
    "PROB_TOL",
    "DEFAULT_STATE_CAP",
    "Chance",
    "ChanceNode",
    "Decision",
    "DecisionNode",
    "DecisionTree",
    "Evaluation",
    "InfluenceDiagram",
    "InvalidDiagramError",
    "MalformedTreeError",
    "StateSpaceError",
    "Terminal",
    "UtilityTable",
    "ValidationReport",
    "Violation",
    "compile_to_tree",
    "enumerate_policies",
    "evaluate_diagram",
    "fold_back",
    "validate_diagram",
]
