"""Rational identifiability of linear structural equation models.

Decides, for an acyclic mixed graph, whether every edge coefficient and
error covariance is a rational function of the observed covariance matrix,
using Gröbner bases truncated at a weighted degree bound.
"""

from .graphmodel import (
    GraphError,
    MixedGraph,
    enumerate_graphs,
    load_graph,
    longest_path_lengths,
    random_graph,
    tian_decompose,
    trek_weights,
    validate,
)
from .groebner import Budget, EffortExceeded, buchberger_full, buchberger_truncated, normal_form
from .ident import (
    IdentificationReport,
    IdentifyingFormula,
    algorithm1,
    build_ideal,
    detect_identifying,
    garcia_puente,
    recover_omega,
    sigma_polynomials,
    substitute_formula_chain,
    treks_enumerate,
)
from .polyring import MonomialOrder, Polynomial, VariableTable
from .verify import check_formulas, covariance_exact, sample_params

__version__ = "0.1.0"

__all__ = [
    "Budget",
    "EffortExceeded",
    "GraphError",
    "IdentificationReport",
    "IdentifyingFormula",
    "MixedGraph",
    "MonomialOrder",
    "Polynomial",
    "VariableTable",
    "algorithm1",
    "buchberger_full",
    "buchberger_truncated",
    "build_ideal",
    "check_formulas",
    "covariance_exact",
    "detect_identifying",
    "enumerate_graphs",
    "garcia_puente",
    "load_graph",
    "longest_path_lengths",
    "normal_form",
    "random_graph",
    "recover_omega",
    "sample_params",
    "sigma_polynomials",
    "substitute_formula_chain",
    "tian_decompose",
    "trek_weights",
    "treks_enumerate",
    "validate",
]
