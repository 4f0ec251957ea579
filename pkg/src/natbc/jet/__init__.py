"""Symbolic expressions over finite-order jet coordinates."""

from .calculus import (
    diff_partial,
    restrict_to_boundary,
    substitute,
    total_derivative,
    total_derivative_explicit,
    total_derivative_multi,
    variables,
)
from .evaluate import (
    DomainViolation,
    JetPoint,
    SamplingExhausted,
    equivalent,
    evaluate,
    evaluate_many,
    max_discrepancy,
)
from .expr import (
    Constant,
    Dep,
    Expr,
    Indep,
    JetVar,
    Neg,
    Power,
    Product,
    Quotient,
    Sum,
    Unary,
    Var,
    add,
    cos,
    div,
    exp,
    jet_order,
    ln,
    mul,
    neg,
    power,
    sin,
    sqrt,
    unary,
)
from .lagrangian import Lagrangian
from .multiindex import MultiIndex, multi_indices
from .parser import ParseError, parse
from .printer import to_string
from .simplify import simplify
from .space import JetNameError, JetSpace, OrderCapError

__all__ = [
    "Constant", "Dep", "DomainViolation", "Expr", "Indep", "JetNameError", "JetPoint",
    "JetSpace", "JetVar", "Lagrangian", "MultiIndex", "Neg", "OrderCapError", "ParseError",
    "Power", "Product", "Quotient", "SamplingExhausted", "Sum", "Unary", "Var", "add", "cos",
    "diff_partial", "div", "equivalent", "evaluate", "evaluate_many", "exp", "jet_order", "ln",
    "max_discrepancy", "mul", "multi_indices", "neg", "parse", "power", "restrict_to_boundary",
    "simplify", "sin", "sqrt", "substitute", "to_string", "total_derivative",
    "total_derivative_explicit", "total_derivative_multi", "unary", "variables",
]
