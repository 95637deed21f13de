"""Expression language and truncated Taylor-jet arithmetic."""

from .evaluate import FD_STEP, EvaluationError, UnboundParameter, eval_float, eval_jet, evaluate, fd_check
from .expr import (
    FUNCTION_NAMES,
    Add,
    ArityError,
    Call,
    Div,
    Expr,
    ExprError,
    ExprSyntaxError,
    Mul,
    Neg,
    Num,
    Param,
    Pow,
    Sub,
    UnknownIdentifier,
    Var,
    describe,
    parse_expr,
    to_source,
)
from .jet import DEFAULT_ORDER, DomainError, InsufficientOrder, Jet

__all__ = [
    "Add", "ArityError", "Call", "DEFAULT_ORDER", "Div", "DomainError", "EvaluationError", "Expr",
    "ExprError", "ExprSyntaxError", "FD_STEP", "FUNCTION_NAMES", "InsufficientOrder", "Jet", "Mul",
    "Neg", "Num", "Param", "Pow", "Sub", "UnboundParameter", "UnknownIdentifier", "Var", "describe",
    "eval_float", "eval_jet", "evaluate", "fd_check", "parse_expr", "to_source",
]
