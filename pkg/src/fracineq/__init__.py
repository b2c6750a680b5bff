"""fracineq: generalized (map-weighted) fractional integral operators and
desk-scale numerical verification of Hermite-Hadamard / Fejer type
inequalities, midpoint-kernel identities, and derivative-based bounds.

Functions f, g, h enter the system as expression text through ``parse``;
operators are evaluated by weakly singular graded quadrature, and every
derived reference value can be cross-checked with the independent adaptive
oracle ``integrate_adaptive``.
"""

from .errors import (
    EvalDomainError,
    ExpressionError,
    FracineqError,
    HypothesisError,
    NonConvergenceError,
    NonDifferentiableError,
    ParseError,
    UnknownIdentifierError,
)
from .expr import (
    Binary,
    Const,
    Expr,
    FunctionRole,
    Unary,
    Var,
    check_property,
    differentiate,
    evaluate,
    parse,
    to_text,
)
from .fracint import (
    ALPHA_FLOOR,
    FracOrder,
    Interval,
    MonotoneMap,
    NormResult,
    OperatorSpec,
    frac_int_h,
    frac_int_h_direct,
    gamma_fn,
    log_gamma_fn,
    op_left,
    op_right,
    xh_sup_norm,
    xh_sup_norm_weighted,
    xhp_norm,
)
from .hhf import (
    KernelSpec,
    PowerExponent,
    ProblemInstance,
    bound_t1,
    bound_t2,
    bound_t3,
    hh_chain,
    identity_l1,
    identity_l2,
    kernel_l1,
    kernel_l2,
)
from .corpus import CorpusConfig, corpus_instances, run_corpus
from .quad import (
    QuadResult,
    QuadRule,
    composite_gl,
    count_evals,
    gauss_jacobi_rule,
    gauss_legendre_rule,
    integrate,
    integrate_adaptive,
    integrate_singular,
)
from .report import CheckReport, ReportBundle

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "FracineqError",
    "ExpressionError",
    "ParseError",
    "UnknownIdentifierError",
    "EvalDomainError",
    "NonDifferentiableError",
    "HypothesisError",
    "NonConvergenceError",
    # expressions
    "Expr",
    "Const",
    "Var",
    "Unary",
    "Binary",
    "FunctionRole",
    "parse",
    "evaluate",
    "differentiate",
    "to_text",
    "check_property",
    # quadrature
    "QuadRule",
    "QuadResult",
    "gauss_legendre_rule",
    "gauss_jacobi_rule",
    "integrate",
    "integrate_adaptive",
    "integrate_singular",
    "composite_gl",
    "count_evals",
    # fractional operators
    "Interval",
    "FracOrder",
    "MonotoneMap",
    "OperatorSpec",
    "NormResult",
    "ALPHA_FLOOR",
    "gamma_fn",
    "log_gamma_fn",
    "frac_int_h",
    "frac_int_h_direct",
    "op_left",
    "op_right",
    "xhp_norm",
    "xh_sup_norm",
    "xh_sup_norm_weighted",
    # identities, bounds, chains
    "ProblemInstance",
    "PowerExponent",
    "KernelSpec",
    "kernel_l1",
    "kernel_l2",
    "identity_l1",
    "identity_l2",
    "bound_t1",
    "bound_t2",
    "bound_t3",
    "hh_chain",
    # corpus + reports
    "CorpusConfig",
    "corpus_instances",
    "run_corpus",
    "CheckReport",
    "ReportBundle",
]
