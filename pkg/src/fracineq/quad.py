"""Quadrature engine.

Three layers, kept deliberately independent of each other:

* classical rules (``gauss_legendre_rule``, ``gauss_jacobi_rule``) built with
  the symmetric-tridiagonal eigenvalue method from the Jacobi-polynomial
  recurrence coefficients (Gautschi's formulation);
* the production path for weakly singular integrands
  (``integrate_singular``): a mesh graded toward the singular endpoint with
  exponent 2/alpha, 16 panels, 15 points per panel — the terminal panel uses
  the Gauss-Jacobi rule, which absorbs the (distance)^(alpha-1) weight
  exactly, and interior panels integrate in the regularizing variable
  v = w^alpha with Gauss-Legendre;
* an adaptive oracle (``integrate_adaptive``) built on the embedded
  7/15-point Gauss-Kronrod pair with hardcoded nodes.  The oracle shares no
  quadrature rule with the production path, so every derived reference value
  can be computed without trusting the code under test.

Rules are immutable and cached read-only after first construction; all
integration functions are pure.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import NonConvergenceError

__all__ = [
    "QuadRule",
    "QuadResult",
    "gauss_legendre_rule",
    "gauss_jacobi_rule",
    "integrate",
    "integrate_adaptive",
    "integrate_singular",
    "composite_gl",
    "count_evals",
]

MAX_RULE_POINTS = 256

#: Graded-mesh defaults for the weakly singular production path.
SINGULAR_PANELS = 16
SINGULAR_ORDER = 15


# ---------------------------------------------------------------------------
# Evaluation tally (used by reports; context-local, so concurrency-safe)
# ---------------------------------------------------------------------------


class _Tally:
    __slots__ = ("n",)

    def __init__(self) -> None:
        self.n = 0


_TALLY: ContextVar[_Tally | None] = ContextVar("fracineq_quad_tally", default=None)


@contextmanager
def count_evals():
    """Count integrand evaluations performed inside the context."""
    tally = _Tally()
    token = _TALLY.set(tally)
    try:
        yield tally
    finally:
        _TALLY.reset(token)


def _note(n: int) -> None:
    tally = _TALLY.get()
    if tally is not None:
        tally.n += int(n)


# ---------------------------------------------------------------------------
# Rules
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class QuadRule:
    """Nodes/weights of a Gaussian rule on its canonical interval.

    ``interval`` is ``"[-1,1]"`` (Legendre) or ``"[0,1]"`` (Jacobi with
    weight (1-s)^(alpha-1)).  Nodes are strictly increasing and interior;
    weights are positive and sum to the integral of the weight function
    (2 for Legendre, 1/alpha for Jacobi).
    """

    nodes: np.ndarray
    weights: np.ndarray
    interval: str
    kind: str
    alpha: float | None = None

    def __post_init__(self) -> None:
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def n(self) -> int:
        return self.nodes.size


@dataclass(frozen=True)
class QuadResult:
    value: float
    error_estimate: float
    evaluations: int

    def __post_init__(self) -> None:
        if not self.error_estimate >= 0.0:
            raise ValueError("error_estimate must be >= 0")
        if self.evaluations <= 0:
            raise ValueError("evaluations must be positive")


def _golub_welsch(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights on [-1,1] for the weight (1-x)^a (1+x)^b."""
    apb = a + b
    diag = np.zeros(n)
    diag[0] = (b - a) / (apb + 2.0)
    k = np.arange(1, n, dtype=float)
    diag[1:] = (b * b - a * a) / ((2.0 * k + apb) * (2.0 * k + apb + 2.0))
    # beta_0 via log-gamma so large orders cannot overflow
    beta0 = math.exp(
        (apb + 1.0) * math.log(2.0)
        + math.lgamma(a + 1.0)
        + math.lgamma(b + 1.0)
        - math.lgamma(apb + 2.0)
    )
    off = np.zeros(max(n - 1, 0))
    if n > 1:
        off2 = (
            4.0
            * k
            * (k + a)
            * (k + b)
            * (k + apb)
            / ((2.0 * k + apb) ** 2 * (2.0 * k + apb + 1.0) * (2.0 * k + apb - 1.0))
        )
        off = np.sqrt(off2)
    jacobi_matrix = np.diag(diag)
    if n > 1:
        jacobi_matrix += np.diag(off, -1) + np.diag(off, 1)
    try:
        nodes, vectors = np.linalg.eigh(jacobi_matrix)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
        raise NonConvergenceError(f"eigenvalue solver failed: {exc}") from exc
    order = np.argsort(nodes)
    nodes = nodes[order]
    weights = beta0 * vectors[0, order] ** 2
    return nodes, weights


def _validate_rule(rule: QuadRule, weight_integral: float) -> QuadRule:
    if not np.all(np.diff(rule.nodes) > 0.0):
        raise NonConvergenceError("rule nodes are not strictly increasing")
    lo, hi = (-1.0, 1.0) if rule.interval == "[-1,1]" else (0.0, 1.0)
    if not (np.all(rule.nodes > lo) and np.all(rule.nodes < hi)):
        raise NonConvergenceError("rule nodes leave the canonical interval")
    if not np.all(rule.weights > 0.0):
        raise NonConvergenceError("rule weights are not all positive")
    total = float(np.sum(rule.weights))
    if abs(total - weight_integral) > 1e-12 * abs(weight_integral):
        raise NonConvergenceError(
            f"rule weights sum to {total!r}, expected {weight_integral!r}"
        )
    return rule


@lru_cache(maxsize=None)
def gauss_legendre_rule(n: int) -> QuadRule:
    """n-point Gauss-Legendre rule on [-1,1]; exact for degree <= 2n-1."""
    if not 1 <= n <= MAX_RULE_POINTS:
        raise ValueError(f"rule size must be in [1, {MAX_RULE_POINTS}], got {n}")
    nodes, weights = _golub_welsch(n, 0.0, 0.0)
    return _validate_rule(QuadRule(nodes, weights, "[-1,1]", "legendre"), 2.0)


@lru_cache(maxsize=None)
def gauss_jacobi_rule(n: int, alpha: float) -> QuadRule:
    """n-point rule on [0,1] for the weight (1-s)^(alpha-1).

    Exact for polynomial integrands of degree <= 2n-1.  Built from the
    Jacobi-polynomial recurrence on [-1,1] with exponents (alpha-1, 0) and
    mapped to [0,1]; the weights then sum to 1/alpha.
    """
    if not 1 <= n <= MAX_RULE_POINTS:
        raise ValueError(f"rule size must be in [1, {MAX_RULE_POINTS}], got {n}")
    if not alpha > 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    nodes, weights = _golub_welsch(n, alpha - 1.0, 0.0)
    nodes01 = 0.5 * (nodes + 1.0)
    weights01 = weights * 2.0**-alpha
    rule = QuadRule(nodes01, weights01, "[0,1]", "jacobi", alpha=alpha)
    return _validate_rule(rule, 1.0 / alpha)


def _bounds(iv) -> tuple[float, float]:
    if hasattr(iv, "a") and hasattr(iv, "b"):
        return float(iv.a), float(iv.b)
    lo, hi = iv
    return float(lo), float(hi)


def _call(f, t):
    vals = f(t)
    _note(np.size(t))
    return np.asarray(vals, dtype=float)


def integrate(f: Callable, iv, rule: QuadRule) -> float:
    """Apply ``rule`` to ``f`` on ``iv`` through the affine map.

    For a Legendre rule this approximates the plain integral of ``f``.  For a
    Jacobi rule the weight maps with the interval, so the result approximates
    the weighted integral of f against (b-u)^(alpha-1) on [a,b]; the Jacobian
    contributes (b-a)^alpha.
    """
    a, b = _bounds(iv)
    if rule.interval == "[-1,1]":
        half = 0.5 * (b - a)
        nodes = 0.5 * (a + b) + half * rule.nodes
        return float(half * np.sum(rule.weights * _call(f, nodes)))
    length = b - a
    nodes = a + length * rule.nodes
    return float(length ** rule.alpha * np.sum(rule.weights * _call(f, nodes)))


# ---------------------------------------------------------------------------
# Adaptive oracle: embedded 7/15-point Gauss-Kronrod pair
# ---------------------------------------------------------------------------

# 15-point Kronrod abscissae on [-1,1] (nonnegative half) and weights, plus
# the weights of the embedded 7-point Gauss rule.  QUADPACK dqk15 constants.
_XGK = np.array(
    [
        0.991455371120812639206854697526329,
        0.949107912342758524526189684047851,
        0.864864423359769072789712788640926,
        0.741531185599394439863864773280788,
        0.586087235467691130294144838258730,
        0.405845151377397166906606412076961,
        0.207784955007898467600689403773245,
        0.000000000000000000000000000000000,
    ]
)
_WGK = np.array(
    [
        0.022935322010529224963732008058970,
        0.063092092629978553290700663189204,
        0.104790010322250183839876322541518,
        0.140653259715525918745189590510238,
        0.169004726639267902826583426598550,
        0.190350578064785409913256402421014,
        0.204432940075298892414161999234649,
        0.209482141084727828012999174891714,
    ]
)
_WG = np.array(
    [
        0.129484966168869693270611432679082,
        0.279705391489276667901467771423780,
        0.381830050505118944950369775488975,
        0.417959183673469387755102040816327,
    ]
)

_KRONROD_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])  # 15 ascending nodes
_KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS_WEIGHTS = np.zeros(15)
_GAUSS_WEIGHTS[1:15:2] = np.concatenate([_WG[:-1], _WG[::-1][:4]])
# indices 1,3,5,7,9,11,13 are the embedded Gauss-7 nodes


def _kronrod_panel(f, lo: float, hi: float) -> tuple[float, float]:
    half = 0.5 * (hi - lo)
    nodes = 0.5 * (lo + hi) + half * _KRONROD_NODES
    vals = _call(f, nodes)
    k15 = half * float(np.sum(_KRONROD_WEIGHTS * vals))
    g7 = half * float(np.sum(_GAUSS_WEIGHTS * vals))
    return k15, abs(k15 - g7)


class _Budget:
    __slots__ = ("limit", "spent", "value", "estimate")

    def __init__(self, limit: int):
        self.limit = limit
        self.spent = 0
        self.value = 0.0
        self.estimate = 0.0

    def spend(self, n: int) -> None:
        self.spent += n
        if self.spent > self.limit:
            raise NonConvergenceError(
                "adaptive quadrature exceeded its evaluation budget",
                value=self.value,
                error_estimate=max(self.estimate, 1e-300),
                evaluations=self.spent,
            )


_CHAIN_MAX = 42


def _endpoint_chain(
    f, endpoint: float, inner: float, tol: float, budget: _Budget
) -> tuple[float, float]:
    """Integrate between ``endpoint`` and ``inner`` with panels shrinking
    geometrically toward ``endpoint``, extrapolating the unreached tail from
    the measured panel ratio.

    For an integrable algebraic endpoint singularity the panel contributions
    form a near-geometric sequence, so the measured-ratio tail (an Aitken
    step on the partial sums) converges far past what plain bisection can
    reach in double precision; for a smooth endpoint the ratio is 1/2 and
    the chain terminates after a few panels.
    """
    width = abs(inner - endpoint)
    sgn = 1.0 if inner > endpoint else -1.0
    terms: list[float] = []
    rule_err = 0.0
    value_so_far = 0.0
    floor = 64.0 * np.finfo(float).eps * (abs(endpoint) + width)

    def tails() -> tuple[float, float] | None:
        if len(terms) < 3:
            return None
        c0, c1, c2 = terms[-3], terms[-2], terms[-1]
        if c0 == 0.0 or c1 == 0.0:
            return None
        r1 = c2 / c1
        r2 = c1 / c0
        if not (0.0 < r1 < 0.99 and 0.0 < r2 < 0.99):
            return None
        t_now = c2 * r1 / (1.0 - r1)
        t_prev = c2 * r2 / (1.0 - r2)
        return t_now, abs(t_now - t_prev)

    for k in range(_CHAIN_MAX):
        hi_off = width * 0.5**k
        lo_off = width * 0.5 ** (k + 1)
        lo = endpoint + sgn * lo_off
        hi = endpoint + sgn * hi_off
        if lo > hi:
            lo, hi = hi, lo
        k15, err = _kronrod_panel(f, lo, hi)
        budget.spend(15)
        terms.append(k15)
        rule_err += err
        value_so_far += k15
        budget.value += k15
        budget.estimate += err
        est = tails()
        if lo_off <= floor:
            break
        if abs(k15) <= 0.03 * tol and k >= 3:
            break
        if k >= 6 and est is not None and est[1] <= 0.02 * tol and rule_err <= 0.2 * tol:
            break
    est = tails()
    if est is not None:
        tail, tail_err = est
    else:
        # no usable geometric signature: charge the unknown tail to the
        # estimate, scaled by the last computed term
        tail = terms[-1]
        tail_err = 4.0 * abs(terms[-1])
    budget.value += tail
    budget.estimate += tail_err
    return value_so_far + tail, rule_err + tail_err


def integrate_adaptive(
    f: Callable, iv, tol: float, budget: int = 10_000_000
) -> QuadResult:
    """Adaptive bisection with the embedded Gauss pair (7 inside 15 points).

    The two regions adjacent to the endpoints are integrated by geometric
    chains with tail extrapolation (see ``_endpoint_chain``), which is what
    lets integrable endpoint singularities converge to near the requested
    tolerance; the interior splits until the local error estimate is below
    ``tol`` times the panel's length fraction, so the accumulated estimate
    stays below ``tol``.  Endpoints are never sampled (all nodes interior).
    Exceeding ``budget`` evaluations raises ``NonConvergenceError`` carrying
    the best value and estimate reached.
    """
    a, b = _bounds(iv)
    if not tol >= 1e-13:
        raise ValueError(f"tol must be >= 1e-13, got {tol}")
    if not b > a:
        raise ValueError(f"invalid interval [{a}, {b}]")
    total = b - a
    state = _Budget(budget)
    cut = total / 8.0
    left_v, left_e = _endpoint_chain(f, a, a + cut, tol, state)
    right_v, right_e = _endpoint_chain(f, b, b - cut, tol, state)
    value = left_v + right_v
    estimate = left_e + right_e
    stack: list[tuple[float, float]] = [(a + cut, b - cut)]
    while stack:
        lo, hi = stack.pop()
        k15, err = _kronrod_panel(f, lo, hi)
        state.spend(15)
        width = hi - lo
        floor = 8.0 * np.finfo(float).eps * max(abs(lo), abs(hi))
        if err <= 0.5 * tol * (width / total) or width <= floor:
            value += k15
            estimate += err
            state.value += k15
            state.estimate += err
            continue
        mid = 0.5 * (lo + hi)
        stack.append((lo, mid))
        stack.append((mid, hi))
    return QuadResult(
        value=value, error_estimate=max(estimate, 1e-300), evaluations=state.spent
    )


# ---------------------------------------------------------------------------
# Production path for power-law singular integrands
# ---------------------------------------------------------------------------


def power_nodes(length, beta: float, panels: int = SINGULAR_PANELS, order: int = SINGULAR_ORDER):
    """Nodes (distances from the singular end) and weights approximating
    the weighted integral of w^(beta-1) phi(w) over [0, length].

    ``length`` may be an array; the returned arrays have shape
    ``length.shape + (panels*order,)``.  The mesh is graded with exponent
    2/beta; the terminal panel is the exact Gauss-Jacobi rule; interior
    panels use Gauss-Legendre in the regularized variable v = w^beta.
    """
    if not beta > 0.0:
        raise ValueError(f"power-law exponent must be positive, got {beta}")
    length = np.asarray(length, dtype=float)
    jac = gauss_jacobi_rule(order, beta)
    leg = gauss_legendre_rule(order)
    frac = (np.arange(panels + 1) / panels) ** (2.0 / beta)
    d = length[..., None] * frac  # (..., panels+1)
    d1 = d[..., 1:2]
    nodes_sing = d1 * (1.0 - jac.nodes)
    weights_sing = d1**beta * jac.weights
    v = d**beta
    lo = v[..., 1:-1, None]
    hi = v[..., 2:, None]
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    vn = mid + half * leg.nodes
    nodes_int = vn ** (1.0 / beta)
    weights_int = half * leg.weights / beta
    flat = nodes_int.shape[:-2] + (-1,)
    nodes = np.concatenate([nodes_sing, nodes_int.reshape(flat)], axis=-1)
    weights = np.concatenate([weights_sing, weights_int.reshape(flat)], axis=-1)
    return nodes, weights


def power_nodes_between(w_lo, w_hi, beta: float, panels: int = 8, order: int = SINGULAR_ORDER):
    """Nodes/weights for the integral of w^(beta-1) phi(w) over [w_lo, w_hi]
    with w_lo > 0 (no singularity inside): Gauss-Legendre in v = w^beta."""
    if not beta > 0.0:
        raise ValueError(f"power-law exponent must be positive, got {beta}")
    w_lo = np.asarray(w_lo, dtype=float)
    w_hi = np.asarray(w_hi, dtype=float)
    leg = gauss_legendre_rule(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    v_lo = w_lo[..., None] ** beta
    v_hi = w_hi[..., None] ** beta
    v_edges = v_lo + (v_hi - v_lo) * edges  # (..., panels+1)
    lo = v_edges[..., :-1, None]
    hi = v_edges[..., 1:, None]
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    vn = mid + half * leg.nodes
    nodes = vn ** (1.0 / beta)
    weights = half * leg.weights / beta
    flat = nodes.shape[:-2] + (-1,)
    return nodes.reshape(flat), weights.reshape(flat)


def plain_nodes(a, b, panels: int = 8, order: int = SINGULAR_ORDER):
    """Composite Gauss-Legendre nodes/weights on [a, b] (arrays allowed),
    with smoothstep clustering toward both endpoints."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    leg = gauss_legendre_rule(order)
    xi = np.arange(panels + 1) / panels
    sm = xi * xi * (3.0 - 2.0 * xi)
    edges = a[..., None] + (b - a)[..., None] * sm
    lo = edges[..., :-1, None]
    hi = edges[..., 1:, None]
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    nodes = mid + half * leg.nodes
    weights = half * leg.weights
    flat = nodes.shape[:-2] + (-1,)
    return nodes.reshape(flat), weights.reshape(flat)


def composite_gl(f: Callable, iv, panels: int = 8, order: int = SINGULAR_ORDER) -> float:
    """Plain integral of a smooth function by composite Gauss-Legendre."""
    a, b = _bounds(iv)
    nodes, weights = plain_nodes(a, b, panels, order)
    return float(np.sum(weights * _call(f, nodes)))


def integrate_singular(f: Callable, iv, alpha: float, singular_end: str) -> float:
    """Weighted integral of (distance to singular_end)^(alpha-1) times the
    smooth factor ``f`` over ``iv``.

    ``f`` receives actual coordinates (not distances).  For alpha >= 1 the
    weight is continuous and the composite Legendre panels dominate; for
    0 < alpha < 1 the terminal Jacobi panel absorbs the singularity exactly.
    """
    a, b = _bounds(iv)
    if singular_end not in ("left", "right"):
        raise ValueError(f"singular_end must be 'left' or 'right', got {singular_end!r}")
    if not alpha > 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    w, weights = power_nodes(b - a, alpha)
    t = a + w if singular_end == "left" else b - w
    return float(np.sum(weights * _call(f, t)))
