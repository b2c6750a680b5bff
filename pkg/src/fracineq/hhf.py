"""Midpoint kernels, integration-by-parts identities, derivative-based
bounds, and the three-term mean-value chains.

Everything is organized around a ``ProblemInstance`` (integrand f, weight g,
monotone map h, interval, order alpha, power-mean exponent q).  With
A = h(a), B = h(b), M = h((a+b)/2) and G(u) = g(h^{-1}(u)), every kernel and
identity lives in u = h(t) space, where the kernels are primitives of
power-law weights:

* lemma-1 kernel:  K(u) = integral_A^u (v-A)^(alpha-1) G dv on the lower
  half, and the (negative) backward integral from B on the upper half;
* lemma-2 kernel:  same split with the three-term integrand
  (B-A)^(alpha-1) - (B-v)^(alpha-1) + (v-A)^(alpha-1) (lower half) and its
  mirror image (upper half).

The identities equate an operator-side combination (computed through
``frac_int_h``) with the kernel-weighted integral of f'(u); the Stieltjes
measure df(h(t)) is realized as f'(h(t)) h'(t) dt, valid under the
differentiability hypothesis that ``ProblemInstance`` enforces.  The two
sides share no quadrature layout beyond the rule constructors, so a residual
below tolerance is a genuine cross-check.

Pure evaluators over immutable instances; results are deterministic and
independent of scheduling.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from . import expr as ex
from . import quad
from .errors import HypothesisError, NonDifferentiableError
from .fracint import (
    FracOrder,
    Interval,
    MonotoneMap,
    frac_int_h,
    gamma_fn,
    op_left,
    op_right,
    xh_sup_norm,
    xh_sup_norm_weighted,
)
from .report import CheckReport

__all__ = [
    "PowerExponent",
    "ProblemInstance",
    "KernelSpec",
    "kernel_l1",
    "kernel_l2",
    "identity_l1",
    "identity_l2",
    "bound_t1",
    "bound_t2",
    "bound_t3",
    "hh_chain",
    "IDENTITY_RTOL",
    "BOUND_TOL",
    "CHAIN_TOL",
]

#: Default tolerances: identities are relative (scaled by 1 + |lhs|), bounds
#: accept slack >= -BOUND_TOL, chains require ordering within CHAIN_TOL.
#: Budgeted at roughly 100x the quadrature accuracy; configurable per call.
IDENTITY_RTOL = 1e-7
BOUND_TOL = 1e-9
CHAIN_TOL = 1e-10


@dataclass(frozen=True)
class PowerExponent:
    """The exponent q >= 1 of the power-mean bound."""

    q: float

    def __post_init__(self) -> None:
        if not self.q >= 1.0:
            raise HypothesisError(f"power-mean exponent must be >= 1, got {self.q}")


@dataclass(frozen=True)
class ProblemInstance:
    """One fully validated (f, g, h, [a,b], alpha, q) tuple."""

    f: ex.Expr
    g: ex.Expr
    mapping: MonotoneMap
    iv: Interval
    order: FracOrder
    q: float = 1.0
    label: str = field(default="", compare=False)

    @classmethod
    def build(
        cls,
        f: ex.Expr | str,
        g: ex.Expr | str = "1",
        h: ex.Expr | str = "x",
        a: float = 0.0,
        b: float = 1.0,
        alpha: float = 1.0,
        q: float = 1.0,
        label: str = "",
    ) -> "ProblemInstance":
        f_expr = ex.parse(f) if isinstance(f, str) else f
        g_expr = ex.parse(g) if isinstance(g, str) else g
        h_expr = ex.parse(h) if isinstance(h, str) else h
        iv = Interval(float(a), float(b))
        try:
            ex.differentiate(f_expr)
        except NonDifferentiableError as exc:
            raise HypothesisError(f"integrand must be differentiable: {exc}") from exc
        mapping = MonotoneMap.validated(h_expr, iv)
        # g must be evaluable on the interval; probe the property grid
        ex.evaluate(g_expr, np.linspace(iv.a, iv.b, 257))
        return cls(
            f=f_expr,
            g=g_expr,
            mapping=mapping,
            iv=iv,
            order=FracOrder(float(alpha)),
            q=PowerExponent(float(q)).q,
            label=label,
        )

    def describe(self) -> str:
        return (
            f"f={ex.to_text(self.f)}; g={ex.to_text(self.g)}; "
            f"h={ex.to_text(self.mapping.h)}; alpha={self.order.alpha:g}; "
            f"iv=[{self.iv.a:g},{self.iv.b:g}]; q={self.q:g}"
        )

    @property
    def instance_id(self) -> str:
        return self.label or self.describe()


@dataclass(frozen=True)
class KernelSpec:
    """Selects one of the two midpoint kernels over a problem instance.
    Both kernels split exactly at the interval midpoint."""

    which: str  # 'lemma1' | 'lemma2'
    instance: ProblemInstance

    def __post_init__(self) -> None:
        if self.which not in ("lemma1", "lemma2"):
            raise HypothesisError(f"unknown kernel {self.which!r}")


# ---------------------------------------------------------------------------
# u-space frame and running integrals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Frame:
    a: float
    b: float
    mid: float
    A: float
    B: float
    M: float
    D: float
    alpha: float
    gam: float


def _frame(inst: ProblemInstance) -> _Frame:
    a, b = inst.iv.a, inst.iv.b
    mid = inst.iv.midpoint
    m = inst.mapping
    A = float(m.value(a))
    B = float(m.value(b))
    M = float(m.value(mid))
    alpha = inst.order.alpha
    return _Frame(a, b, mid, A, B, M, B - A, alpha, gamma_fn(alpha))


def _weight_u(inst: ProblemInstance) -> Callable:
    """G(u) = g(h^{-1}(u))."""
    g, m = inst.g, inst.mapping
    if m.is_identity:
        return lambda u: ex.evaluate(g, u)
    return lambda u: ex.evaluate(g, m.inverse(u))


def _weight_f_u(inst: ProblemInstance) -> Callable:
    """G(u) * f(u); the u-space form of g * (f o h)."""
    G = _weight_u(inst)
    f = inst.f
    return lambda u: np.asarray(G(u)) * np.asarray(ex.evaluate(f, u))


def _g_times_f_of_h(inst: ProblemInstance) -> Callable:
    """t-space integrand g(t) * f(h(t)) for the operator-side pieces."""
    f, g, m = inst.f, inst.g, inst.mapping
    return lambda t: np.asarray(ex.evaluate(g, t)) * np.asarray(
        ex.evaluate(f, ex.evaluate(m.h, t))
    )


def _run_sing_left(G: Callable, A: float, us: np.ndarray, alpha: float) -> np.ndarray:
    """integral_A^{u_i} (v - A)^(alpha-1) G(v) dv, batched over u_i."""
    w, ww = quad.power_nodes(np.maximum(np.asarray(us, float) - A, 0.0), alpha)
    return np.sum(ww * np.asarray(G(A + w)), axis=-1)


def _run_sing_right(G: Callable, us: np.ndarray, B: float, alpha: float) -> np.ndarray:
    """integral_{u_i}^B (B - v)^(alpha-1) G(v) dv, batched over u_i."""
    w, ww = quad.power_nodes(np.maximum(B - np.asarray(us, float), 0.0), alpha)
    return np.sum(ww * np.asarray(G(B - w)), axis=-1)


def _run_far_right(G: Callable, A: float, us: np.ndarray, B: float, alpha: float) -> np.ndarray:
    """integral_A^{u_i} (B - v)^(alpha-1) G(v) dv; the weight's singular
    point B lies outside the range, so the Legendre panels suffice."""
    us = np.asarray(us, float)
    w, ww = quad.power_nodes_between(B - us, np.full_like(us, B - A), alpha)
    return np.sum(ww * np.asarray(G(B - w)), axis=-1)


def _run_far_left(G: Callable, us: np.ndarray, B: float, A: float, alpha: float) -> np.ndarray:
    """integral_{u_i}^B (v - A)^(alpha-1) G(v) dv (A outside the range)."""
    us = np.asarray(us, float)
    w, ww = quad.power_nodes_between(us - A, np.full_like(us, B - A), alpha)
    return np.sum(ww * np.asarray(G(A + w)), axis=-1)


def _run_plain_from(G: Callable, lo: float, us: np.ndarray) -> np.ndarray:
    """integral_lo^{u_i} G, batched."""
    us = np.asarray(us, float)
    nodes, wts = quad.plain_nodes(np.full_like(us, lo), us)
    return np.sum(wts * np.asarray(G(nodes)), axis=-1)


def _run_plain_to(G: Callable, us: np.ndarray, hi: float) -> np.ndarray:
    us = np.asarray(us, float)
    nodes, wts = quad.plain_nodes(us, np.full_like(us, hi))
    return np.sum(wts * np.asarray(G(nodes)), axis=-1)


def _scalar(fn: Callable, u: float) -> float:
    return float(fn(np.asarray([u]))[0])


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


def _require_inside(inst: ProblemInstance, t: float) -> None:
    if not inst.iv.contains(t):
        raise HypothesisError(
            f"kernel argument {t} outside [{inst.iv.a}, {inst.iv.b}]"
        )


def kernel_l1(ks: KernelSpec, t: float) -> float:
    """First midpoint kernel.

    For t <= (a+b)/2 this is the forward weighted integral from a; beyond
    the midpoint it is the backward integral from b and hence negative.
    """
    inst = ks.instance
    _require_inside(inst, t)
    fr = _frame(inst)
    G = _weight_u(inst)
    u = float(inst.mapping.value(t))
    if t <= fr.mid:
        return _scalar(lambda z: _run_sing_left(G, fr.A, z, fr.alpha), u)
    return -_scalar(lambda z: _run_sing_right(G, z, fr.B, fr.alpha), u)


def kernel_l2(ks: KernelSpec, t: float) -> float:
    """Second midpoint kernel (three-term integrand, both branches).

    The upper branch includes the constant (B-A)^(alpha-1) term with a plus
    sign, matching the integration-by-parts bookkeeping of the identity it
    feeds (see ``identity_l2``).
    """
    inst = ks.instance
    _require_inside(inst, t)
    fr = _frame(inst)
    G = _weight_u(inst)
    dpow = fr.D ** (fr.alpha - 1.0)
    u = float(inst.mapping.value(t))
    if t <= fr.mid:
        sing = _scalar(lambda z: _run_sing_left(G, fr.A, z, fr.alpha), u)
        far = _scalar(lambda z: _run_far_right(G, fr.A, z, fr.B, fr.alpha), u)
        plain = _scalar(lambda z: _run_plain_from(G, fr.A, z), u)
        return dpow * plain - far + sing
    sing = _scalar(lambda z: _run_sing_right(G, z, fr.B, fr.alpha), u)
    far = _scalar(lambda z: _run_far_left(G, z, fr.B, fr.A, fr.alpha), u)
    plain = _scalar(lambda z: _run_plain_to(G, z, fr.B), u)
    return -(sing - far + dpow * plain)


# ---------------------------------------------------------------------------
# Identity checks
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _lhs_l1_cached(f, g, mapping, iv, order):
    inst = ProblemInstance(f=f, g=g, mapping=mapping, iv=iv, order=order)
    fr = _frame(inst)
    f_at_m = float(ex.evaluate(f, fr.M))
    gf = _g_times_f_of_h(inst)
    j_g_lower = frac_int_h(op_right(mapping, order, fr.a, fr.mid), g, fr.a)
    j_g_upper = frac_int_h(op_left(mapping, order, fr.mid, fr.b), g, fr.b)
    j_gf_lower = frac_int_h(op_right(mapping, order, fr.a, fr.mid), gf, fr.a)
    j_gf_upper = frac_int_h(op_left(mapping, order, fr.mid, fr.b), gf, fr.b)
    lhs = f_at_m * (j_g_lower + j_g_upper) - (j_gf_lower + j_gf_upper)
    pieces = {
        "J_mid_minus_g": j_g_lower,
        "J_mid_plus_g": j_g_upper,
        "J_mid_minus_gf": j_gf_lower,
        "J_mid_plus_gf": j_gf_upper,
        "f_at_h_mid": f_at_m,
    }
    return lhs, pieces


def _lhs_l1(inst: ProblemInstance):
    return _lhs_l1_cached(inst.f, inst.g, inst.mapping, inst.iv, inst.order)


def _rhs_l1(inst: ProblemInstance) -> float:
    fr = _frame(inst)
    G = _weight_u(inst)
    fp = ex.differentiate(inst.f)
    # lower half: the kernel is (u-A)^alpha times an analytic factor, so the
    # outer integral is a power-law integral of exponent alpha+1
    w, ww = quad.power_nodes(fr.M - fr.A, fr.alpha + 1.0)
    u = fr.A + w
    kern = _run_sing_left(G, fr.A, u, fr.alpha)
    lower = float(np.sum(ww * kern * np.asarray(ex.evaluate(fp, u)) / w**fr.alpha))
    # upper half: kernel = -(B-u)^alpha * analytic
    w, ww = quad.power_nodes(fr.B - fr.M, fr.alpha + 1.0)
    u = fr.B - w
    kern = _run_sing_right(G, u, fr.B, fr.alpha)
    upper = -float(np.sum(ww * kern * np.asarray(ex.evaluate(fp, u)) / w**fr.alpha))
    return (lower + upper) / fr.gam


def identity_l1(inst: ProblemInstance, rel_tol: float = IDENTITY_RTOL) -> CheckReport:
    """Residual check of the first midpoint identity.

    LHS: f(h(mid)) [J_mid- g(h(a)) + J_mid+ g(h(b))]
         - [J_mid- (g (f o h))(a) + J_mid+ (g (f o h))(b)],
    computed through the operator surface.  RHS: (1/Gamma(alpha)) times the
    kernel-weighted integral of f'(h(t)) h'(t).
    """
    start = time.perf_counter()
    with quad.count_evals() as tally:
        lhs, pieces = _lhs_l1(inst)
        rhs = _rhs_l1(inst)
    residual = abs(lhs - rhs)
    tol = rel_tol * (1.0 + abs(lhs))
    return CheckReport(
        check="identity-l1",
        passed=bool(residual <= tol),
        tol=tol,
        lhs=lhs,
        rhs=rhs,
        residual=residual,
        hypothesis={"monotone_h": True, "differentiable_f": True},
        instance=inst.instance_id,
        evals=tally.n,
        seconds=time.perf_counter() - start,
        details={"description": inst.describe(), **pieces},
    )


@lru_cache(maxsize=None)
def _lhs_l2_cached(f, g, mapping, iv, order):
    inst = ProblemInstance(f=f, g=g, mapping=mapping, iv=iv, order=order)
    fr = _frame(inst)
    dpow = fr.D ** (fr.alpha - 1.0)
    out: dict[str, float] = {}
    totals = []
    for tag, fn in (("g", _weight_u(inst)), ("gf", _weight_f_u(inst))):
        x1 = _scalar(lambda z: _run_sing_left(fn, fr.A, z, fr.alpha), fr.M)
        x2 = _scalar(lambda z: _run_sing_right(fn, z, fr.B, fr.alpha), fr.M)
        y1 = _scalar(lambda z: _run_far_right(fn, fr.A, z, fr.B, fr.alpha), fr.M)
        y2 = _scalar(lambda z: _run_far_left(fn, z, fr.B, fr.A, fr.alpha), fr.M)
        z1 = _scalar(lambda z: _run_plain_from(fn, fr.A, z), fr.M)
        z2 = _scalar(lambda z: _run_plain_to(fn, z, fr.B), fr.M)
        total = (x1 - y1 + dpow * z1) + (x2 - y2 + dpow * z2)
        totals.append(total / fr.gam)
        out[f"J_mid_minus_{tag}"] = x1 / fr.gam
        out[f"J_mid_plus_{tag}"] = x2 / fr.gam
        out[f"J_a_plus_{tag}_full"] = (y1 + x2) / fr.gam
        out[f"J_b_minus_{tag}_full"] = (x1 + y2) / fr.gam
        out[f"correction_{tag}"] = dpow * (z1 + z2) / fr.gam
    c_term, d_term = totals
    f_at_m = float(ex.evaluate(f, fr.M))
    lhs = f_at_m * c_term - d_term
    out["C"] = c_term
    out["D"] = d_term
    out["f_at_h_mid"] = f_at_m
    # the same pieces combined with full-interval operator meanings, kept for
    # term-by-term reconciliation with the identity's display form
    out["display_bracket_lhs"] = f_at_m * (
        -out["J_a_plus_g_full"]
        - out["J_b_minus_g_full"]
        + out["J_mid_plus_g"]
        + out["J_mid_minus_g"]
        + out["correction_g"]
    ) + (
        out["J_a_plus_gf_full"]
        + out["J_b_minus_gf_full"]
        - out["J_mid_plus_gf"]
        - out["J_mid_minus_gf"]
        - out["correction_gf"]
    )
    return lhs, out


def _lhs_l2(inst: ProblemInstance):
    return _lhs_l2_cached(inst.f, inst.g, inst.mapping, inst.iv, inst.order)


def _rhs_l2(inst: ProblemInstance) -> float:
    fr = _frame(inst)
    G = _weight_u(inst)
    fp = ex.differentiate(inst.f)
    dpow = fr.D ** (fr.alpha - 1.0)

    # lower half: singular kernel component via the power-law outer integral,
    # smooth components via clustered Legendre panels
    w, ww = quad.power_nodes(fr.M - fr.A, fr.alpha + 1.0)
    u = fr.A + w
    kern = _run_sing_left(G, fr.A, u, fr.alpha)
    lower_sing = float(np.sum(ww * kern * np.asarray(ex.evaluate(fp, u)) / w**fr.alpha))
    un, uw = quad.plain_nodes(fr.A, fr.M)
    smooth = dpow * _run_plain_from(G, fr.A, un) - _run_far_right(G, fr.A, un, fr.B, fr.alpha)
    lower_smooth = float(np.sum(uw * smooth * np.asarray(ex.evaluate(fp, un))))

    # upper half (kernel negative: backward integral from b)
    w, ww = quad.power_nodes(fr.B - fr.M, fr.alpha + 1.0)
    u = fr.B - w
    kern = _run_sing_right(G, u, fr.B, fr.alpha)
    upper_sing = -float(np.sum(ww * kern * np.asarray(ex.evaluate(fp, u)) / w**fr.alpha))
    un, uw = quad.plain_nodes(fr.M, fr.B)
    smooth = _run_far_left(G, un, fr.B, fr.A, fr.alpha) - dpow * _run_plain_to(G, un, fr.B)
    upper_smooth = float(np.sum(uw * smooth * np.asarray(ex.evaluate(fp, un))))

    return (lower_sing + lower_smooth + upper_sing + upper_smooth) / fr.gam


def identity_l2(inst: ProblemInstance, rel_tol: float = IDENTITY_RTOL) -> CheckReport:
    """Residual check of the second midpoint identity, consolidated form.

    LHS: f(h(mid)) * C - D with
        C = (1/Gamma(alpha)) integral of kappa(s) g(s) h'(s) over [a,b],
        D = (1/Gamma(alpha)) integral of kappa(t) g(t) f(h(t)) h'(t),
    kappa being the branchwise three-term integrand of ``kernel_l2``.
    RHS: (1/Gamma(alpha)) times the kernel_l2-weighted integral of
    f'(h(t)) h'(t).  The report's details carry the named operator pieces
    (half-interval, full-interval, and the constant-weight corrections) so
    the consolidated form can be reconciled term by term.
    """
    start = time.perf_counter()
    with quad.count_evals() as tally:
        lhs, pieces = _lhs_l2(inst)
        rhs = _rhs_l2(inst)
    residual = abs(lhs - rhs)
    tol = rel_tol * (1.0 + abs(lhs))
    return CheckReport(
        check="identity-l2",
        passed=bool(residual <= tol),
        tol=tol,
        lhs=lhs,
        rhs=rhs,
        residual=residual,
        hypothesis={"monotone_h": True, "differentiable_f": True},
        instance=inst.instance_id,
        evals=tally.n,
        seconds=time.perf_counter() - start,
        details={"description": inst.describe(), **pieces},
    )


# ---------------------------------------------------------------------------
# Bounds
# ---------------------------------------------------------------------------


def _convexity_gate(inst: ProblemInstance, power: float) -> tuple[bool, ex.Expr]:
    """Grid-check convexity of |f'|^power on the h-value range [A, B], the
    segment on which the bounds' convex-combination step operates."""
    fr = _frame(inst)
    fp = ex.differentiate(inst.f)
    probe: ex.Expr = ex.Unary("abs", fp)
    if power != 1.0:
        probe = ex.Binary("^", probe, ex.Const(power))
    report = ex.check_property(probe, (fr.A, fr.B), "convex")
    return report.passed, fp


def _skipped(check: str, inst: ProblemInstance, hyp: dict, tol: float, started: float) -> CheckReport:
    return CheckReport(
        check=check,
        passed=False,
        skipped=True,
        tol=tol,
        hypothesis=hyp,
        instance=inst.instance_id,
        seconds=time.perf_counter() - started,
        details={"description": inst.describe()},
    )


def _half_sups(inst: ProblemInstance) -> tuple[float, float, dict[str, float]]:
    """Plain sup of |g| on each half interval; the h-weighted variants are
    reported alongside but the bounds' pass/fail uses the plain sup."""
    fr = _frame(inst)
    lower = Interval(fr.a, fr.mid)
    upper = Interval(fr.mid, fr.b)
    s1 = xh_sup_norm(inst.g, lower).value
    s2 = xh_sup_norm(inst.g, upper).value
    extras = {
        "g_sup_weighted_lower": xh_sup_norm_weighted(inst.g, inst.mapping, lower).value,
        "g_sup_weighted_upper": xh_sup_norm_weighted(inst.g, inst.mapping, upper).value,
    }
    return s1, s2, extras


def bound_t1(inst: ProblemInstance, tol: float = BOUND_TOL) -> CheckReport:
    """First derivative bound: |identity-l1 LHS| against the closed-form
    right side obtained from convexity of |f'|."""
    start = time.perf_counter()
    with quad.count_evals() as tally:
        ok, fp = _convexity_gate(inst, 1.0)
        hyp = {"convex": ok, "monotone_h": True}
        if not ok:
            return _skipped("bound-t1", inst, hyp, tol, start)
        fr = _frame(inst)
        s1, s2, extras = _half_sups(inst)
        fa = abs(float(ex.evaluate(fp, fr.A)))
        fb = abs(float(ex.evaluate(fp, fr.B)))
        d1 = fr.M - fr.A
        d2 = fr.B - fr.M
        gam1 = gamma_fn(fr.alpha + 1.0)
        al = fr.alpha
        rhs = s1 / (fr.D * gam1) * (
            fa * (d1 ** (al + 1.0) * fr.D / (al + 1.0) - d1 ** (al + 2.0) / (al + 2.0))
            + fb * d1 ** (al + 2.0) / (al + 2.0)
        ) + s2 / (fr.D * gam1) * (
            fb * (d2 ** (al + 1.0) * fr.D / (al + 1.0) - d2 ** (al + 2.0) / (al + 2.0))
            + fa * d2 ** (al + 2.0) / (al + 2.0)
        )
        lhs, _ = _lhs_l1(inst)
    slack = rhs - abs(lhs)
    return CheckReport(
        check="bound-t1",
        passed=bool(slack >= -tol),
        tol=tol,
        lhs=lhs,
        rhs=rhs,
        slack=slack,
        hypothesis=hyp,
        instance=inst.instance_id,
        evals=tally.n,
        seconds=time.perf_counter() - start,
        details={"description": inst.describe(), **extras},
    )


def bound_t2(inst: ProblemInstance, tol: float = BOUND_TOL) -> CheckReport:
    """Power-mean bound with exponent q >= 1.

    Each half contributes
        ||g||_half / Gamma(alpha)
        * (Delta^(alpha+1) / (alpha (alpha+1)))^(1 - 1/q)
        * (T / (alpha (h(b)-h(a))))^(1/q)
    with T the q-weighted endpoint bracket.  At q = 1 this coincides with
    the first derivative bound exactly.
    """
    start = time.perf_counter()
    q = PowerExponent(inst.q).q
    with quad.count_evals() as tally:
        ok, fp = _convexity_gate(inst, q)
        hyp = {"convex": ok, "monotone_h": True}
        check_name = f"bound-t2(q={q:g})"
        if not ok:
            return _skipped(check_name, inst, hyp, tol, start)
        fr = _frame(inst)
        s1, s2, extras = _half_sups(inst)
        fa = abs(float(ex.evaluate(fp, fr.A)))
        fb = abs(float(ex.evaluate(fp, fr.B)))
        al = fr.alpha
        rhs = 0.0
        for sup, delta, near, far in (
            (s1, fr.M - fr.A, fa, fb),
            (s2, fr.B - fr.M, fb, fa),
        ):
            bracket = near**q * (
                delta ** (al + 1.0) * fr.D / (al + 1.0) - delta ** (al + 2.0) / (al + 2.0)
            ) + far**q * delta ** (al + 2.0) / (al + 2.0)
            prefactor = (delta ** (al + 1.0) / (al * (al + 1.0))) ** (1.0 - 1.0 / q)
            rhs += (
                sup
                / fr.gam
                * prefactor
                * (bracket / (al * fr.D)) ** (1.0 / q)
            )
        lhs, _ = _lhs_l1(inst)
    slack = rhs - abs(lhs)
    return CheckReport(
        check=check_name,
        passed=bool(slack >= -tol),
        tol=tol,
        lhs=lhs,
        rhs=rhs,
        slack=slack,
        hypothesis=hyp,
        instance=inst.instance_id,
        evals=tally.n,
        seconds=time.perf_counter() - start,
        details={"description": inst.describe(), "q": q, **extras},
    )


def _t3_half_integral(D: float, alpha: float, p_near: float, p_far: float) -> float:
    """Closed form of integral_0^{D/2} Ktilde(tau) (c0 + c1 tau) dtau where
    Ktilde(tau) = D^(alpha-1) tau - (D^alpha - (D-tau)^alpha)/alpha
                  + tau^alpha / alpha,
    c0 = p_near * D, c1 = p_far - p_near."""
    delta = 0.5 * D
    c0 = p_near * D
    c1 = p_far - p_near
    a1 = D ** (alpha - 1.0) * (c0 * delta**2 / 2.0 + c1 * delta**3 / 3.0)
    a2 = -(D**alpha / alpha) * (c0 * delta + c1 * delta**2 / 2.0)
    a3 = (
        (c0 + c1 * D) * (D ** (alpha + 1.0) - delta ** (alpha + 1.0)) / (alpha + 1.0)
        - c1 * (D ** (alpha + 2.0) - delta ** (alpha + 2.0)) / (alpha + 2.0)
    ) / alpha
    a4 = (
        c0 * delta ** (alpha + 1.0) / (alpha + 1.0)
        + c1 * delta ** (alpha + 2.0) / (alpha + 2.0)
    ) / alpha
    return a1 + a2 + a3 + a4


def bound_t3(inst: ProblemInstance, tol: float = BOUND_TOL) -> CheckReport:
    """Kernel-weighted bound on the consolidated identity-l2 left side,
    stated for the identity map only.

    The right side integrates |kernel_l2 (g == 1)| against the convex
    majorant (b-t)|f'(a)| + (t-a)|f'(b)|, each half scaled by the half's
    sup of |g| over (b-a) Gamma(alpha); both half integrals are evaluated in
    closed form.
    """
    if not inst.mapping.is_identity:
        raise HypothesisError("this bound is stated for the identity map only")
    start = time.perf_counter()
    with quad.count_evals() as tally:
        ok, fp = _convexity_gate(inst, 1.0)
        hyp = {"convex": ok, "monotone_h": True}
        if not ok:
            return _skipped("bound-t3", inst, hyp, tol, start)
        fr = _frame(inst)
        s1, s2, extras = _half_sups(inst)
        fa = abs(float(ex.evaluate(fp, fr.a)))
        fb = abs(float(ex.evaluate(fp, fr.b)))
        w_lower = _t3_half_integral(fr.D, fr.alpha, fa, fb)
        w_upper = _t3_half_integral(fr.D, fr.alpha, fb, fa)
        rhs = (s1 * w_lower + s2 * w_upper) / (fr.D * fr.gam)
        lhs, _ = _lhs_l2(inst)
    slack = rhs - abs(lhs)
    return CheckReport(
        check="bound-t3",
        passed=bool(slack >= -tol),
        tol=tol,
        lhs=lhs,
        rhs=rhs,
        slack=slack,
        hypothesis=hyp,
        instance=inst.instance_id,
        evals=tally.n,
        seconds=time.perf_counter() - start,
        details={"description": inst.describe(), **extras},
    )


# ---------------------------------------------------------------------------
# Three-term chains
# ---------------------------------------------------------------------------


def hh_chain(
    f: ex.Expr,
    iv: Interval,
    mode: str,
    weight: ex.Expr | None = None,
    order: FracOrder | None = None,
    tol: float = CHAIN_TOL,
    label: str = "",
) -> CheckReport:
    """Verify the midpoint <= mean <= endpoint-average chain.

    ``classical``: plain integral mean.  ``fejer``: weighted mean against a
    nonnegative weight symmetric about the midpoint, with both ends scaled
    by the weight's mean.  ``fractional``: the mean is replaced by
    Gamma(alpha+1)/(2 (b-a)^alpha) [J_a+ f(b) + J_b- f(a)] (identity map),
    which requires a >= 0 and collapses to the classical mean at alpha = 1.
    Hypothesis violations produce a skipped report, not an error.
    """
    if mode not in ("classical", "fejer", "fractional"):
        raise HypothesisError(f"unknown chain mode {mode!r}")
    check_name = f"hh-{mode}"
    start = time.perf_counter()
    with quad.count_evals() as tally:
        hyp: dict[str, bool | None] = {"convex": None, "symmetric": None, "nonnegative": None}
        hyp["convex"] = ex.check_property(f, iv, "convex").passed
        if mode == "fejer":
            if weight is None:
                raise HypothesisError("fejer mode requires a weight")
            hyp["symmetric"] = ex.check_property(weight, iv, "symmetric-about-midpoint").passed
            hyp["nonnegative"] = ex.check_property(weight, iv, "nonnegative").passed
        if mode == "fractional":
            if order is None:
                raise HypothesisError("fractional mode requires an order")
            hyp["left_endpoint_nonnegative"] = iv.a >= 0.0
        failed = [k for k, v in hyp.items() if v is False]
        if failed:
            report = _skipped(check_name, _chain_stub(f, iv, label), hyp, tol, start)
            return report
        length = iv.length
        ends = 0.5 * (float(ex.evaluate(f, iv.a)) + float(ex.evaluate(f, iv.b)))
        f_mid = float(ex.evaluate(f, iv.midpoint))
        if mode == "classical":
            scale = 1.0
            middle = quad.composite_gl(f, iv, panels=12) / length
        elif mode == "fejer":
            scale = quad.composite_gl(weight, iv, panels=12) / length
            fg = lambda t: np.asarray(ex.evaluate(f, t)) * np.asarray(ex.evaluate(weight, t))
            middle = quad.composite_gl(fg, iv, panels=12) / length
        else:
            alpha = order.alpha
            idmap = MonotoneMap.identity(iv)
            j_lower = frac_int_h(op_left(idmap, order, iv.a, iv.b), f, iv.b)
            j_upper = frac_int_h(op_right(idmap, order, iv.a, iv.b), f, iv.a)
            scale = 1.0
            middle = gamma_fn(alpha + 1.0) / (2.0 * length**alpha) * (j_lower + j_upper)
        left = f_mid * scale
        right = ends * scale
    slack = min(middle - left, right - middle)
    return CheckReport(
        check=check_name,
        passed=bool(slack >= -tol),
        tol=tol,
        lhs=left,
        middle=middle,
        rhs=right,
        slack=slack,
        hypothesis=hyp,
        instance=label or f"f={ex.to_text(f)}; iv=[{iv.a:g},{iv.b:g}]; mode={mode}",
        evals=tally.n,
        seconds=time.perf_counter() - start,
        details={"scale": scale},
    )


def _chain_stub(f: ex.Expr, iv: Interval, label: str) -> ProblemInstance:
    """Minimal instance stand-in so skipped chain reports carry a label."""
    mapping = MonotoneMap.identity(iv)
    return ProblemInstance(
        f=f,
        g=ex.Const(1.0),
        mapping=mapping,
        iv=iv,
        order=FracOrder(1.0),
        label=label or f"f={ex.to_text(f)}; iv=[{iv.a:g},{iv.b:g}]",
    )
