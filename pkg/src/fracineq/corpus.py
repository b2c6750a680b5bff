"""Built-in verification corpus.

The grid crosses three integrands, three weights, three monotone maps,
three orders, and two unit intervals (162 instances).  Weights that need
midpoint symmetry (the parabola bump and the sine bump) are instantiated
per interval so the symmetry hypothesis holds on both.

Rows are emitted in sorted (instance_id, check) order, so output is
deterministic regardless of evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from . import expr as ex
from .errors import FracineqError, HypothesisError
from .fracint import FracOrder, Interval
from .hhf import (
    BOUND_TOL,
    CHAIN_TOL,
    IDENTITY_RTOL,
    ProblemInstance,
    bound_t1,
    bound_t2,
    bound_t3,
    hh_chain,
    identity_l1,
    identity_l2,
)
from .report import CheckReport, ReportBundle

__all__ = ["CorpusConfig", "corpus_instances", "run_corpus", "DEFAULT_QS"]

F_SET = (("x2", "x^2"), ("x4", "x^4"), ("expx", "exp(x)"))
H_SET = (("hx", "x"), ("hx2", "x^2"), ("hexp", "exp(x)-1"))
ALPHA_SET = (0.5, 1.0, 2.0)
INTERVALS = ((0.0, 1.0), (1.0, 2.0))
DEFAULT_QS = (1.0, 1.5, 2.0, 3.0)


def weight_set(a: float, b: float) -> tuple[tuple[str, str], ...]:
    """Corpus weights, instantiated for [a, b]: the constant weight, a
    positive parabola bump, and a raised sine bump (both symmetric about
    the midpoint)."""
    return (
        ("g1", "1"),
        ("gpar", f"(x-{a:g})*({b:g}-x)+0.1"),
        ("gsin", f"1+sin({math.pi!r}*(x-{a:g})/{b - a:g})"),
    )


def _alpha_tag(alpha: float) -> str:
    return f"a{alpha:g}".replace(".", "p")


def _iv_tag(a: float, b: float) -> str:
    return f"iv{a:g}{b:g}".replace(".", "p").replace("-", "m")


@dataclass(frozen=True)
class CorpusConfig:
    """Options of a corpus run."""

    alphas: tuple[float, ...] = ALPHA_SET
    qs: tuple[float, ...] = DEFAULT_QS
    identity_rtol: float = IDENTITY_RTOL
    bound_tol: float = BOUND_TOL
    chain_tol: float = CHAIN_TOL
    name_filter: str = ""
    with_chains: bool = True


def corpus_instances(alphas: Iterable[float] = ALPHA_SET) -> Iterator[ProblemInstance]:
    """All (f, g, h, alpha, interval) corpus instances, labelled."""
    for a, b in INTERVALS:
        for f_tag, f_text in F_SET:
            for g_tag, g_text in weight_set(a, b):
                for h_tag, h_text in H_SET:
                    for alpha in alphas:
                        label = "-".join(
                            [f_tag, g_tag, h_tag, _alpha_tag(alpha), _iv_tag(a, b)]
                        )
                        yield ProblemInstance.build(
                            f=f_text,
                            g=g_text,
                            h=h_text,
                            a=a,
                            b=b,
                            alpha=alpha,
                            label=label,
                        )


def _chain_rows(cfg: CorpusConfig) -> Iterator[CheckReport]:
    for a, b in INTERVALS:
        iv = Interval(a, b)
        for f_tag, f_text in F_SET:
            f = ex.parse(f_text)
            base = f"{f_tag}-{_iv_tag(a, b)}"
            yield hh_chain(f, iv, "classical", tol=cfg.chain_tol, label=base)
            for g_tag, g_text in weight_set(a, b)[1:]:
                yield hh_chain(
                    f,
                    iv,
                    "fejer",
                    weight=ex.parse(g_text),
                    tol=cfg.chain_tol,
                    label=f"{base}-{g_tag}",
                )
            for alpha in cfg.alphas:
                yield hh_chain(
                    f,
                    iv,
                    "fractional",
                    order=FracOrder(alpha),
                    tol=cfg.chain_tol,
                    label=f"{base}-{_alpha_tag(alpha)}",
                )


def run_corpus(cfg: CorpusConfig = CorpusConfig()) -> ReportBundle:
    """Run every check of the corpus grid and collect one report per row."""
    reports: list[CheckReport] = []
    for inst in corpus_instances(cfg.alphas):
        rows: list[CheckReport] = [
            identity_l1(inst, rel_tol=cfg.identity_rtol),
            identity_l2(inst, rel_tol=cfg.identity_rtol),
            bound_t1(inst, tol=cfg.bound_tol),
        ]
        for q in cfg.qs:
            inst_q = ProblemInstance(
                f=inst.f,
                g=inst.g,
                mapping=inst.mapping,
                iv=inst.iv,
                order=inst.order,
                q=q,
                label=inst.label,
            )
            rows.append(bound_t2(inst_q, tol=cfg.bound_tol))
        if inst.mapping.is_identity:
            rows.append(bound_t3(inst, tol=cfg.bound_tol))
        reports.extend(rows)
    if cfg.with_chains:
        reports.extend(_chain_rows(cfg))
    if cfg.name_filter:
        needle = cfg.name_filter.lower()
        reports = [r for r in reports if needle in r.check.lower()]
    reports.sort(key=lambda r: (r.instance, r.check))
    meta = {
        "alphas": list(cfg.alphas),
        "qs": list(cfg.qs),
        "identity_rtol": cfg.identity_rtol,
        "bound_tol": cfg.bound_tol,
        "chain_tol": cfg.chain_tol,
        "filter": cfg.name_filter,
        "instances": "f x g x h x alpha x interval grid",
    }
    return ReportBundle(reports=reports, meta=meta)
