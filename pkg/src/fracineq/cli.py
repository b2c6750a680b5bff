"""Command-line front end.

Verbs:

* ``integrate`` — evaluate one generalized fractional integral, reporting
  the value, an independent error estimate, and the evaluation count;
* ``verify <check-name>`` — run a single identity/bound/chain check on an
  instance assembled from a flat key-value file and/or flags;
* ``corpus`` — run the built-in verification grid and emit the full report
  bundle.

Exit codes (exhaustive, mutually exclusive):

* 0 — everything requested passed;
* 1 — parse error (expression text, instance file, or arguments);
* 2 — a mathematical hypothesis was violated (non-monotone map, order out
  of range, rejected convexity/symmetry gate, evaluation outside a
  function's domain);
* 3 — numeric failure: quadrature non-convergence or a completed check that
  missed its tolerance.

Instance files are flat key-value text, one instance per file::

    f = "x^2"
    g = "1"
    h = "x"
    a = 0
    b = 1
    alpha = 0.5
    q = 2

Flags override file values.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from typing import Sequence

from . import __version__
from . import expr as ex
from . import quad
from .corpus import DEFAULT_QS, CorpusConfig, run_corpus
from .errors import (
    ExpressionError,
    FracineqError,
    HypothesisError,
    NonConvergenceError,
    ParseError,
)
from .fracint import FracOrder, Interval, MonotoneMap, frac_int_h, op_left, op_right
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

EXIT_PASS = 0
EXIT_PARSE = 1
EXIT_HYPOTHESIS = 2
EXIT_NUMERIC = 3

_CHECK_NAMES = (
    "identity-l1",
    "identity-l2",
    "bound-t1",
    "bound-t2",
    "bound-t3",
    "hh-chain",
    "hh-classical",
    "hh-fejer",
    "hh-fractional",
)

_INSTANCE_KEYS = ("f", "g", "h", "a", "b", "alpha", "q", "at", "side", "check", "tol")


@dataclass
class RunConfig:
    """Validated options of one CLI invocation."""

    command: str
    instance: dict[str, str] = field(default_factory=dict)
    check: str = ""
    fmt: str = "table"
    out: str = ""
    tol: float | None = None
    name_filter: str = ""
    budget: int = 10_000_000
    alpha_override: float | None = None


def load_instance_file(path: str) -> dict[str, str]:
    """Parse a flat ``key = value`` instance file."""
    try:
        text = open(path, "r", encoding="utf-8").read()
    except OSError as exc:
        raise ParseError(f"cannot read instance file {path!r}: {exc}", 0) from exc
    values: dict[str, str] = {}
    offset = 0
    for line in text.splitlines(keepends=True):
        stripped = line.split("#", 1)[0].strip()
        if stripped:
            key, sep, raw = stripped.partition("=")
            if not sep:
                raise ParseError("instance line is missing '='", offset)
            key = key.strip()
            if key not in _INSTANCE_KEYS:
                raise ParseError(f"unknown instance key {key!r}", offset)
            value = raw.strip()
            if len(value) >= 2 and value[0] == value[-1] and value[0] in "'\"":
                value = value[1:-1]
            values[key] = value
        offset += len(line)
    return values


def _float(values: dict[str, str], key: str, default: float) -> float:
    if key not in values:
        return default
    try:
        return float(values[key])
    except ValueError as exc:
        raise ParseError(f"value for {key!r} is not a number: {values[key]!r}", 0) from exc


def _build_instance(values: dict[str, str], label: str = "cli") -> ProblemInstance:
    return ProblemInstance.build(
        f=values.get("f", "x^2"),
        g=values.get("g", "1"),
        h=values.get("h", "x"),
        a=_float(values, "a", 0.0),
        b=_float(values, "b", 1.0),
        alpha=_float(values, "alpha", 1.0),
        q=_float(values, "q", 2.0),
        label=label,
    )


def _emit(bundle: ReportBundle, cfg: RunConfig) -> None:
    if cfg.fmt == "json":
        payload = bundle.to_json() + "\n"
    elif cfg.fmt == "csv":
        payload = bundle.to_csv()
    else:
        payload = bundle.to_table()
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(payload)
        print(f"wrote {bundle.total} report(s) to {cfg.out}")
    else:
        sys.stdout.write(payload)


def _meta(cfg: RunConfig) -> dict:
    return {
        "version": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "seed": 0,
        "budget": cfg.budget,
        "command": cfg.command,
    }


def cmd_integrate(cfg: RunConfig) -> int:
    values = cfg.instance
    f = ex.parse(values.get("f", "1"))
    h = ex.parse(values.get("h", "x"))
    a = _float(values, "a", 0.0)
    b = _float(values, "b", 1.0)
    at = _float(values, "at", b)
    alpha = _float(values, "alpha", 1.0)
    side = values.get("side", "left")
    if side not in ("left", "right"):
        raise ParseError(f"side must be 'left' or 'right', got {side!r}", 0)
    iv = Interval(a, b)
    mapping = MonotoneMap.validated(h, iv)
    order = FracOrder(alpha)
    with quad.count_evals() as tally:
        if side == "left":
            spec = op_left(mapping, order, a, at)
            value = frac_int_h(spec, f, at)
        else:
            spec = op_right(mapping, order, at, b)
            value = frac_int_h(spec, f, at)

        # independent estimate from the adaptive oracle on the raw integrand
        import numpy as np

        def raw(t):
            ht = np.asarray(ex.evaluate(h, t))
            c = float(ex.evaluate(h, at))
            kern = np.abs(c - ht) ** (alpha - 1.0)
            return kern * np.asarray(ex.evaluate(mapping.h_prime, t)) * np.asarray(
                ex.evaluate(f, t)
            )

        lo, hi = (a, at) if side == "left" else (at, b)
        from .fracint import gamma_fn

        oracle = quad.integrate_adaptive(raw, (lo, hi), tol=1e-10, budget=cfg.budget)
        oracle_value = oracle.value / gamma_fn(alpha)
        estimate = abs(value - oracle_value) + oracle.error_estimate / gamma_fn(alpha)
    report = CheckReport(
        check="integrate",
        passed=True,
        tol=estimate,
        lhs=value,
        instance="cli",
        evals=tally.n,
        details={
            "side": side,
            "alpha": alpha,
            "at": at,
            "error_estimate": estimate,
            "oracle_value": oracle_value,
        },
    )
    bundle = ReportBundle(reports=[report], meta=_meta(cfg))
    _emit(bundle, cfg)
    return EXIT_PASS


def _run_check(cfg: RunConfig) -> CheckReport:
    name = cfg.check
    values = cfg.instance
    if name.startswith("hh-"):
        f = ex.parse(values.get("f", "x^2"))
        iv = Interval(_float(values, "a", 0.0), _float(values, "b", 1.0))
        mode = name.removeprefix("hh-")
        tol = cfg.tol if cfg.tol is not None else CHAIN_TOL
        weight = ex.parse(values.get("g", "1")) if mode == "fejer" else None
        order = FracOrder(_float(values, "alpha", 1.0)) if mode == "fractional" else None
        return hh_chain(f, iv, mode, weight=weight, order=order, tol=tol)
    inst = _build_instance(values)
    if name == "identity-l1":
        return identity_l1(inst, rel_tol=cfg.tol if cfg.tol is not None else IDENTITY_RTOL)
    if name == "identity-l2":
        return identity_l2(inst, rel_tol=cfg.tol if cfg.tol is not None else IDENTITY_RTOL)
    tol = cfg.tol if cfg.tol is not None else BOUND_TOL
    if name == "bound-t1":
        return bound_t1(inst, tol=tol)
    if name == "bound-t2":
        return bound_t2(inst, tol=tol)
    if name == "bound-t3":
        return bound_t3(inst, tol=tol)
    raise ParseError(f"unknown check {name!r}", 0)


def cmd_verify(cfg: RunConfig) -> int:
    report = _run_check(cfg)
    bundle = ReportBundle(reports=[report], meta=_meta(cfg))
    _emit(bundle, cfg)
    if report.passed:
        return EXIT_PASS
    return EXIT_HYPOTHESIS if report.skipped else EXIT_NUMERIC


def cmd_corpus(cfg: RunConfig) -> int:
    corpus_cfg = CorpusConfig(
        alphas=(cfg.alpha_override,) if cfg.alpha_override is not None else CorpusConfig.alphas,
        qs=DEFAULT_QS,
        identity_rtol=cfg.tol if cfg.tol is not None else IDENTITY_RTOL,
        bound_tol=cfg.tol if cfg.tol is not None else BOUND_TOL,
        chain_tol=cfg.tol if cfg.tol is not None else CHAIN_TOL,
        name_filter=cfg.name_filter,
    )
    bundle = run_corpus(corpus_cfg)
    bundle.meta.update(_meta(cfg))
    _emit(bundle, cfg)
    print(f"{bundle.passed}/{bundle.total} checks passed")
    if bundle.passed == bundle.total:
        return EXIT_PASS
    non_skipped_failures = [r for r in bundle.reports if not r.passed and not r.skipped]
    return EXIT_NUMERIC if non_skipped_failures else EXIT_HYPOTHESIS


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracineq",
        description="Generalized fractional integrals and their inequality checks.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, with_instance: bool = True) -> None:
        if with_instance:
            p.add_argument("--instance", help="flat key = value instance file")
            p.add_argument("--f", dest="f", help="integrand expression")
            p.add_argument("--g", dest="g", help="weight expression")
            p.add_argument("--h", dest="h", help="monotone map expression")
            p.add_argument("--alpha", type=float, help="fractional order")
            p.add_argument("--q", type=float, help="power-mean exponent (>= 1)")
            p.add_argument("--a", type=float, help="interval left endpoint")
            p.add_argument("--b", type=float, help="interval right endpoint")
        p.add_argument("--tol", type=float, help="tolerance override (must be > 0)")
        p.add_argument(
            "--format",
            choices=("table", "csv", "json"),
            default="table",
            help="output format (default: table)",
        )
        p.add_argument("--out", help="write the report bundle to this path")
        p.add_argument(
            "--budget",
            type=int,
            default=10_000_000,
            help="adaptive-quadrature evaluation budget",
        )

    p_int = sub.add_parser("integrate", help="evaluate one fractional integral")
    add_common(p_int)
    p_int.add_argument("--at", type=float, help="evaluation point (default: b)")
    p_int.add_argument(
        "--side", choices=("left", "right"), default="left", help="operator side"
    )

    p_ver = sub.add_parser("verify", help="run a single check")
    p_ver.add_argument("check", choices=_CHECK_NAMES, help="check to run")
    p_ver.add_argument(
        "mode",
        nargs="?",
        choices=("classical", "fejer", "fractional"),
        help="chain mode (with hh-chain)",
    )
    add_common(p_ver)

    p_cor = sub.add_parser("corpus", help="run the built-in verification corpus")
    add_common(p_cor, with_instance=False)
    p_cor.add_argument("--alpha", type=float, help="restrict the corpus to one order")
    p_cor.add_argument("--filter", dest="name_filter", default="", help="check-name filter")
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    values: dict[str, str] = {}
    if getattr(args, "instance", None):
        values.update(load_instance_file(args.instance))
    for key in ("f", "g", "h", "alpha", "q", "a", "b", "at", "side"):
        v = getattr(args, key, None)
        if v is not None:
            values[key] = str(v)
    if args.tol is not None and not args.tol > 0.0:
        raise ParseError(f"tolerance must be positive, got {args.tol}", 0)
    check = getattr(args, "check", "") or ""
    mode = getattr(args, "mode", None)
    if check == "hh-chain":
        if mode is None:
            raise ParseError("hh-chain requires a mode (classical|fejer|fractional)", 0)
        check = f"hh-{mode}"
    return RunConfig(
        command=args.command,
        instance=values,
        check=check,
        fmt=args.format,
        out=args.out or "",
        tol=args.tol,
        name_filter=getattr(args, "name_filter", "") or "",
        budget=args.budget,
        alpha_override=getattr(args, "alpha", None) if args.command == "corpus" else None,
    )


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; map to the parse-error code
        code = exc.code if isinstance(exc.code, int) else 0
        return EXIT_PARSE if code else EXIT_PASS
    try:
        cfg = _config_from_args(args)
        if cfg.command == "integrate":
            return cmd_integrate(cfg)
        if cfg.command == "verify":
            return cmd_verify(cfg)
        return cmd_corpus(cfg)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NonConvergenceError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (HypothesisError, ExpressionError) as exc:
        print(f"hypothesis violation: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except FracineqError as exc:  # pragma: no cover - defensive
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
