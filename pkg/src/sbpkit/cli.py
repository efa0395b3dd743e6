"""Command-line front end: build, verify, run, convergence.

Exit codes: 0 on success, 1 for usage or configuration errors, 2 when a
verification fails, 3 when a time integration blows up.  Flags can be
preloaded from a JSON config file via --config; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .diagnostics import convergence_table, error_report, reference_solution
from .operators import (
    OperatorError,
    find_operator,
    rule_of,
    verify_sbp,
    write_operator,
    _load_unchecked,
)
from .quadrature import QuadratureError, verify_exactness
from .solver import InstabilityError, Interval, ProblemSpec, run
from .spaces import make_space

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY = 2
EXIT_UNSTABLE = 3

_PROBLEM_FLAGS = ("advection", "advection-source", "burgers")


def _oscillatory(x):
    x = np.asarray(x, dtype=float)
    return np.cos(4.0 * np.pi * x) + 0.5 * np.sin(40.0 * np.pi * x)


def _ones(x):
    return np.ones_like(np.asarray(x, dtype=float))


def _bumpy(x):
    x = np.asarray(x, dtype=float)
    return (
        1.0
        + 0.5 * np.sin(4.0 * np.pi * x) ** 3
        + 0.25 * np.cos(4.0 * np.pi * x) ** 5
    )


#: per-problem defaults: initial data, boundary handling, t_final
_PROBLEM_SETUP = {
    "advection": dict(ic=_oscillatory, periodic=True, inflow=None, tfinal=1.0),
    "advection-source": dict(ic=_ones, periodic=False, inflow=1.0, tfinal=3.5),
    "burgers": dict(ic=_bumpy, periodic=True, inflow=None, tfinal=0.01),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit with 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="sbpkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None,
                        help="JSON file with default flag values")

    p_build = sub.add_parser("build", parents=[common],
                             help="construct an operator and write it to a file")
    p_build.add_argument("--space",
                         help="space such as trig:d=1 or rbf-cubic:centers=0,0.5,1")
    p_build.add_argument("--domain", nargs=2, type=float, default=None,
                         metavar=("XL", "XR"))
    p_build.add_argument("--nodes", type=int, default=None)
    p_build.add_argument("--out", type=Path, default=None)

    p_verify = sub.add_parser("verify", parents=[common],
                              help="check a stored operator file")
    p_verify.add_argument("opfile", type=Path)

    p_run = sub.add_parser("run", parents=[common],
                           help="integrate a model problem and write CSV output")
    p_run.add_argument("--problem", choices=_PROBLEM_FLAGS)
    p_run.add_argument("--space")
    p_run.add_argument("--domain", nargs=2, type=float, default=None,
                       metavar=("XL", "XR"))
    p_run.add_argument("--blocks", type=int, default=None)
    p_run.add_argument("--nodes", type=int, default=None)
    p_run.add_argument("--tfinal", type=float, default=None)
    p_run.add_argument("--cfl", type=float, default=None)
    p_run.add_argument("--sigma", type=float, default=None)
    p_run.add_argument("--periodic", action="store_true", default=None,
                       help="force periodic coupling")
    p_run.add_argument("--inflow", type=float, default=None,
                       help="constant inflow value (forces a boundary run)")
    p_run.add_argument("--out", type=Path, default=None)

    p_conv = sub.add_parser("convergence", parents=[common],
                            help="error table over a ladder of block counts")
    p_conv.add_argument("--problem", choices=_PROBLEM_FLAGS)
    p_conv.add_argument("--space", action="append",
                        help="repeatable; one table section per space")
    p_conv.add_argument("--blocks", nargs="+", type=int, default=None)
    p_conv.add_argument("--domain", nargs=2, type=float, default=None,
                        metavar=("XL", "XR"))
    p_conv.add_argument("--nodes", type=int, default=None)
    p_conv.add_argument("--tfinal", type=float, default=None)
    p_conv.add_argument("--cfl", type=float, default=None)
    p_conv.add_argument("--sigma", type=float, default=None)
    p_conv.add_argument("--periodic", action="store_true", default=None,
                        help="force periodic coupling")
    p_conv.add_argument("--inflow", type=float, default=None,
                        help="constant inflow value (forces a boundary run)")
    p_conv.add_argument("--out", type=Path, default=None)
    return parser


#: values applied after the config merge when neither flags nor the config
#: file set them; required options have no default and are checked below
_DEFAULTS = {
    "build": {"domain": [0.0, 1.0]},
    "verify": {},
    "run": {"blocks": 1, "cfl": 0.5, "out": Path(".")},
    "convergence": {"cfl": 0.5, "out": Path(".")},
}
_REQUIRED = {
    "build": ("space", "nodes", "out"),
    "verify": (),
    "run": ("problem", "space"),
    "convergence": ("problem", "space", "blocks"),
}


def _apply_config(args: argparse.Namespace) -> None:
    """Fill unset flags from the JSON config file, if one was given.

    Every flag parses with a None default, so an explicit command-line
    value always wins over the file; per-command defaults are applied
    only after the merge.
    """
    path = getattr(args, "config", None)
    if path is None:
        return
    try:
        values = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(values, dict):
        raise ValueError(f"config {path} must hold a JSON object")
    for key, value in values.items():
        attr = key.replace("-", "_")
        if attr == "config" or not hasattr(args, attr):
            raise ValueError(f"config {path}: unknown option {key!r}")
        if getattr(args, attr) is None:
            if attr in ("out", "opfile"):
                value = Path(value)
            setattr(args, attr, value)


def _finish_args(args: argparse.Namespace) -> None:
    for key, value in _DEFAULTS[args.command].items():
        if getattr(args, key) is None:
            setattr(args, key, value)
    missing = [k for k in _REQUIRED[args.command] if getattr(args, k) is None]
    if missing:
        flags = " ".join("--" + k for k in missing)
        raise ValueError(f"missing required option(s): {flags}")
    problem = getattr(args, "problem", None)
    if problem is not None and problem not in _PROBLEM_FLAGS:
        raise ValueError(
            f"unknown problem {problem!r}; expected one of {_PROBLEM_FLAGS}"
        )


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(
            ",".join(v if isinstance(v, str) else _fmt(v) for v in row)
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _cmd_build(args) -> int:
    interval = Interval(float(args.domain[0]), float(args.domain[1]))
    space = make_space(args.space, interval)
    op = find_operator(space, int(args.nodes))
    report = verify_sbp(op)
    if not report.passed:
        print(f"verification failed: {report}", file=sys.stderr)
        return EXIT_VERIFY
    write_operator(op, args.out)
    print(f"space      {space.kind}")
    print(f"nodes      {op.n_nodes}")
    print("weights    " + " ".join(format(w, ".6g") for w in op.p))
    print(f"exactness  {report.exactness_residual:.3e}")
    print(f"written    {args.out}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    op = _load_unchecked(args.opfile)
    report = verify_sbp(op)
    exact = verify_exactness(rule_of(op), op.space)
    print(f"exactness residual     {report.exactness_residual:.3e}")
    print(f"antisymmetry residual  {report.antisymmetry_residual:.3e}")
    print(f"min weight             {report.min_weight:.6g}")
    print(f"constant residual      {report.d_one_residual:.3e}")
    print(f"quadrature residual    {exact.max_scaled_residual:.3e}")
    if not report.min_weight > 0.0:
        print(
            "FAIL: norm weights must be strictly positive "
            "(positive-definite norm axiom)",
            file=sys.stderr,
        )
        return EXIT_VERIFY
    if not report.passed or not exact.ok:
        print("FAIL: operator violates the summation-by-parts axioms",
              file=sys.stderr)
        return EXIT_VERIFY
    print("PASS")
    return EXIT_OK


def _problem_spec(args) -> tuple[ProblemSpec, float]:
    setup = _PROBLEM_SETUP[args.problem]
    kind = args.problem.replace("-", "_")
    domain = (
        Interval(float(args.domain[0]), float(args.domain[1]))
        if args.domain is not None
        else (Interval(0.0, np.pi) if kind == "advection_source" else Interval(0.0, 1.0))
    )
    periodic = setup["periodic"]
    inflow_value = setup["inflow"]
    if args.inflow is not None:
        periodic = False
        inflow_value = args.inflow
    if args.periodic:
        periodic = True
        inflow_value = None
    if kind == "burgers" and not periodic and inflow_value < 0.0:
        raise ValueError(
            "Burgers inflow data must be nonnegative to keep the flow "
            "expansive at the boundary"
        )
    inflow = None
    if not periodic:
        g = float(inflow_value)
        inflow = lambda t, g=g: g
    spec = ProblemSpec(
        kind=kind,
        domain=domain,
        initial_condition=setup["ic"],
        periodic=periodic,
        inflow=inflow,
        sigma=args.sigma,
    )
    tfinal = args.tfinal if args.tfinal is not None else setup["tfinal"]
    return spec, float(tfinal)


def _cmd_run(args) -> int:
    spec, tfinal = _problem_spec(args)
    outdir = args.out
    outdir.mkdir(parents=True, exist_ok=True)

    start = time.perf_counter()
    result = run(
        spec,
        args.space,
        n_nodes=None if args.nodes is None else int(args.nodes),
        n_blocks=int(args.blocks),
        t_final=tfinal,
        cfl=float(args.cfl),
    )
    wallclock = time.perf_counter() - start

    _write_csv(
        outdir / "diagnostics.csv",
        ["t", "mass", "energy"],
        [[rec.t, rec.mass, rec.energy] for rec in result.history],
    )

    ref = reference_solution(spec, tfinal)
    rows = []
    for u, op in zip(result.state.blocks, result.state.operators):
        uref = (
            np.asarray(ref(op.nodes), dtype=float)
            if ref is not None
            else np.full(op.n_nodes, np.nan)
        )
        for x, v, vr in zip(op.nodes, u, uref):
            rows.append([x, v, vr, abs(v - vr)])
    _write_csv(outdir / "solution.csv", ["x", "u", "u_ref", "abs_err"], rows)

    if ref is not None:
        err = error_report(result.state, ref)
        err_row = [err.err_p, err.err_2, err.err_max]
    else:
        err_row = [np.nan, np.nan, np.nan]
    _write_csv(
        outdir / "summary.csv",
        ["err_P", "err_2", "err_max", "steps", "wallclock_s"],
        [err_row + [float(result.steps), wallclock]],
    )
    print(
        f"steps {result.steps}  t {result.state.t:.6g}  "
        + (f"err_P {err_row[0]:.6e}" if ref is not None else "no reference")
    )
    return EXIT_OK


def _cmd_convergence(args) -> int:
    spec, tfinal = _problem_spec(args)
    outdir = args.out
    outdir.mkdir(parents=True, exist_ok=True)
    spaces = [args.space] if isinstance(args.space, str) else list(args.space)
    rows = convergence_table(
        spec,
        spaces,
        [int(b) for b in args.blocks],
        n_nodes=None if args.nodes is None else int(args.nodes),
        t_final=tfinal,
        cfl=float(args.cfl),
    )
    _write_csv(
        outdir / "convergence.csv",
        ["space", "I", "err_P", "err_2", "err_max", "order"],
        [[r.space, float(r.blocks), r.err_p, r.err_2, r.err_max, r.order]
         for r in rows],
    )
    for r in rows:
        order = "      " if np.isnan(r.order) else f"{r.order:6.2f}"
        print(
            f"{r.space:24s} I={r.blocks:<4d} err_P {r.err_p:.6e}  "
            f"err_max {r.err_max:.6e}  order {order}"
        )
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        _finish_args(args)
        if args.command == "build":
            return _cmd_build(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "convergence":
            return _cmd_convergence(args)
        parser.error(f"unknown command {args.command!r}")
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OperatorError, QuadratureError) as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except InstabilityError as exc:
        print(f"unstable: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
