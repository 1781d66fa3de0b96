"""Command-line front end.

Subcommands: solve, residual, sweep, ml, check-ibp.  Exit codes: 0 success,
1 input error, 2 non-convergence, 3 verdict failure.  Output files are
written atomically (temp file + rename) and every figure has a CSV twin.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import report as figures
from .expr import Lagrangian
from .grid import make_grid, sample
from .mittag import ml
from .operators import BoundaryViolationError, check_integration_by_parts
from .probfile import build_problem, candidate_function, parse_problem_file
from .solver import (
    BracketFailureError,
    ObjectiveNonFiniteError,
    alpha_sweep,
    example_boundary_value,
    iso_solve,
    ritz_minimize,
    summary_record,
    write_sweep_csv,
)
from .varcalc import Box, el_residual, el_residual_restricted, sufficiency_report

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NONCONVERGED = 2
EXIT_VERDICT = 3


def _atomic_write(path: Path, producer) -> None:
    """producer(tmp_path) writes the file; the rename is the publish step."""
    path.parent.mkdir(parents=True, exist_ok=True)
    # keep the real extension so format-sniffing writers (matplotlib) work
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.stem}.", suffix=path.suffix)
    os.close(fd)
    try:
        producer(Path(tmp))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_text(path: Path, text: str) -> None:
    _atomic_write(path, lambda tmp: tmp.write_text(text))


def _load(args):
    pf = parse_problem_file(args.file)
    return pf, build_problem(pf, n_override=args.n)


def cmd_solve(args) -> int:
    out = Path(args.out)
    try:
        pf, (problem, constraint, cfg) = _load(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    try:
        if constraint is not None:
            res = iso_solve(problem, constraint, cfg, tuple(args.bracket))
            lam = res.multipliers.lam
        else:
            r = ritz_minimize(problem, cfg)
            res = None
            lam = 0.0
    except (BracketFailureError, ObjectiveNonFiniteError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED

    y = res.y if res is not None else r.y
    alpha = float(problem.alpha)
    _atomic_write(out / f"solution_alpha_{alpha:g}.csv", y.to_csv)
    ref = sample(lambda x: example_boundary_value(alpha, x - problem.a), problem.grid) \
        if constraint is not None else None
    _atomic_write(out / f"solution_alpha_{alpha:g}.png",
                  lambda p: figures.render_solution_figure(p, y, ref))
    if res is not None:
        _write_text(out / "summary.csv",
                    "alpha,lambda,objective,constraint_residual,el_sup,converged\n"
                    + summary_record(alpha, res) + "\n")
        converged = res.converged
        print(f"lambda = {lam:.6g}  constraint residual = {res.constraint_residual:.3g}  "
              f"converged = {converged}")
    else:
        _write_text(out / "summary.csv",
                    "alpha,lambda,objective,constraint_residual,el_sup,converged\n"
                    f"{alpha:.17g},0,{r.objective:.17g},0,nan,{str(r.converged).lower()}\n")
        converged = r.converged
        print(f"objective = {r.objective:.6g}  converged = {converged}")
    return EXIT_OK if converged else EXIT_NONCONVERGED


def cmd_residual(args) -> int:
    out = Path(args.out)
    try:
        pf, (problem, constraint, cfg) = _load(args)
        y = candidate_function(pf, problem)
        if y is None:
            print("error: [candidate] section is required for the residual command",
                  file=sys.stderr)
            return EXIT_INPUT
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    try:
        if problem.full_interval:
            rep = el_residual(problem, y, args.tol)
        else:
            rep = el_residual_restricted(problem, y, args.tol)
        span = max(1.0, abs(problem.ya), abs(problem.yb))
        box = Box((problem.a, problem.b), (-3 * span, 3 * span),
                  (-3 * span, 3 * span), (-3 * span, 3 * span))
        suff = sufficiency_report(problem.L, None, None, problem, y, box, tol=args.tol)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    _atomic_write(out / "residual.csv", rep.to_csv)
    _write_text(out / "residual_summary.csv",
                "sup_left,sup_mid,sup_right,verdict\n" + rep.summary_line() + "\n")
    _atomic_write(out / "residual.png", lambda p: figures.render_residual_figure(p, rep))
    print(f"residual sup (left, mid, right) = ({rep.sup_left:.3g}, {rep.sup_mid:.3g}, "
          f"{rep.sup_right:.3g})  tolerance = {rep.tolerance:.3g}")
    print(f"convexity pass = {suff.convex_objective}  verdict = {suff.verdict}")
    return EXIT_OK if suff.verdict else EXIT_VERDICT


def cmd_sweep(args) -> int:
    out = Path(args.out)
    try:
        alphas = []
        for tok in args.alphas.split(","):
            tok = tok.strip()
            if not tok:
                continue
            val = float(tok)
            if not (0.0 < val <= 1.0):
                raise ValueError(f"alpha {val:g} outside (0, 1]")
            if val == 1.0:
                print("note: alpha = 1 is run as 0.999 (operators require alpha < 1)")
                val = 0.999
            alphas.append(val)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    try:
        pf = parse_problem_file(args.file)

        def make_problem(alpha):
            problem, constraint, _ = build_problem(pf, alpha_override=alpha, n_override=args.n)
            return problem, constraint

        _, _, cfg = build_problem(pf, n_override=args.n)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    entries = alpha_sweep(make_problem, alphas, cfg, tuple(args.bracket))
    _atomic_write(out / "sweep.csv", lambda p: write_sweep_csv(p, entries))
    _atomic_write(out / "sweep.png", lambda p: figures.render_sweep_figure(p, entries))
    lines = ["alpha,lambda,objective,constraint_residual,el_sup,converged"]
    ok = True
    for e in entries:
        if e.result is None:
            print(f"alpha={e.alpha:g}: failed: {e.error}", file=sys.stderr)
            ok = False
            continue
        _atomic_write(out / f"solution_alpha_{e.alpha:g}.csv", e.result.y.to_csv)
        lines.append(summary_record(e.alpha, e.result))
        if not e.result.converged:
            ok = False
        print(f"alpha={e.alpha:g}: lambda={e.result.multipliers.lam:.4g} "
              f"converged={e.result.converged}")
    _write_text(out / "sweep_summary.csv", "\n".join(lines) + "\n")
    return EXIT_OK if ok else EXIT_NONCONVERGED


def cmd_ml(args) -> int:
    try:
        if args.alpha <= 0:
            raise ValueError("alpha must be positive")
        result = ml(args.alpha, args.x)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(f"{result.value:.15g}")
    return EXIT_OK if result.converged else EXIT_NONCONVERGED


def cmd_check_ibp(args) -> int:
    try:
        if not (0.0 < args.alpha < 1.0):
            raise ValueError(f"alpha must lie in (0, 1), got {args.alpha:g}")
        grid = make_grid(args.a, args.b, args.n)
        fx = Lagrangian.parse(args.f)
        gx = Lagrangian.parse(args.g)
        for name, expr in (("f", fx), ("g", gx)):
            if expr.variables - {"x"}:
                raise ValueError(f"{name} must be an expression in x only")
        f = sample(lambda x: float(np.asarray(fx.eval_value(x, 0.0, 0.0, 0.0))), grid)
        g = sample(lambda x: float(np.asarray(gx.eval_value(x, 0.0, 0.0, 0.0))), grid)
        residual = check_integration_by_parts(f, g, args.alpha, args.variant)
    except (BoundaryViolationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    scale = max(1.0, float(np.max(np.abs(f.values))) * float(np.max(np.abs(g.values))))
    bound = 10.0 * grid.h ** (1.0 - args.alpha) * scale
    print(f"residual = {residual:.6g} (bound {bound:.6g})")
    return EXIT_OK if residual < bound else EXIT_VERDICT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracvar",
        description="Fractional variational problems: solve, verify residuals, sweep orders.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--n", type=int, default=None, help="grid size override")
        p.add_argument("--tol", type=float, default=None, help="residual tolerance override")

    p_solve = sub.add_parser("solve", help="solve the problem file by the direct method")
    p_solve.add_argument("file")
    p_solve.add_argument("--bracket", type=float, nargs=2, default=(-10.0, 10.0),
                         metavar=("LO", "HI"), help="multiplier search bracket")
    common(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_res = sub.add_parser("residual", help="evaluate optimality residuals of a candidate")
    p_res.add_argument("file")
    common(p_res)
    p_res.set_defaults(func=cmd_residual)

    p_sweep = sub.add_parser("sweep", help="solve across a list of fractional orders")
    p_sweep.add_argument("file")
    p_sweep.add_argument("--alphas", required=True, help="comma-separated orders in (0, 1]")
    p_sweep.add_argument("--bracket", type=float, nargs=2, default=(-10.0, 10.0),
                         metavar=("LO", "HI"))
    common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_ml = sub.add_parser("ml", help="evaluate the Mittag-Leffler function")
    p_ml.add_argument("--alpha", type=float, required=True)
    p_ml.add_argument("--x", type=float, required=True)
    p_ml.set_defaults(func=cmd_ml)

    p_ibp = sub.add_parser("check-ibp", help="verify an integration-by-parts identity")
    p_ibp.add_argument("--a", type=float, default=0.0)
    p_ibp.add_argument("--b", type=float, default=1.0)
    p_ibp.add_argument("--alpha", type=float, required=True)
    p_ibp.add_argument("--f", required=True, help="expression in x")
    p_ibp.add_argument("--g", required=True, help="expression in x")
    p_ibp.add_argument("--variant", choices=("IP1", "IP2", "IP3", "IP4"), required=True)
    p_ibp.add_argument("--n", type=int, default=2049)
    p_ibp.set_defaults(func=cmd_check_ibp)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
