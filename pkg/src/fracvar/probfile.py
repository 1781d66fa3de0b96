"""Problem-definition files.

Line-oriented format: ``[section]`` headers, ``key = value`` pairs, ``#``
comments.  Sections: ``[problem]`` (a, b, optional A, B, alpha, beta, ya, yb,
n), ``[lagrangian]`` (expr), optional ``[constraint]`` (expr, target),
optional ``[solver]`` (RitzConfig overrides), optional ``[candidate]``
(expr in x, or csv path).

Two conveniences keep one file usable across a sweep of orders:

* the token ``ALPHA`` in any expression or in ``yb``/``target`` is replaced
  textually by the current order before parsing;
* ``yb = auto_example`` evaluates E_alpha(b^alpha) and
  ``target = auto_example`` evaluates the high-resolution integral of
  E_alpha(x^alpha)^2 over [a, b] - the eigenfunction benchmark data.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import integrate

from .expr import Lagrangian
from .mittag import ml_power
from .solver import RitzConfig
from .varcalc import IsoConstraint, VariationalProblem


class ProblemFileError(ValueError):
    def __init__(self, path, line: Optional[int], message: str):
        where = f"{path}" + (f":{line}" if line is not None else "")
        super().__init__(f"{where}: {message}")


_PROBLEM_KEYS = {"a", "b", "A", "B", "alpha", "beta", "ya", "yb", "n"}
_SOLVER_KEYS = {"n_basis", "max_iters", "grad_step", "tol_obj", "tol_grad"}


@dataclass(frozen=True)
class ProblemFile:
    path: str
    problem: dict
    lagrangian: str
    constraint_expr: Optional[str] = None
    constraint_target: Optional[str] = None
    solver: dict = field(default_factory=dict)
    candidate_expr: Optional[str] = None
    candidate_csv: Optional[str] = None

    def pretty(self) -> str:
        lines = ["[problem]"]
        for k in ("a", "b", "A", "B", "alpha", "beta", "ya", "yb", "n"):
            if k in self.problem:
                lines.append(f"{k} = {self.problem[k]}")
        lines += ["", "[lagrangian]", f"expr = {self.lagrangian}"]
        if self.constraint_expr is not None:
            lines += ["", "[constraint]", f"expr = {self.constraint_expr}",
                      f"target = {self.constraint_target}"]
        if self.solver:
            lines += ["", "[solver]"]
            lines += [f"{k} = {v}" for k, v in self.solver.items()]
        if self.candidate_expr is not None or self.candidate_csv is not None:
            lines += ["", "[candidate]"]
            if self.candidate_expr is not None:
                lines.append(f"expr = {self.candidate_expr}")
            if self.candidate_csv is not None:
                lines.append(f"csv = {self.candidate_csv}")
        return "\n".join(lines) + "\n"


def parse_problem_file(path, text: Optional[str] = None) -> ProblemFile:
    if text is None:
        with open(path) as fh:
            text = fh.read()
    section = None
    data: dict[str, dict] = {"problem": {}, "lagrangian": {}, "constraint": {},
                             "solver": {}, "candidate": {}}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in data:
                raise ProblemFileError(path, lineno, f"unknown section [{section}]")
            continue
        if section is None:
            raise ProblemFileError(path, lineno, "content before any [section]")
        if "=" not in line:
            raise ProblemFileError(path, lineno, f"expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if section == "problem" and key not in _PROBLEM_KEYS:
            raise ProblemFileError(path, lineno, f"unknown [problem] key {key!r}")
        if section == "solver" and key not in _SOLVER_KEYS:
            raise ProblemFileError(path, lineno, f"unknown [solver] key {key!r}")
        if section in ("lagrangian", "constraint", "candidate") and key not in (
            "expr", "target", "csv"
        ):
            raise ProblemFileError(path, lineno, f"unknown [{section}] key {key!r}")
        data[section][key] = value

    for key in ("a", "b", "alpha", "beta", "ya", "yb", "n"):
        if key not in data["problem"]:
            raise ProblemFileError(path, None, f"[problem] is missing mandatory key {key!r}")
    if "expr" not in data["lagrangian"]:
        raise ProblemFileError(path, None, "[lagrangian] is missing 'expr'")
    if data["constraint"] and "expr" not in data["constraint"]:
        raise ProblemFileError(path, None, "[constraint] is missing 'expr'")
    if data["constraint"] and "target" not in data["constraint"]:
        raise ProblemFileError(path, None, "[constraint] is missing 'target'")

    return ProblemFile(
        path=str(path),
        problem=data["problem"],
        lagrangian=data["lagrangian"]["expr"],
        constraint_expr=data["constraint"].get("expr"),
        constraint_target=data["constraint"].get("target"),
        solver={k: v for k, v in data["solver"].items()},
        candidate_expr=data["candidate"].get("expr"),
        candidate_csv=data["candidate"].get("csv"),
    )


def _substitute_alpha(text: str, alpha: float) -> str:
    return text.replace("ALPHA", repr(float(alpha)))


def eigenfunction_constraint_target(alpha: float, a: float, b: float) -> float:
    """High-resolution quadrature of E_alpha(x^alpha)^2 - independent of the
    grid machinery used by the solver."""
    val, _ = integrate.quad(
        lambda t: ml_power(alpha, t).value ** 2, a, b, limit=200, epsabs=1e-12, epsrel=1e-12
    )
    return float(val)


def build_problem(
    pf: ProblemFile,
    alpha_override: Optional[float] = None,
    n_override: Optional[int] = None,
) -> tuple[VariationalProblem, Optional[IsoConstraint], RitzConfig]:
    def fail(msg: str) -> ProblemFileError:
        return ProblemFileError(pf.path, None, msg)

    def real(key: str) -> float:
        try:
            return float(_substitute_alpha(pf.problem[key], alpha) if key in pf.problem else 0.0)
        except ValueError:
            raise fail(f"[problem] {key} = {pf.problem[key]!r} is not a number") from None

    try:
        alpha = float(pf.problem["alpha"]) if alpha_override is None else float(alpha_override)
        beta = float(pf.problem["beta"]) if alpha_override is None else float(alpha_override)
    except ValueError:
        raise fail("alpha/beta must be numbers") from None
    for name, val in (("alpha", alpha), ("beta", beta)):
        if not (0.0 < val < 1.0):
            raise fail(f"{name} = {val:g} violates the open-interval constraint (0, 1)")

    a, b = real("a"), real("b")
    if not a < b:
        raise fail(f"need a < b, got a={a:g}, b={b:g}")
    n = int(pf.problem["n"]) if n_override is None else int(n_override)

    yb_raw = pf.problem["yb"].strip()
    ya = real("ya")
    if yb_raw == "auto_example":
        yb = ml_power(alpha, b).value
    else:
        yb = real("yb")

    try:
        L = Lagrangian.parse(_substitute_alpha(pf.lagrangian, alpha))
    except ValueError as exc:
        raise fail(f"[lagrangian] expr: {exc}") from None

    A = real("A") if "A" in pf.problem else a
    B = real("B") if "B" in pf.problem else b
    problem = VariationalProblem(
        L=L, a=a, b=b, alpha=alpha, beta=beta, ya=ya, yb=yb, grid_n=n, A=A, B=B
    )

    constraint = None
    if pf.constraint_expr is not None:
        try:
            g = Lagrangian.parse(_substitute_alpha(pf.constraint_expr, alpha))
        except ValueError as exc:
            raise fail(f"[constraint] expr: {exc}") from None
        target_raw = (pf.constraint_target or "").strip()
        if target_raw == "auto_example":
            l = eigenfunction_constraint_target(alpha, a, b)
        else:
            try:
                l = float(_substitute_alpha(target_raw, alpha))
            except ValueError:
                raise fail(f"[constraint] target {target_raw!r} is not a number") from None
        constraint = IsoConstraint(g, l)

    cfg = RitzConfig()
    casts = {"n_basis": int, "max_iters": int, "grad_step": float,
             "tol_obj": float, "tol_grad": float}
    for key, raw in pf.solver.items():
        try:
            cfg = replace(cfg, **{key: casts[key](raw)})
        except ValueError:
            raise fail(f"[solver] {key} = {raw!r} is not a valid {casts[key].__name__}") from None
    return problem, constraint, cfg


def candidate_function(
    pf: ProblemFile, problem: VariationalProblem, alpha: Optional[float] = None
):
    """Sampled candidate from the [candidate] section, or None."""
    from .grid import GridFunction, sample

    if pf.candidate_expr is not None:
        src = _substitute_alpha(pf.candidate_expr, alpha if alpha is not None else float(problem.alpha))
        expr = Lagrangian.parse(src)
        extra = expr.variables - {"x"}
        if extra:
            raise ProblemFileError(pf.path, None,
                                   f"[candidate] expr may use x only, found {sorted(extra)}")
        return sample(lambda x: float(np.asarray(expr.eval_value(x, 0.0, 0.0, 0.0))), problem.grid)
    if pf.candidate_csv is not None:
        return GridFunction.from_csv(pf.candidate_csv)
    return None
