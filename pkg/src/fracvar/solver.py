"""Direct (Ritz) minimization and the outer multiplier search.

The trial space is the boundary line plus coefficients on interior basis
functions vanishing at both endpoints.  The basis is sines, with the first
slot(s) replaced by fractional boundary correctors ((x-a)/(b-a))^alpha-type
functions when the integrand uses a Caputo derivative: extremals of these
problems generically behave like (x-a)^alpha near the left endpoint and pure
sine expansions stall at ~5e-2 sup error there.

The isoperimetric multiplier is found by bisection on
phi(lambda) = I(y_lambda) - l, where y_lambda minimizes the augmented
functional; phi is monotone for convex objectives with constraint integrands
affine in the derivative, which covers the problems this solver targets.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from .expr import Lagrangian, fold_x
from .grid import GridFunction, trapezoid_weights
from .mittag import ml_power
from .operators import caputo_left, caputo_right
from .varcalc import (
    ELReport,
    IsoConstraint,
    Multipliers,
    VariationalProblem,
    augment,
    constraint_value,
    el_residual,
    iso_extremal_check,
)


class ObjectiveNonFiniteError(ValueError):
    """Discretized objective is NaN/inf at the starting point."""


class BracketFailureError(ValueError):
    """phi(lambda) has no sign change on the (widened) bracket."""


class ConstraintViolationError(ValueError):
    """Candidate does not satisfy the integral constraint."""


@dataclass(frozen=True)
class RitzConfig:
    n_basis: int = 12
    max_iters: int = 500
    grad_step: float = 1e-5
    tol_obj: float = 1e-12
    tol_grad: float = 1e-8

    def __post_init__(self) -> None:
        if self.n_basis < 0:
            raise ValueError("n_basis must be non-negative")
        for name in ("grad_step", "tol_obj", "tol_grad"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class RitzResult:
    y: GridFunction
    objective: float
    iterations: int
    converged: bool
    coefficients: np.ndarray


@dataclass(frozen=True)
class IsoSolveResult:
    y: GridFunction
    multipliers: Multipliers
    constraint_residual: float
    objective: float
    el_report: ELReport
    iterations: int
    converged: bool


class _RitzSpace:
    """Precomputed linear responses: the fractional operators are linear in y,
    so the Caputo values of the trial function are affine in the coefficients."""

    def __init__(self, p: VariationalProblem, n_basis: int):
        grid = p.grid
        x = grid.nodes
        a, b = p.a, p.b
        s = (x - a) / (b - a)
        self.grid = grid
        self.x = x
        self.line = p.ya + (p.yb - p.ya) * s
        funcs = []
        if n_basis >= 1 and "ca" in p.L.variables:
            funcs.append(s ** float(p.alpha) * (1.0 - s))
        if n_basis >= 2 and "cb" in p.L.variables:
            funcs.append((1.0 - s) ** float(p.beta) * s)
        k = 1
        while len(funcs) < n_basis:
            funcs.append(np.sin(k * np.pi * s))
            k += 1
        self.Phi = np.stack(funcs, axis=1) if funcs else np.zeros((grid.n, 0))
        self.u_line, self.U = self._responses(p, "ca", caputo_left, p.alpha)
        self.v_line, self.V = self._responses(p, "cb", caputo_right, p.beta)
        self.w = trapezoid_weights(grid)
        self.iA, self.iB = p.iA, p.iB
        self._folded: dict[int, tuple[Lagrangian, object]] = {}

    def _responses(self, p, var, op, order):
        if var not in _all_vars(p):
            z = np.zeros(self.grid.n)
            return z, np.zeros_like(self.Phi)
        line_resp = op(GridFunction(self.grid, self.line), order).values
        cols = [op(GridFunction(self.grid, self.Phi[:, k]), order).values
                for k in range(self.Phi.shape[1])]
        mat = np.stack(cols, axis=1) if cols else np.zeros_like(self.Phi)
        return line_resp, mat

    def y_values(self, c: np.ndarray) -> np.ndarray:
        return self.line + self.Phi @ c

    def states(self, c: np.ndarray):
        return (self.y_values(c), self.u_line + self.U @ c, self.v_line + self.V @ c)

    def _evaluator(self, L: Lagrangian) -> Lagrangian:
        # The x-only factors of the integrand are constant across the inner
        # loop's thousands of coefficient evaluations; fold them once.
        hit = self._folded.get(id(L))
        if hit is not None and hit[0] is L:
            return hit[1]
        folded = Lagrangian(fold_x(L.ast, self.x, L.ml_params),
                            source=L.source, ml_params=L.ml_params)
        self._folded[id(L)] = (L, folded)
        return folded

    def integral(self, L: Lagrangian, c: np.ndarray) -> float:
        y, u, v = self.states(c)
        vals = np.broadcast_to(
            np.asarray(self._evaluator(L).eval_value(self.x, y, u, v), dtype=float),
            (self.grid.n,),
        )
        w = self.w[self.iA : self.iB + 1].copy()
        w[0] = w[-1] = self.grid.h / 2  # trapezoid on the integration subinterval
        return float(w @ vals[self.iA : self.iB + 1])


def _all_vars(p: VariationalProblem) -> set[str]:
    return set(p.L.variables)


def _with_integrand(p: VariationalProblem, L: Lagrangian) -> VariationalProblem:
    return replace(p, L=L, A=p.A, B=p.B)


def ritz_minimize(
    p: VariationalProblem,
    cfg: RitzConfig,
    extra_penalty: Optional[tuple[Lagrangian, float]] = None,
    initial_coefficients: Optional[np.ndarray] = None,
) -> RitzResult:
    """Minimize the discretized functional over the trial-space coefficients.

    ``extra_penalty = (integrand, weight)`` adds weight * (integral of the
    integrand)^2 to the objective.  Gradients are central finite differences
    on the coefficients; the descent is BFGS with line search, so the accepted
    objective sequence is non-increasing.
    """
    space = _RitzSpace(p, cfg.n_basis)

    def objective(c: np.ndarray) -> float:
        val = space.integral(p.L, c)
        if extra_penalty is not None:
            pen_integrand, weight = extra_penalty
            val += weight * space.integral(pen_integrand, c) ** 2
        return val

    c0 = np.zeros(space.Phi.shape[1]) if initial_coefficients is None else np.asarray(
        initial_coefficients, dtype=float
    )
    return _minimize_on_space(space, cfg, objective, c0)


def _minimize_on_space(space: _RitzSpace, cfg: RitzConfig, objective, c0) -> RitzResult:
    if c0.size == 0:
        y = GridFunction(space.grid, space.line)
        return RitzResult(y, objective(c0), 0, True, c0)

    f0 = objective(c0)
    if not np.isfinite(f0):
        raise ObjectiveNonFiniteError(f"objective is {f0!r} at the initial point")

    def gradient(c: np.ndarray) -> np.ndarray:
        g = np.empty_like(c)
        for k in range(c.size):
            step = cfg.grad_step * max(1.0, abs(c[k]))
            e = np.zeros_like(c)
            e[k] = step
            g[k] = (objective(c + e) - objective(c - e)) / (2.0 * step)
        return g

    res = optimize.minimize(
        objective,
        c0,
        jac=gradient,
        method="BFGS",
        options={"gtol": cfg.tol_grad, "maxiter": cfg.max_iters},
    )
    converged = bool(res.success) or float(np.max(np.abs(res.jac))) <= 10 * cfg.tol_grad
    y = GridFunction(space.grid, space.y_values(res.x))
    return RitzResult(y, float(res.fun), int(res.nit), converged, res.x)


def iso_solve(
    p: VariationalProblem,
    c: IsoConstraint,
    cfg: RitzConfig,
    lambda_bracket: tuple[float, float],
    constraint_tol: float = 1e-6,
) -> IsoSolveResult:
    """Outer bisection on the multiplier, inner Ritz solve of the augmented
    functional; the result certifies the stationarity equation of the
    augmented integrand at (y, lambda)."""
    lo, hi = map(float, lambda_bracket)
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise ValueError(f"bad bracket {lambda_bracket!r}")

    inner_iters = 0
    # One precomputed space serves every inner solve: the augmented integrand
    # is linear in lambda, so I_F(c) = I_L(c) + lambda * I_g(c).
    space = _RitzSpace(
        _with_integrand(p, augment(p.L, c.g, Multipliers(1.0, 1.0, True))), cfg.n_basis
    )
    warm = np.zeros(space.Phi.shape[1])

    def solve_at(lam: float) -> RitzResult:
        nonlocal warm
        r = _minimize_on_space(
            space, cfg,
            lambda cv: space.integral(p.L, cv) + lam * space.integral(c.g, cv),
            warm,
        )
        warm = r.coefficients
        return r

    def phi(lam: float) -> tuple[float, RitzResult]:
        r = solve_at(lam)
        return constraint_value(c.g, p, r.y) - c.l, r

    phi_lo, r_lo = phi(lo)
    phi_hi, r_hi = phi(hi)
    inner_iters += r_lo.iterations + r_hi.iterations
    if np.sign(phi_lo) == np.sign(phi_hi):
        mid = 0.5 * (lo + hi)
        half = 2.0 * (hi - lo)  # widen once by 4x about the center
        lo, hi = mid - half, mid + half
        phi_lo, r_lo = phi(lo)
        phi_hi, r_hi = phi(hi)
        inner_iters += r_lo.iterations + r_hi.iterations
        if np.sign(phi_lo) == np.sign(phi_hi):
            raise BracketFailureError(
                f"phi has no sign change on [{lo:g}, {hi:g}] "
                f"(phi={phi_lo:g}, {phi_hi:g}); the problem may be abnormal or "
                "the target unreachable"
            )

    lam, phi_mid, result = lo, phi_lo, r_lo
    tol_phi = constraint_tol * max(1.0, abs(c.l))
    for _ in range(60):
        lam = 0.5 * (lo + hi)
        phi_mid, result = phi(lam)
        inner_iters += result.iterations
        if abs(phi_mid) <= tol_phi or (hi - lo) <= 1e-12 * max(1.0, abs(lam)):
            break
        if np.sign(phi_mid) == np.sign(phi_lo):
            lo, phi_lo = lam, phi_mid
        else:
            hi = lam
    converged = result.converged and abs(phi_mid) <= tol_phi

    F = augment(p.L, c.g, Multipliers(1.0, lam, True))
    report = el_residual(_with_integrand(p, F), result.y)
    return IsoSolveResult(
        y=result.y,
        multipliers=Multipliers(1.0, lam, True),
        constraint_residual=abs(phi_mid),
        objective=constraint_value(p.L, p, result.y),
        el_report=report,
        iterations=inner_iters,
        converged=converged,
    )


def abnormal_probe(
    p: VariationalProblem,
    c: IsoConstraint,
    y_candidate: GridFunction,
    tol: Optional[float] = None,
) -> Multipliers:
    """Decide which multiplier rule applies at an admissible candidate.

    If the candidate extremizes the constraint functional itself, the
    abnormal certificate (lambda0, lambda) = (0, 1) is returned; otherwise the
    normal form with lambda0 = 1 applies and the multiplier is the solver's
    job to find.
    """
    check_tol = tol if tol is not None else 1e-6 * max(1.0, abs(c.l))
    violation = abs(constraint_value(c.g, p, y_candidate) - c.l)
    if violation > check_tol:
        raise ConstraintViolationError(
            f"candidate misses the constraint target by {violation:g}"
        )
    if iso_extremal_check(c.g, p, y_candidate, tol):
        return Multipliers(0.0, 1.0, False)
    return Multipliers(1.0, float("nan"), True)


@dataclass(frozen=True)
class SweepEntry:
    alpha: float
    result: Optional[IsoSolveResult]
    error: Optional[str] = None


def alpha_sweep(
    make_problem: Callable[[float], tuple[VariationalProblem, Optional[IsoConstraint]]],
    alphas: list[float],
    cfg: RitzConfig,
    lambda_bracket: tuple[float, float] = (-10.0, 10.0),
) -> list[SweepEntry]:
    """Independent solves per order; failures are recorded, not raised."""
    entries: list[SweepEntry] = []
    for alpha in alphas:
        try:
            p, c = make_problem(alpha)
            if c is not None:
                res = iso_solve(p, c, cfg, lambda_bracket)
            else:
                r = ritz_minimize(p, cfg)
                report = el_residual(p, r.y)
                res = IsoSolveResult(
                    y=r.y,
                    multipliers=Multipliers(1.0, 0.0, True),
                    constraint_residual=0.0,
                    objective=r.objective,
                    el_report=report,
                    iterations=r.iterations,
                    converged=r.converged,
                )
            entries.append(SweepEntry(alpha, res))
        except Exception as exc:  # per-alpha isolation by contract
            entries.append(SweepEntry(alpha, None, f"{type(exc).__name__}: {exc}"))
    return entries


def example_boundary_value(alpha: float, x: float) -> float:
    """E_alpha(x^alpha): boundary datum and reference extremal of the
    eigenfunction problem."""
    return ml_power(alpha, x).value


def write_solution_csv(path, y: GridFunction) -> None:
    y.to_csv(path)


def write_sweep_csv(path, entries: list[SweepEntry]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["alpha", "x", "y"])
        for e in entries:
            if e.result is None:
                continue
            for x, v in zip(e.result.y.nodes, e.result.y.values):
                writer.writerow([f"{e.alpha:.17g}", f"{x:.17g}", f"{v:.17g}"])


def summary_record(alpha: float, res: IsoSolveResult) -> str:
    return (
        f"{alpha:.17g},{res.multipliers.lam:.17g},{res.objective:.17g},"
        f"{res.constraint_residual:.17g},{res.el_report.sup_mid:.17g},"
        f"{str(res.converged).lower()}"
    )
