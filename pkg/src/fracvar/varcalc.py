"""Optimality conditions as computable residuals.

Convention for the restricted-interval functional: the Caputo values fed into
the integrand always use the full operator interval [a, b], while the
Riemann-Liouville derivatives appearing in the residual system switch their
limits to the integration interval [A, B].  Conflating the two intervals is
the natural implementation mistake; keeping the split explicit here is the
point of this module.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .expr import Binary, Const, Lagrangian
from .grid import Grid, GridFunction, interior_sup, trapezoid_integral
from .operators import Order, as_order, caputo_left, caputo_right, rl_deriv_left, rl_deriv_right, rl_integral_right


class BoundaryMismatchError(ValueError):
    """Candidate does not meet the problem's boundary values."""


class MisuseError(ValueError):
    """Operation called with a Lagrangian outside its supported variable set."""


@dataclass(frozen=True)
class VariationalProblem:
    """Functional data: integrand, operator interval [a,b], integration
    interval [A,B] (snapped to grid nodes), orders, boundary values, grid size."""

    L: Lagrangian
    a: float
    b: float
    alpha: Order
    beta: Order
    ya: float
    yb: float
    grid_n: int
    A: float = None  # type: ignore[assignment]
    B: float = None  # type: ignore[assignment]
    snap_distance: float = field(default=0.0, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", as_order(self.alpha))
        object.__setattr__(self, "beta", as_order(self.beta))
        A = self.a if self.A is None else self.A
        B = self.b if self.B is None else self.B
        if not (self.a <= A < B <= self.b):
            raise ValueError(f"need a <= A < B <= b, got a={self.a} A={A} B={B} b={self.b}")
        grid = Grid(self.a, self.b, self.grid_n)
        iA, iB = grid.index_of(A), grid.index_of(B)
        snapped_A, snapped_B = float(grid.nodes[iA]), float(grid.nodes[iB])
        object.__setattr__(self, "snap_distance", max(abs(snapped_A - A), abs(snapped_B - B)))
        object.__setattr__(self, "A", snapped_A)
        object.__setattr__(self, "B", snapped_B)

    @property
    def grid(self) -> Grid:
        return Grid(self.a, self.b, self.grid_n)

    @property
    def iA(self) -> int:
        return self.grid.index_of(self.A)

    @property
    def iB(self) -> int:
        return self.grid.index_of(self.B)

    @property
    def full_interval(self) -> bool:
        return self.iA == 0 and self.iB == self.grid_n - 1


@dataclass(frozen=True)
class IsoConstraint:
    g: Lagrangian
    l: float


@dataclass(frozen=True)
class Multipliers:
    lambda0: float
    lam: float
    normal: bool

    def __post_init__(self) -> None:
        if self.lambda0 == 0.0 and self.lam == 0.0:
            raise ValueError("multipliers (0, 0) are not allowed")
        if self.normal and self.lambda0 != 1.0:
            raise ValueError("normal multipliers require lambda0 = 1")


@dataclass(frozen=True)
class ELReport:
    """Per-subinterval residual grids, their interior sup norms, and a verdict."""

    residual_mid: GridFunction
    residual_left: Optional[GridFunction]
    residual_right: Optional[GridFunction]
    sup_left: float
    sup_mid: float
    sup_right: float
    tolerance: float
    verdict: bool

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["segment", "x", "residual"])
            for name, gf in (
                ("left", self.residual_left),
                ("mid", self.residual_mid),
                ("right", self.residual_right),
            ):
                if gf is None:
                    continue
                for x, v in zip(gf.nodes, gf.values):
                    writer.writerow([name, f"{x:.17g}", f"{v:.17g}"])

    def summary_line(self) -> str:
        return (
            f"{self.sup_left:.17g},{self.sup_mid:.17g},{self.sup_right:.17g},"
            f"{str(self.verdict).lower()}"
        )


def partial_fields(
    L: Lagrangian, y: GridFunction, p: VariationalProblem
) -> tuple[GridFunction, GridFunction, GridFunction]:
    """Assemble the partials of L along [y] as grid functions of x.

    Caputo inputs for unused variables are skipped entirely, so absent terms
    produce exact-zero fields.
    """
    grid = y.grid
    x = grid.nodes
    zeros = np.zeros(grid.n)
    u = caputo_left(y, p.alpha).values if "ca" in L.variables else zeros
    v = caputo_right(y, p.beta).values if "cb" in L.variables else zeros
    _, _, d2, d3, d4 = L.eval_with_partials(x, y.values, u, v)
    as_field = lambda d: GridFunction(grid, np.broadcast_to(np.asarray(d, dtype=float), (grid.n,)).copy())
    return as_field(d2), as_field(d3), as_field(d4)


def adaptive_tolerance(p: VariationalProblem, fields: tuple[GridFunction, ...]) -> float:
    """Default residual tolerance: 10 h^min(alpha,beta), scaled by the fields'
    natural magnitude (worst-case order of the L1 scheme near endpoints)."""
    h = p.grid.h
    scale = max(1.0, sum(interior_sup(f) for f in fields))
    return 10.0 * h ** min(float(p.alpha), float(p.beta)) * scale


def _sub_fn(f: GridFunction, i0: int, i1: int) -> GridFunction:
    return GridFunction(f.grid.subgrid(i0, i1), f.values[i0 : i1 + 1])


def _check_boundary(p: VariationalProblem, y: GridFunction, check_b: bool = True) -> None:
    if abs(y.values[0] - p.ya) > 1e-10 or (check_b and abs(y.values[-1] - p.yb) > 1e-10):
        raise BoundaryMismatchError(
            f"candidate endpoints ({y.values[0]:g}, {y.values[-1]:g}) do not match "
            f"boundary values ({p.ya:g}, {p.yb:g})"
        )


def _report(mid, left, right, tol) -> ELReport:
    sup_m = interior_sup(mid)
    sup_l = interior_sup(left) if left is not None else 0.0
    sup_r = interior_sup(right) if right is not None else 0.0
    return ELReport(mid, left, right, sup_l, sup_m, sup_r, tol,
                    max(sup_l, sup_m, sup_r) <= tol)


def _assemble(p: VariationalProblem, L: Lagrangian, y: GridFunction, tol: Optional[float]):
    """Shared core of el_residual and el_residual_restricted."""
    P2, P3, P4 = partial_fields(L, y, p)
    if tol is None:
        tol = adaptive_tolerance(p, (P2, P3, P4))
    n, iA, iB = p.grid_n, p.iA, p.iB
    has3 = "ca" in L.variables
    has4 = "cb" in L.variables

    # mid equation on [A,B]: P2 + D_right(limit B) P3 + D_left(limit A) P4
    mid_vals = P2.values[iA : iB + 1].copy()
    if has3:
        d3B = rl_deriv_right(_sub_fn(P3, 0, iB), p.alpha)  # on [a,B]
        mid_vals += d3B.values[iA : iB + 1]
    if has4:
        d4A = rl_deriv_left(_sub_fn(P4, iA, n - 1), p.beta)  # on [A,b]
        mid_vals += d4A.values[0 : iB - iA + 1]
    mid = GridFunction(p.grid.subgrid(iA, iB), mid_vals)

    left = right = None
    if iA > 0:
        left_vals = np.zeros(iA + 1)
        if has3:
            d3A = rl_deriv_right(_sub_fn(P3, 0, iA), p.alpha)  # on [a,A]
            left_vals = d3B.values[0 : iA + 1] - d3A.values
        left = GridFunction(p.grid.subgrid(0, iA), left_vals)
    if iB < n - 1:
        right_vals = np.zeros(n - iB)
        if has4:
            d4B = rl_deriv_left(_sub_fn(P4, iB, n - 1), p.beta)  # on [B,b]
            right_vals = d4A.values[iB - iA :] - d4B.values
        right = GridFunction(p.grid.subgrid(iB, n - 1), right_vals)
    return _report(mid, left, right, tol)


def el_residual(p: VariationalProblem, y: GridFunction, tol: Optional[float] = None) -> ELReport:
    """Euler-Lagrange residual P2 + D_right^alpha P3 + D_left^beta P4 on [a,b]."""
    if not p.full_interval:
        raise ValueError("el_residual expects A = a and B = b; use el_residual_restricted")
    _check_boundary(p, y)
    return _assemble(p, L=p.L, y=y, tol=tol)


def el_residual_restricted(
    p: VariationalProblem, y: GridFunction, tol: Optional[float] = None
) -> ELReport:
    """Three-part residual system for integration over [A,B] inside [a,b]."""
    _check_boundary(p, y)
    return _assemble(p, L=p.L, y=y, tol=tol)


def el_residual_free_endpoint(
    p: VariationalProblem, y: GridFunction, tol: Optional[float] = None
) -> tuple[ELReport, float]:
    """Left-Caputo-only problem with y(b) free: residual without the P4 term,
    plus the natural boundary value I_right^{1-alpha} P3 at x = b."""
    if "cb" in p.L.variables:
        raise MisuseError("free-endpoint form requires a Lagrangian in {x, y, ca} only")
    _check_boundary(p, y, check_b=False)
    P2, P3, P4 = partial_fields(p.L, y, p)
    if tol is None:
        tol = adaptive_tolerance(p, (P2, P3, P4))
    vals = P2.values.copy()
    if "ca" in p.L.variables:
        vals += rl_deriv_right(P3, p.alpha).values
    report = _report(GridFunction(p.grid, vals), None, None, tol)
    transversality = float(rl_integral_right(P3, Order(1.0 - float(p.alpha))).values[-1])
    return report, transversality


def augment(L: Lagrangian, g: Lagrangian, m: Multipliers) -> Lagrangian:
    """lambda0 * L + lambda * g at the AST level; partials combine linearly."""
    ast = Binary(
        "add",
        Binary("mul", Const(m.lambda0), L.ast),
        Binary("mul", Const(m.lam), g.ast),
    )
    return Lagrangian(ast, source=f"({m.lambda0:g})*({L.source}) + ({m.lam:g})*({g.source})",
                      ml_params=L.ml_params)


def scale_lagrangian(g: Lagrangian, c: float) -> Lagrangian:
    return Lagrangian(Binary("mul", Const(c), g.ast),
                      source=f"({c:g})*({g.source})", ml_params=g.ml_params)


def iso_extremal_check(
    g: Lagrangian, p: VariationalProblem, y: GridFunction, tol: Optional[float] = None
) -> bool:
    """True iff y annihilates the constraint integrand's own EL expression,
    which switches the multiplier rule to the abnormal form."""
    report = _assemble(p, L=g, y=y, tol=tol)
    return report.verdict


def constraint_value(g: Lagrangian, p: VariationalProblem, y: GridFunction) -> float:
    """I(y): trapezoid integral of g along [y] over [A,B]."""
    grid = y.grid
    zeros = np.zeros(grid.n)
    u = caputo_left(y, p.alpha).values if "ca" in g.variables else zeros
    v = caputo_right(y, p.beta).values if "cb" in g.variables else zeros
    vals = np.broadcast_to(
        np.asarray(g.eval_value(grid.nodes, y.values, u, v), dtype=float), (grid.n,)
    )
    integrand = GridFunction(grid.subgrid(p.iA, p.iB), vals[p.iA : p.iB + 1])
    return trapezoid_integral(integrand)


@dataclass(frozen=True)
class Box:
    """Sampling ranges for (x, y, u, v) in the convexity probe."""

    x: tuple[float, float]
    y: tuple[float, float]
    u: tuple[float, float]
    v: tuple[float, float]


def convexity_probe(
    f: Lagrangian, box: Box, samples: int = 200, seed: int = 0
) -> tuple[bool, Optional[tuple]]:
    """Randomized check of the first-order convexity inequality in (y, u, v).

    Draws seeded base points in the box and signed increments with magnitudes
    spanning [1e-3, 1]; returns the first violating tuple, if any.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        x0 = rng.uniform(*box.x)
        y0 = rng.uniform(*box.y)
        u0 = rng.uniform(*box.u)
        v0 = rng.uniform(*box.v)
        incs = 10.0 ** rng.uniform(-3.0, 0.0, size=3) * rng.choice([-1.0, 1.0], size=3)
        y1, u1, v1 = incs
        f0, _, d2, d3, d4 = f.eval_with_partials(x0, y0, u0, v0)
        f1 = float(np.asarray(f.eval_value(x0, y0 + y1, u0 + u1, v0 + v1)))
        linear = d2 * y1 + d3 * u1 + d4 * v1
        scale = max(1.0, abs(f0), abs(f1))
        if f1 - f0 < linear - 1e-9 * scale:
            return False, (x0, y0, u0, v0, y1, u1, v1)
    return True, None


@dataclass(frozen=True)
class SufficiencyReport:
    convex_objective: bool
    convex_constraint: Optional[bool]
    counterexample: Optional[tuple]
    el_report: ELReport
    verdict: bool


def sufficiency_report(
    L: Lagrangian,
    g: Optional[Lagrangian],
    m: Optional[Multipliers],
    p: VariationalProblem,
    y: GridFunction,
    box: Box,
    samples: int = 200,
    seed: int = 0,
    tol: Optional[float] = None,
) -> SufficiencyReport:
    """Convexity of the objective (and of lambda*g when constrained) plus a
    small EL residual of the augmented integrand certify a global minimum."""
    if g is not None and m is None:
        raise ValueError("a constraint needs multipliers")
    ok_L, cex = convexity_probe(L, box, samples, seed)
    ok_g = None
    if g is not None:
        assert m is not None
        ok_g, cex_g = convexity_probe(scale_lagrangian(g, m.lam), box, samples, seed)
        if cex is None:
            cex = cex_g
    F = augment(L, g, m) if g is not None else L
    augmented_problem = VariationalProblem(
        L=F, a=p.a, b=p.b, alpha=p.alpha, beta=p.beta,
        ya=p.ya, yb=p.yb, grid_n=p.grid_n, A=p.A, B=p.B,
    )
    report = _assemble(augmented_problem, L=F, y=y, tol=tol)
    _check_boundary(p, y)
    verdict = ok_L and (ok_g is not False) and report.verdict
    return SufficiencyReport(ok_L, ok_g, cex, report, verdict)
