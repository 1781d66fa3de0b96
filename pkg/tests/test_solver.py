import numpy as np
import pytest

from fracvar.expr import Lagrangian
from fracvar.grid import sample
from fracvar.mittag import ml_power
from fracvar.solver import (
    BracketFailureError,
    ConstraintViolationError,
    ObjectiveNonFiniteError,
    RitzConfig,
    abnormal_probe,
    alpha_sweep,
    example_boundary_value,
    iso_solve,
    ritz_minimize,
    summary_record,
    write_sweep_csv,
)
from fracvar.varcalc import IsoConstraint, VariationalProblem

from conftest import EIG_CONSTRAINT_TARGET

ALPHA = 0.5
YB = float(ml_power(ALPHA, 1.0))


def eigen_problem(n=513):
    return VariationalProblem(
        L=Lagrangian.parse("ca^2"), a=0.0, b=1.0, alpha=ALPHA, beta=ALPHA,
        ya=1.0, yb=YB, grid_n=n,
    )


def eigen_constraint():
    return IsoConstraint(Lagrangian.parse("ml(0.5, x^0.5)*ca"), EIG_CONSTRAINT_TARGET)


def tracking_problem(n=129):
    return VariationalProblem(
        L=Lagrangian.parse("(y - x)^2"), a=0.0, b=1.0, alpha=0.5, beta=0.5,
        ya=0.0, yb=1.0, grid_n=n,
    )


class TestRitzConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            RitzConfig(n_basis=-1)
        with pytest.raises(ValueError):
            RitzConfig(grad_step=0.0)
        assert RitzConfig().n_basis == 12


class TestRitzMinimize:
    def test_tracking_problem_recovers_line(self):
        # the boundary line is x itself, which zeroes the integrand
        r = ritz_minimize(tracking_problem(), RitzConfig(n_basis=8))
        assert r.converged
        assert r.objective <= 1e-10
        assert np.max(np.abs(r.coefficients)) <= 1e-6

    def test_zero_basis_returns_boundary_line(self):
        p = tracking_problem(n=65)
        r = ritz_minimize(p, RitzConfig(n_basis=0))
        np.testing.assert_allclose(r.y.values, p.grid.nodes, atol=1e-14)
        assert r.converged and r.iterations == 0

    def test_objective_improves_with_basis_size(self):
        p = eigen_problem(n=513)
        r4 = ritz_minimize(p, RitzConfig(n_basis=4))
        r8 = ritz_minimize(p, RitzConfig(n_basis=8))
        assert r8.objective <= r4.objective + 1e-9

    def test_non_finite_objective_raises(self):
        p = VariationalProblem(
            L=Lagrangian.parse("exp(1000*y)"), a=0.0, b=1.0, alpha=0.5, beta=0.5,
            ya=1.0, yb=1.0, grid_n=65,
        )
        with pytest.raises(ObjectiveNonFiniteError), np.errstate(over="ignore"):
            ritz_minimize(p, RitzConfig(n_basis=2))

    def test_penalty_term_steers_solution(self):
        # heavy penalty on (integral of y)^2 pulls the average of y toward 0
        p = tracking_problem(n=65)
        plain = ritz_minimize(p, RitzConfig(n_basis=6))
        pen = ritz_minimize(
            p, RitzConfig(n_basis=6), extra_penalty=(Lagrangian.parse("y"), 50.0)
        )
        assert np.trapezoid(pen.y.values, dx=p.grid.h) < np.trapezoid(
            plain.y.values, dx=p.grid.h
        )

    def test_boundary_values_always_honored(self):
        p = eigen_problem(n=129)
        r = ritz_minimize(p, RitzConfig(n_basis=6))
        assert r.y.values[0] == pytest.approx(1.0, abs=1e-12)
        assert r.y.values[-1] == pytest.approx(YB, abs=1e-12)


class TestIsoSolve:
    def test_state_constraint_trivial_multiplier(self):
        # target already attained by the unconstrained minimum: lambda = 0
        res = iso_solve(
            tracking_problem(), IsoConstraint(Lagrangian.parse("y"), 0.5),
            RitzConfig(n_basis=8), (-10.0, 10.0),
        )
        assert res.converged
        assert abs(res.multipliers.lam) <= 1e-6
        assert np.max(np.abs(res.y.values - res.y.grid.nodes)) <= 1e-6

    def test_eigen_problem_small_grid(self):
        res = iso_solve(
            eigen_problem(n=129), eigen_constraint(), RitzConfig(n_basis=8),
            (-10.0, 10.0),
        )
        assert res.converged
        assert res.multipliers.normal and res.multipliers.lambda0 == 1.0
        assert res.multipliers.lam == pytest.approx(-2.0, abs=0.3)

    def test_unreachable_target_raises(self):
        with pytest.raises(BracketFailureError):
            iso_solve(
                tracking_problem(), IsoConstraint(Lagrangian.parse("y"), 100.0),
                RitzConfig(n_basis=8), (-10.0, 10.0),
            )

    def test_bad_bracket_rejected(self):
        with pytest.raises(ValueError):
            iso_solve(
                tracking_problem(), IsoConstraint(Lagrangian.parse("y"), 0.5),
                RitzConfig(n_basis=4), (3.0, 3.0),
            )

    def test_deterministic_reruns(self):
        args = (
            tracking_problem(), IsoConstraint(Lagrangian.parse("y"), 0.5),
            RitzConfig(n_basis=8), (-10.0, 10.0),
        )
        a = iso_solve(*args)
        b = iso_solve(*args)
        assert a.multipliers.lam == b.multipliers.lam
        np.testing.assert_array_equal(a.y.values, b.y.values)


class TestAbnormalProbe:
    def test_abnormal_fixture(self):
        # constant candidate extremizes the quadratic constraint energy
        p = VariationalProblem(
            L=Lagrangian.parse("y"), a=0.0, b=1.0, alpha=0.5, beta=0.5,
            ya=2.0, yb=2.0, grid_n=257,
        )
        y = sample(lambda x: 2.0, p.grid)
        m = abnormal_probe(p, IsoConstraint(Lagrangian.parse("ca^2"), 0.0), y)
        assert (m.lambda0, m.lam, m.normal) == (0.0, 1.0, False)

    def test_normal_fixture(self):
        p = eigen_problem(n=513)
        ybar = sample(lambda x: float(ml_power(ALPHA, x)), p.grid)
        m = abnormal_probe(p, eigen_constraint(), ybar, tol=5e-2)
        assert m.normal and m.lambda0 == 1.0

    def test_constraint_violation_rejected(self):
        p = VariationalProblem(
            L=Lagrangian.parse("y"), a=0.0, b=1.0, alpha=0.5, beta=0.5,
            ya=2.0, yb=2.0, grid_n=257,
        )
        y = sample(lambda x: 2.0, p.grid)
        with pytest.raises(ConstraintViolationError):
            abnormal_probe(p, IsoConstraint(Lagrangian.parse("ca^2"), 5.0), y)


class TestAlphaSweep:
    def test_empty_list(self):
        assert alpha_sweep(lambda a: (tracking_problem(), None), [], RitzConfig()) == []

    def test_failures_are_isolated(self):
        def make(alpha):
            if alpha == 0.77:
                raise RuntimeError("boom")
            return tracking_problem(n=65), None

        entries = alpha_sweep(make, [0.5, 0.77], RitzConfig(n_basis=4))
        assert entries[0].result is not None and entries[0].error is None
        assert entries[1].result is None and "boom" in entries[1].error

    def test_unconstrained_entries_have_zero_multiplier(self):
        entries = alpha_sweep(
            lambda a: (tracking_problem(n=65), None), [0.5], RitzConfig(n_basis=4)
        )
        assert entries[0].result.multipliers.lam == 0.0


class TestHelpers:
    def test_example_boundary_value(self):
        assert example_boundary_value(0.5, 1.0) == pytest.approx(YB)
        assert example_boundary_value(0.5, 0.0) == 1.0

    def test_summary_record_layout(self):
        res = iso_solve(
            tracking_problem(n=65), IsoConstraint(Lagrangian.parse("y"), 0.5),
            RitzConfig(n_basis=4), (-10.0, 10.0),
        )
        rec = summary_record(0.5, res)
        parts = rec.split(",")
        assert len(parts) == 6
        assert float(parts[0]) == 0.5 and parts[5] in ("true", "false")

    def test_write_sweep_csv(self, tmp_path):
        entries = alpha_sweep(
            lambda a: (tracking_problem(n=65), None), [0.4, 0.6], RitzConfig(n_basis=2)
        )
        out = tmp_path / "sweep.csv"
        write_sweep_csv(out, entries)
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "alpha,x,y"
        assert len(lines) == 1 + 2 * 65
