import math

import numpy as np
import pytest

from fracvar.expr import (
    Binary,
    Const,
    ExprDomainError,
    ExprSyntaxError,
    Lagrangian,
    MLCall,
    Unary,
    UnknownIdentifierError,
    Var,
    parse,
    pretty,
    same_structure,
    used_variables,
)
from fracvar.mittag import ml_power


class TestParser:
    def test_simple_power(self):
        ast = parse("ca^2")
        assert same_structure(ast, Binary("pow", Var("ca"), Const(2.0)))

    def test_precedence(self):
        # a + b*c^2 parses as a + (b * (c^2))
        ast = parse("x + y*ca^2")
        expected = Binary(
            "add", Var("x"), Binary("mul", Var("y"), Binary("pow", Var("ca"), Const(2.0)))
        )
        assert same_structure(ast, expected)

    def test_power_right_associative(self):
        assert same_structure(
            parse("x^2^3"),
            Binary("pow", Var("x"), Binary("pow", Const(2.0), Const(3.0))),
        )

    def test_unary_minus_binds_looser_than_power(self):
        # -x^2 is -(x^2)
        assert same_structure(
            parse("-x^2"), Unary("neg", Binary("pow", Var("x"), Const(2.0)))
        )

    def test_ml_call_literal_order(self):
        ast = parse("ml(0.5, x^0.5)")
        assert same_structure(
            ast, MLCall(0.5, Binary("pow", Var("x"), Const(0.5)))
        )

    def test_ml_order_must_be_literal(self):
        with pytest.raises(ExprSyntaxError):
            parse("ml(x, 1)")

    def test_ml_order_must_be_positive(self):
        with pytest.raises(ExprSyntaxError):
            parse("ml(-0.5, 1)")

    def test_syntax_error_reports_offset(self):
        with pytest.raises(ExprSyntaxError) as e:
            parse("2 + * 3")
        assert e.value.offset == 4

    def test_unknown_identifier_reports_name(self):
        with pytest.raises(UnknownIdentifierError) as e:
            parse("x + foo")
        assert e.value.name == "foo"
        assert e.value.offset == 4

    def test_unbalanced_parenthesis(self):
        with pytest.raises(ExprSyntaxError):
            parse("(x + y")

    def test_trailing_garbage(self):
        with pytest.raises(ExprSyntaxError):
            parse("x + y )")

    def test_scientific_literals(self):
        ast = parse("1e-3 * x + .5")
        val = Lagrangian(ast).eval_value(2.0, 0.0, 0.0, 0.0)
        assert float(np.asarray(val)) == pytest.approx(0.502)

    def test_used_variables(self):
        assert used_variables(parse("ca^2")) == {"ca"}
        assert used_variables(parse("x*y + cb")) == {"x", "y", "cb"}
        assert used_variables(parse("1 + 2")) == set()


class TestPretty:
    @pytest.mark.parametrize(
        "src",
        [
            "ca^2",
            "x + y*ca - cb/2",
            "-x^2 + sin(x)*cos(y)",
            "ml(0.5, x^0.5)*ca",
            "exp(-(x - 0.5)^2)",
            "sqrt(abs(y) + 1)",
        ],
    )
    def test_reparse_fixpoint(self, src):
        ast = parse(src)
        assert same_structure(parse(pretty(ast)), ast)


class TestEvaluation:
    def test_square_of_derivative_slot(self):
        L = Lagrangian.parse("ca^2")
        val, dx, dy, du, dv = L.eval_with_partials(0.3, 1.0, 3.0, 0.0)
        assert val == 9.0
        assert (dx, dy, du, dv) == (0.0, 0.0, 6.0, 0.0)

    def test_mixed_partials(self):
        L = Lagrangian.parse("y*cb + x")
        val, dx, dy, du, dv = L.eval_with_partials(2.0, 3.0, 0.0, 5.0)
        assert val == 17.0 and dx == 1.0 and dy == 5.0 and du == 0.0 and dv == 3.0

    def test_eigenfunction_integrand_cancellation(self):
        # dL/dca of ca^2 - 2*ml(a, x^a)*ca vanishes at ca = E_a(x^a)
        L = Lagrangian.parse("ca^2 - 2*ml(0.5, x^0.5)*ca")
        u = float(ml_power(0.5, 0.25))
        _, _, _, du, _ = L.eval_with_partials(0.25, 0.0, u, 0.0)
        assert abs(du) < 1e-12

    def test_array_evaluation_matches_scalar(self):
        L = Lagrangian.parse("sin(x)*y + ca^2 - cb/(1 + y^2)")
        xs = np.linspace(0.0, 1.0, 7)
        ys = np.linspace(-1.0, 1.0, 7)
        us = np.linspace(0.5, 2.0, 7)
        vs = np.linspace(-0.5, 0.5, 7)
        arr = L.eval_with_partials(xs, ys, us, vs)
        for i in range(7):
            sc = L.eval_with_partials(
                float(xs[i]), float(ys[i]), float(us[i]), float(vs[i])
            )
            for k in range(5):
                assert arr[k][i] == pytest.approx(sc[k], rel=1e-14, abs=1e-14)

    def test_eval_value_matches_full_pass(self):
        L = Lagrangian.parse("exp(y)*ca - log(x + 1)")
        xs = np.linspace(0.0, 1.0, 5)
        full = L.eval_with_partials(xs, xs, xs, xs)[0]
        fast = np.asarray(L.eval_value(xs, xs, xs, xs))
        np.testing.assert_allclose(fast, full, rtol=0, atol=1e-15)

    def test_division_by_zero_raises(self):
        L = Lagrangian.parse("1/y")
        with pytest.raises(ExprDomainError):
            L.eval_with_partials(0.0, 0.0, 0.0, 0.0)

    def test_log_of_nonpositive_raises(self):
        L = Lagrangian.parse("log(y)")
        with pytest.raises(ExprDomainError):
            L.eval_with_partials(0.0, -1.0, 0.0, 0.0)

    def test_sqrt_of_negative_raises(self):
        L = Lagrangian.parse("sqrt(y)")
        with pytest.raises(ExprDomainError):
            L.eval_with_partials(0.0, -1.0, 0.0, 0.0)

    def test_fractional_power_at_zero_has_one_sided_slope(self):
        # value is finite; the unbounded slope is carried, not raised
        L = Lagrangian.parse("x^0.5")
        val, dx, *_ = L.eval_with_partials(0.0, 0.0, 0.0, 0.0)
        assert val == 0.0 and math.isinf(dx)

    def test_variables_property(self):
        assert Lagrangian.parse("ca^2").variables == {"ca"}


# ---------------------------------------------------------------------------
# Random-AST property suite: dual-number partials vs central finite
# differences.  The generator only produces domain-safe expressions (log/sqrt
# guarded by abs + positive shift, denominators bounded away from zero,
# non-integer powers only of guarded-positive bases).
# ---------------------------------------------------------------------------
def _random_ast(rng, depth):
    if depth == 0:
        if rng.random() < 0.55:
            return Var(["x", "y", "ca", "cb"][rng.integers(4)])
        # literals are nonnegative; source-level negatives are unary minus
        c = Const(round(float(rng.uniform(0.0, 2.0)), 3))
        return Unary("neg", c) if rng.random() < 0.3 else c
    op = rng.choice(
        ["add", "sub", "mul", "div", "pow", "neg", "sin", "cos", "exp", "sqrt", "log", "ml"]
    )
    child = lambda: _random_ast(rng, depth - 1)
    if op in ("add", "sub", "mul"):
        return Binary(op, child(), child())
    if op == "div":
        # guarded denominator: |d| + 0.5 >= 0.5
        return Binary("div", child(), Binary("add", Unary("abs", child()), Const(0.5)))
    if op == "pow":
        return Binary("pow", child(), Const(float(rng.integers(1, 4))))
    if op in ("sqrt", "log"):
        return Unary(op, Binary("add", Unary("abs", child()), Const(0.25)))
    if op == "exp":
        # bounded argument keeps FD well conditioned
        return Unary("exp", Unary("sin", child()))
    if op == "ml":
        return MLCall(
            round(float(rng.uniform(0.3, 1.2)), 2), Unary("sin", child())
        )
    return Unary(op, child())


def test_dual_partials_match_finite_differences_100_random_asts():
    rng = np.random.default_rng(20240817)
    checked = 0
    while checked < 100:
        ast = _random_ast(rng, int(rng.integers(1, 5)))
        L = Lagrangian(ast)
        point = rng.uniform(-1.5, 1.5, 4)
        try:
            base = L.eval_with_partials(*point)
        except ExprDomainError:
            continue
        if not all(np.isfinite(v) for v in base):
            continue
        h = 1e-6
        ok_point = True
        fds = []
        for k in range(4):
            lo = point.copy()
            hi = point.copy()
            lo[k] -= h
            hi[k] += h
            try:
                f_lo = L.eval_with_partials(*lo)[0]
                f_hi = L.eval_with_partials(*hi)[0]
            except ExprDomainError:
                ok_point = False
                break
            fds.append((f_hi - f_lo) / (2.0 * h))
        if not ok_point:
            continue
        for k in range(4):
            exact = base[1 + k]
            scale = max(1.0, abs(exact), abs(fds[k]))
            # central FD itself is O(h^2) accurate; 1e-5 relative bound
            assert abs(exact - fds[k]) <= 1e-5 * scale, (
                f"partial {k} mismatch for {pretty(ast)} at {point}: "
                f"dual={exact} fd={fds[k]}"
            )
        checked += 1


def test_random_ast_pretty_fixpoint_and_determinism():
    rng = np.random.default_rng(99)
    for _ in range(50):
        ast = _random_ast(rng, int(rng.integers(1, 5)))
        assert same_structure(parse(pretty(ast)), ast)
        L = Lagrangian(ast)
        try:
            a = L.eval_with_partials(0.4, -0.3, 0.8, 0.1)
            b = L.eval_with_partials(0.4, -0.3, 0.8, 0.1)
        except ExprDomainError:
            continue
        assert a == b  # bit-identical reruns
