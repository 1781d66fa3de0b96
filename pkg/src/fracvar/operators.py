"""Fractional operators of order 0 < alpha < 1 on uniform grids.

Riemann-Liouville integrals use a product-trapezoid rule: the weakly singular
kernel is integrated exactly against the piecewise-linear interpolant of the
data.  Caputo derivatives are the L1-type composition I^{1-alpha} d/dx, and
Riemann-Liouville derivatives are recovered from the Caputo ones through the
boundary-term relation, so the x = a (resp. x = b) singularity of the RL
derivative of a function with f(a) != 0 appears as an explicit ``inf``
sentinel on the boundary node rather than a large garbage number.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .grid import GridFunction, derivative_fd, interior_sup, trapezoid_integral
from .mittag import gamma


@dataclass(frozen=True)
class Order:
    """Fractional order, strictly inside (0, 1)."""

    value: float

    def __post_init__(self) -> None:
        if not (0.0 < self.value < 1.0):
            raise ValueError(f"order must lie in (0, 1), got {self.value!r}")

    def __float__(self) -> float:
        return self.value


def as_order(alpha) -> Order:
    return alpha if isinstance(alpha, Order) else Order(float(alpha))


class OperatorKind(enum.Enum):
    LEFT_RL_INTEGRAL = enum.auto()
    RIGHT_RL_INTEGRAL = enum.auto()
    LEFT_RL_DERIVATIVE = enum.auto()
    RIGHT_RL_DERIVATIVE = enum.auto()
    LEFT_CAPUTO = enum.auto()
    RIGHT_CAPUTO = enum.auto()


def _product_trapezoid(values: np.ndarray, h: float, alpha: float) -> np.ndarray:
    """(1/Gamma(alpha)) * int_a^{x_i} (x_i - t)^{alpha-1} f(t) dt for every i.

    Exact for piecewise-linear f.  Interior weights depend only on i - j, so
    the bulk is one direct convolution; the j = 0 and j = i weights carry the
    end corrections.
    """
    n = values.size
    out = np.zeros(n)
    if n < 2:
        return out
    k = np.arange(1, n, dtype=float)
    conv_w = (k + 1) ** (alpha + 1) + (k - 1) ** (alpha + 1) - 2.0 * k ** (alpha + 1)
    i = np.arange(1, n, dtype=float)
    w0 = (i - 1) ** (alpha + 1) - (i - alpha - 1) * i**alpha
    inner = np.convolve(values[1:], conv_w)[: n - 2] if n > 2 else np.zeros(0)
    out[1:] = w0 * values[0] + values[1:]
    out[2:] += inner
    out[1:] *= h**alpha / gamma(alpha + 2.0)
    return out


def _reflected(f: GridFunction) -> GridFunction:
    return GridFunction(f.grid, f.values[::-1])


def rl_integral_left(f: GridFunction, alpha) -> GridFunction:
    a = float(as_order(alpha))
    return GridFunction(f.grid, _product_trapezoid(f.values, f.grid.h, a))


def rl_integral_right(f: GridFunction, alpha) -> GridFunction:
    # change of variables t -> a + b - t maps the right kernel onto the left one
    return _reflected(rl_integral_left(_reflected(f), alpha))


def caputo_left(f: GridFunction, alpha) -> GridFunction:
    """L1-type scheme: I^{1-alpha} applied to the finite-difference derivative.

    Assumes f is smooth enough for the second-order stencils; near a point
    where f' blows up the first few nodes carry O(1) error.
    """
    a = float(as_order(alpha))
    return rl_integral_left(derivative_fd(f), 1.0 - a)


def caputo_right(f: GridFunction, alpha) -> GridFunction:
    a = float(as_order(alpha))
    return -1.0 * rl_integral_right(derivative_fd(f), 1.0 - a)


def rl_deriv_left(f: GridFunction, alpha) -> GridFunction:
    a = float(as_order(alpha))
    cap = caputo_left(f, a)
    fa = f.values[0]
    if fa == 0.0:
        return cap
    x = f.grid.nodes
    corr = np.empty_like(x)
    corr[0] = math.copysign(math.inf, fa)  # (x-a)^{-alpha} pole at the boundary
    corr[1:] = fa * (x[1:] - f.grid.a) ** (-a) / gamma(1.0 - a)
    vals = cap.values + corr
    vals[0] = corr[0]
    return GridFunction(f.grid, vals)


def rl_deriv_right(f: GridFunction, alpha) -> GridFunction:
    a = float(as_order(alpha))
    cap = caputo_right(f, a)
    fb = f.values[-1]
    if fb == 0.0:
        return cap
    x = f.grid.nodes
    corr = np.empty_like(x)
    corr[-1] = math.copysign(math.inf, fb)
    corr[:-1] = fb * (f.grid.b - x[:-1]) ** (-a) / gamma(1.0 - a)
    vals = cap.values + corr
    vals[-1] = corr[-1]
    return GridFunction(f.grid, vals)


def check_inverse_identities(f: GridFunction, alpha) -> tuple[float, float]:
    """Residuals of the two composition identities linking Caputo derivatives
    with RL integrals: D^a I^a f = f and I^a D^a f = f - f(a)."""
    a = as_order(alpha)
    res1 = interior_sup(caputo_left(rl_integral_left(f, a), a) - f)
    shifted = GridFunction(f.grid, f.values - f.values[0])
    res2 = interior_sup(rl_integral_left(caputo_left(f, a), a) - shifted)
    return res1, res2


class BoundaryViolationError(ValueError):
    """IP1/IP2 need f to vanish at both endpoints."""


_IBP_VARIANTS = ("IP1", "IP2", "IP3", "IP4")


def check_integration_by_parts(
    f: GridFunction, g: GridFunction, alpha, variant: str
) -> float:
    """|LHS - RHS| of the selected integration-by-parts identity.

    The RHS integrals contain RL derivatives that are singular at an endpoint
    whenever g does not vanish there; they are rewritten through the
    Caputo relation so the singular part integrates in closed form:
    int f * D_right^a g = int f * CaputoRight^a g + g(b) * (I_right^{1-a} f)(a),
    and mirrored for the left variant.
    """
    if variant not in _IBP_VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {_IBP_VARIANTS}")
    a = float(as_order(alpha))
    if variant in ("IP1", "IP2"):
        if abs(f.values[0]) > 1e-12 or abs(f.values[-1]) > 1e-12:
            raise BoundaryViolationError(
                f"{variant} requires f(a) = f(b) = 0, got "
                f"f(a)={f.values[0]:g}, f(b)={f.values[-1]:g}"
            )

    def prod(u: GridFunction, v: GridFunction) -> float:
        return trapezoid_integral(GridFunction(u.grid, u.values * v.values))

    if variant in ("IP1", "IP3"):
        lhs = prod(g, caputo_left(f, a))
        # singular part of D_right^a g has kernel (b-x)^{-a}: a left RL integral of f at b
        rhs = prod(f, caputo_right(g, a)) + g.values[-1] * rl_integral_left(f, 1.0 - a).values[-1]
        if variant == "IP3":
            rhs += -rl_integral_right(g, 1.0 - a).values[0] * f.values[0]
    else:
        lhs = prod(g, caputo_right(f, a))
        rhs = prod(f, caputo_left(g, a)) + g.values[0] * rl_integral_right(f, 1.0 - a).values[0]
        if variant == "IP4":
            rhs += -rl_integral_left(g, 1.0 - a).values[-1] * f.values[-1]
    return abs(lhs - rhs)
