"""Uniform-grid function representation with elementary calculus and norms."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np


class GridError(ValueError):
    """Invalid grid construction (bad interval or too few points)."""


class NonFiniteSampleError(ValueError):
    """A sampled callback returned NaN or infinity at a grid node."""


@dataclass(frozen=True)
class Grid:
    """Uniform grid of ``n`` nodes on ``[a, b]``, spacing ``h = (b-a)/(n-1)``."""

    a: float
    b: float
    n: int

    def __post_init__(self) -> None:
        if not (self.a < self.b):
            raise GridError(f"invalid interval: need a < b, got [{self.a}, {self.b}]")
        if self.n < 3:
            raise GridError(f"invalid size: need n >= 3, got {self.n}")

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.n - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.n)

    def index_of(self, x: float) -> int:
        """Nearest node index to ``x``."""
        return int(round((x - self.a) / self.h))

    def subgrid(self, i0: int, i1: int) -> "Grid":
        """Grid spanning nodes ``i0..i1`` (inclusive) with the same spacing."""
        xs = self.nodes
        return Grid(float(xs[i0]), float(xs[i1]), i1 - i0 + 1)


@dataclass(frozen=True)
class GridFunction:
    """Samples of a real function at the nodes of a :class:`Grid`.

    Interior values must be finite.  The two endpoint values may be ``+-inf``:
    that is the "unbounded" sentinel carried by Riemann-Liouville derivatives
    of functions not vanishing at the boundary.  Sentinel nodes are excluded
    from norms.
    """

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n,):
            raise ValueError(
                f"values length {vals.shape} does not match grid size {self.grid.n}"
            )
        if np.isnan(vals).any():
            raise NonFiniteSampleError("NaN value in grid function")
        if not np.isfinite(vals[1:-1]).all():
            raise NonFiniteSampleError("non-finite value at an interior node")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _check_same_grid(self, other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _check_same_grid(self, other)
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> "GridFunction":
        return GridFunction(self.grid, self.values * c)

    __rmul__ = __mul__

    def to_csv(self, path) -> None:
        """Write ``x,value`` rows with full round-trip precision."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "value"])
            for x, v in zip(self.nodes, self.values):
                writer.writerow([f"{x:.17g}", f"{v:.17g}"])

    @staticmethod
    def from_csv(path) -> "GridFunction":
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
        if rows and rows[0][0] == "x":
            rows = rows[1:]
        xs = np.array([float(r[0]) for r in rows])
        vs = np.array([float(r[1]) for r in rows])
        if len(xs) < 3:
            raise GridError("CSV holds fewer than 3 samples")
        return GridFunction(Grid(float(xs[0]), float(xs[-1]), len(xs)), vs)


def _check_same_grid(f: GridFunction, g: GridFunction) -> None:
    if f.grid != g.grid:
        raise ValueError(f"grid mismatch: {f.grid} vs {g.grid}")


def make_grid(a: float, b: float, n: int) -> Grid:
    return Grid(float(a), float(b), int(n))


def sample(f: Callable[[float], float], g: Grid) -> GridFunction:
    """Evaluate ``f`` at every node; rejects NaN/inf samples."""
    vals = np.array([float(f(x)) for x in g.nodes])
    if not np.isfinite(vals).all():
        bad = int(np.flatnonzero(~np.isfinite(vals))[0])
        raise NonFiniteSampleError(
            f"non-finite sample at node {bad} (x={g.nodes[bad]:g})"
        )
    return GridFunction(g, vals)


def from_values(g: Grid, values: Iterable[float]) -> GridFunction:
    return GridFunction(g, np.asarray(list(values), dtype=float))


def derivative_fd(f: GridFunction) -> GridFunction:
    """Second-order finite differences: central interior, 3-point one-sided ends."""
    vals = np.gradient(f.values, f.grid.h, edge_order=2)
    return GridFunction(f.grid, vals)


def trapezoid_integral(f: GridFunction) -> float:
    return float(np.trapezoid(f.values, dx=f.grid.h))


def trapezoid_weights(g: Grid) -> np.ndarray:
    w = np.full(g.n, g.h)
    w[0] = w[-1] = g.h / 2
    return w


def norms(f: GridFunction) -> tuple[float, float]:
    """(sup norm, discrete L2 with trapezoid weights), over finite nodes."""
    w = trapezoid_weights(f.grid)
    vals = f.values
    finite = np.isfinite(vals)
    sup = float(np.max(np.abs(vals[finite]))) if finite.any() else 0.0
    l2 = float(np.sqrt(np.sum(w[finite] * vals[finite] ** 2)))
    return sup, l2


def interior_sup(f: GridFunction, margin_frac: float = 0.05) -> float:
    """Sup norm away from the boundary layers.

    Excludes nodes within ``margin_frac`` of the interval length of either
    endpoint (and never fewer than 2 nodes per side), where one-sided stencils
    and the weakly singular kernels degrade the schemes.
    """
    n = f.grid.n
    skip = max(2, int(np.ceil(margin_frac * (n - 1))))
    core = f.values[skip : n - skip]
    if core.size == 0:
        core = f.values[1:-1]
    finite = np.isfinite(core)
    return float(np.max(np.abs(core[finite]))) if finite.any() else 0.0
