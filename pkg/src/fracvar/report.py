"""Matplotlib figure rendering for the CLI report paths.

Figures are companions to the CSV artifacts, never a replacement: every plot
is rendered from the same data that lands in the delimited files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .grid import GridFunction
from .solver import SweepEntry
from .varcalc import ELReport


def render_solution_figure(path, y: GridFunction, reference: GridFunction | None = None,
                           title: str = "solution") -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(y.nodes, y.values, label="computed", lw=1.5)
    if reference is not None:
        ax.plot(reference.nodes, reference.values, "--", label="reference", lw=1.0)
        ax.legend()
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_sweep_figure(path, entries: list[SweepEntry]) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for e in entries:
        if e.result is None:
            continue
        ax.plot(e.result.y.nodes, e.result.y.values, label=f"alpha={e.alpha:g}", lw=1.2)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title("solution curves by fractional order")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_residual_figure(path, report: ELReport) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for name, gf in (("left", report.residual_left), ("mid", report.residual_mid),
                     ("right", report.residual_right)):
        if gf is None:
            continue
        ax.plot(gf.nodes, gf.values, label=name, lw=1.2)
    ax.set_xlabel("x")
    ax.set_ylabel("residual")
    ax.set_title("Euler-Lagrange residual")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
