"""Scalar functionals along a Klein-Gordon trajectory.

Every quantity uses the same lattice quadrature as :mod:`kgblowup.field`, so
the identities linking them (e.g. G'' = 2(||u_t||^2 - I(u))) hold exactly
for the semi-discrete system and not only in the continuum limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .field import Grid, State
from .nonlinearity import NonlinearityModel, eval_F, eval_f

CSV_COLUMNS = ("t", "E", "I", "J", "G", "dG", "ddG", "u_max", "tail", "concavity_gap")
TAIL_MARGIN = 0.1


def energy(state: State, model: NonlinearityModel) -> float:
    g = state.grid
    quad = g.l2_norm_sq(state.v) + g.l2_norm_sq(state.u) + g.grad_norm_sq(state.u)
    return 0.5 * quad - g.integrate(eval_F(model, state.u))


def nehari(grid: Grid, u: np.ndarray, model: NonlinearityModel) -> float:
    """I(u) = ||u||^2 + ||grad u||^2 - int f(u) u."""
    return grid.l2_norm_sq(u) + grid.grad_norm_sq(u) - grid.integrate(eval_f(model, u) * u)


def action(grid: Grid, u: np.ndarray, p: float) -> float:
    """J(u) for the unit pure power |u|^(p-1) u."""
    h1 = grid.l2_norm_sq(u) + grid.grad_norm_sq(u)
    return 0.5 * h1 - grid.integrate(np.abs(u) ** (p + 1)) / (p + 1)


def model_action(grid: Grid, u: np.ndarray, model: NonlinearityModel) -> float:
    """J(u) with the model's coefficient b; NaN marks 'undefined' for custom f."""
    if not model.is_pure_power:
        return math.nan
    h1 = grid.l2_norm_sq(u) + grid.grad_norm_sq(u)
    return 0.5 * h1 - grid.integrate(eval_F(model, u))


def G_and_derivatives(state: State, model: NonlinearityModel):
    """(G, G', G'') with G'' taken from the identity G''/2 = ||u_t||^2 - I(u)."""
    g = state.grid
    G = g.l2_norm_sq(state.u)
    dG = 2.0 * g.inner(state.u, state.v)
    ddG = 2.0 * (g.l2_norm_sq(state.v) - nehari(g, state.u, model))
    return G, dG, ddG


def concavity_gap(G: float, dG: float, ddG: float, epsilon: float) -> float:
    return ddG * G - (4.0 + epsilon) / 4.0 * dG * dG


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    E: float
    I: float
    J: float
    G: float
    dG: float
    ddG: float
    u_max: float
    tail: float
    concavity_gap: float

    def values(self) -> tuple:
        return tuple(getattr(self, f.name) for f in fields(self))

    def csv_row(self) -> str:
        return ",".join(format_float(v) for v in self.values())


def format_float(x: float) -> str:
    return f"{x:.17g}"


def diagnostics(state: State, model: NonlinearityModel) -> DiagnosticsRecord:
    g = state.grid
    u, v = state.u, state.v
    u2 = g.l2_norm_sq(u)
    grad2 = g.grad_norm_sq(u)
    v2 = g.l2_norm_sq(v)
    fu_u = g.integrate(eval_f(model, u) * u)
    I = u2 + grad2 - fu_u
    E = 0.5 * (v2 + u2 + grad2) - g.integrate(eval_F(model, u))
    J = 0.5 * (u2 + grad2) - g.integrate(eval_F(model, u)) if model.is_pure_power else math.nan
    dG = 2.0 * g.inner(u, v)
    ddG = 2.0 * (v2 - I)
    return DiagnosticsRecord(
        t=float(state.t),
        E=E,
        I=I,
        J=J,
        G=u2,
        dG=dG,
        ddG=ddG,
        u_max=float(np.max(np.abs(u))),
        tail=g.boundary_tail_mass(u, TAIL_MARGIN),
        concavity_gap=concavity_gap(u2, dG, ddG, model.epsilon),
    )


def csv_header(extra=()) -> str:
    return ",".join(CSV_COLUMNS + tuple(extra))
