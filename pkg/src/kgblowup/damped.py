"""Linearly damped variant u_tt + a u_t - Lap u + u = b|u|^(p-1) u.

The certificate here is a monitored demonstration only: the blow-up
conditions are evaluated with the damped equation's energy as a working
hypothesis, and growth of the modified auxiliary function

    G(t) = ||u(t)||^2 + int_0^t ||u||^2 + (T0 - t) ||u0||^2

is tracked alongside I(u(t)) < 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial
from typing import List, Optional

import numpy as np

from .certifier import Violation, blowup_time_bound
from .field import State
from .functionals import format_float
from .initial_data import StaticCertificate, check_theorem22
from .nonlinearity import NonlinearityModel
from .solver import SolverConfig, TrajectoryResult, linear_half_step, nonlinear_kick, run

DAMPED_COLUMNS = ("G_damped", "dG_damped")


@dataclass(frozen=True)
class DampedConfig:
    a: float
    b: float = 1.0
    T0: Optional[float] = None

    def __post_init__(self):
        if not self.a > 0 or not self.b > 0:
            raise ValueError("damping a and coefficient b must be positive")
        if self.T0 is not None and not self.T0 > 0:
            raise ValueError("T0 must be positive")


def damped_linear_step(state: State, a: float, dt: float) -> State:
    """Exact flow of u_tt + a u_t + (1 + |k|^2) u = 0 per mode over ``dt``."""
    if a == 0:
        return linear_half_step(state, dt)
    g = state.grid
    w2 = 1.0 + g.k_sq_half
    mu = 0.5 * a
    disc = w2 - mu * mu
    decay = math.exp(-mu * dt)
    # C = cos(nu dt), S = sin(nu dt)/nu with the hyperbolic/critical analogues
    nu = np.sqrt(np.abs(disc))
    under, over = disc > 0, disc < 0
    C = np.ones_like(w2)
    S = np.full_like(w2, dt)
    nu_u = nu[under]
    C[under] = np.cos(nu_u * dt)
    S[under] = np.sin(nu_u * dt) / nu_u
    nu_o = nu[over]
    C[over] = np.cosh(nu_o * dt)
    S[over] = np.sinh(nu_o * dt) / nu_o
    uh = np.fft.rfftn(state.u)
    vh = np.fft.rfftn(state.v)
    u_new = decay * (C * uh + S * (vh + mu * uh))
    v_new = decay * (C * vh - S * (w2 * uh + mu * vh))
    return State(g, np.fft.irfftn(u_new, s=g.shape, axes=g.axes), np.fft.irfftn(v_new, s=g.shape, axes=g.axes), state.t)


def damped_step(state: State, model: NonlinearityModel, a: float, dt: float, dealias: bool = False) -> State:
    half = damped_linear_step(state, a, 0.5 * dt)
    kicked = nonlinear_kick(half, model, dt, dealias)
    out = damped_linear_step(kicked, a, 0.5 * dt)
    out.t = state.t + dt
    return out


def damped_G(t, G, dG, T0: float):
    """Modified auxiliary function and its exact derivative along samples.

    The time integral is accumulated by the trapezoid rule over the (possibly
    uneven) sample times.  Returns arrays (G_damped, dG_damped).
    """
    t = np.asarray(t, dtype=float)
    G = np.asarray(G, dtype=float)
    dG = np.asarray(dG, dtype=float)
    if t.size == 0:
        return np.array([]), np.array([])
    integral = np.concatenate([[0.0], np.cumsum(0.5 * (G[1:] + G[:-1]) * np.diff(t))])
    G_d = G + integral + (T0 - t) * G[0]
    dG_d = dG + G - G[0]
    return G_d, dG_d


@dataclass
class DampedRun:
    result: TrajectoryResult
    static: StaticCertificate
    T0: float
    G_damped: np.ndarray
    dG_damped: np.ndarray
    violations: List[Violation]

    @property
    def label(self) -> str:
        return "monitored demonstration (not a certificate)"

    def csv_rows(self):
        for rec, gd, dgd in zip(self.result.records, self.G_damped, self.dG_damped):
            yield rec.csv_row() + "," + format_float(gd) + "," + format_float(dgd)


def damped_blowup_run(state0: State, model: NonlinearityModel, a: float, config: SolverConfig,
                      T0: Optional[float] = None) -> DampedRun:
    """Run the damped dynamics and monitor I(u) < 0 and growth of the modified G."""
    static = check_theorem22(state0.grid, state0.u, state0.v, model)
    if T0 is None:
        if static.norm_u0_sq > 0 and static.inner_u0_u1 > 0:
            t_der, _ = blowup_time_bound(static.norm_u0_sq, 2 * static.inner_u0_u1, model.epsilon)
            T0 = 2.0 * t_der
        else:
            T0 = 1.0
    stepper = partial(_stepper, a=a)
    result = run(state0, model, config, stepper=stepper)
    t = [r.t for r in result.records]
    G_d, dG_d = damped_G(t, [r.G for r in result.records], [r.dG for r in result.records], T0)
    violations = []
    for rec in result.records:
        if not rec.I < 0:
            violations.append(Violation(rec.t, "nehari_nonnegative", rec.I))
    for i in range(1, len(t)):
        if not G_d[i] > G_d[i - 1]:
            violations.append(Violation(t[i], "G_damped_not_increasing", G_d[i] - G_d[i - 1]))
    return DampedRun(result, static, T0, G_d, dG_d, violations)


def _stepper(state, model, dt, dealias=False, *, a):
    return damped_step(state, model, a, dt, dealias)
