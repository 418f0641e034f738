"""Strang-split pseudospectral integrator for u_tt - Lap u + u = f(u).

The linear Klein-Gordon flow is applied exactly per Fourier mode and the
nonlinearity enters as a pointwise velocity kick, composed as
half-linear / kick / half-linear.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .field import State, padded_evaluate
from .functionals import DiagnosticsRecord, diagnostics
from .nonlinearity import NonlinearityModel, eval_df, eval_f

REACHED_HORIZON = "reached_horizon"
BLOWUP_DETECTED = "blowup_detected"
STEP_UNDERFLOW = "step_underflow"
PROPAGATION_HORIZON_EXCEEDED = "propagation_horizon_exceeded"
OUTCOMES = (REACHED_HORIZON, BLOWUP_DETECTED, STEP_UNDERFLOW, PROPAGATION_HORIZON_EXCEEDED)


@dataclass
class SolverConfig:
    t_end: float = 10.0
    dt_init: float = 1e-3
    dt_min: float = 1e-12
    dt_max: float = 1e-3
    blowup_amp_threshold: float = 1e6
    blowup_norm_factor: float = 1e6
    sample_every: int = 10
    safety: float = 0.8
    dealias: bool = False
    # radius of compactly supported data; enables the finite-propagation horizon
    support_radius: Optional[float] = None

    def __post_init__(self):
        if not 0 < self.dt_min <= self.dt_init <= self.dt_max:
            raise ValueError("need 0 < dt_min <= dt_init <= dt_max")
        if not self.t_end >= 0:
            raise ValueError("t_end must be non-negative")
        if self.sample_every < 1:
            raise ValueError("sample_every must be >= 1")
        if not self.safety > 0:
            raise ValueError("safety must be positive")


@dataclass
class TrajectoryResult:
    records: List[DiagnosticsRecord]
    outcome: str
    t_outcome: float
    steps: int = 0
    final_dt: float = math.nan
    wall_time: float = 0.0
    horizon: float = math.inf
    extra: dict = field(default_factory=dict)

    @property
    def t_detect(self) -> Optional[float]:
        return self.t_outcome if self.outcome == BLOWUP_DETECTED else None

    def summary(self) -> dict:
        return {
            "outcome": self.outcome,
            "t_outcome": self.t_outcome,
            "t_detect": self.t_detect if self.t_detect is not None else math.nan,
            "steps": self.steps,
            "records": len(self.records),
            "final_dt": self.final_dt,
            "propagation_horizon": self.horizon,
            "wall_time": self.wall_time,
        }


def linear_half_step(state: State, dt: float) -> State:
    """Advance the linear Klein-Gordon flow exactly by ``dt``."""
    g = state.grid
    w = g.omega_half
    c, s = np.cos(w * dt), np.sin(w * dt)
    uh = np.fft.rfftn(state.u)
    vh = np.fft.rfftn(state.v)
    u_new = c * uh + (s / w) * vh
    v_new = -w * s * uh + c * vh
    return State(g, np.fft.irfftn(u_new, s=g.shape, axes=g.axes), np.fft.irfftn(v_new, s=g.shape, axes=g.axes), state.t)


def nonlinear_term(state: State, model: NonlinearityModel, dealias: bool = False) -> np.ndarray:
    if dealias:
        return padded_evaluate(state.grid, state.u, lambda s: eval_f(model, s))
    return eval_f(model, state.u)


def nonlinear_kick(state: State, model: NonlinearityModel, dt: float, dealias: bool = False) -> State:
    """v <- v + dt f(u); exact flow of u_t = 0, v_t = f(u)."""
    with np.errstate(over="ignore", invalid="ignore"):
        v = state.v + dt * nonlinear_term(state, model, dealias)
    return State(state.grid, state.u, v, state.t)


def step(state: State, model: NonlinearityModel, dt: float, dealias: bool = False) -> State:
    half = linear_half_step(state, 0.5 * dt)
    kicked = nonlinear_kick(half, model, dt, dealias)
    out = linear_half_step(kicked, 0.5 * dt)
    out.t = state.t + dt
    return out


def adaptive_dt(state: State, model: NonlinearityModel, config: SolverConfig) -> float:
    """safety / sqrt(1 + max|f'(u)|), before clamping."""
    with np.errstate(over="ignore"):
        stiff = float(np.max(np.abs(eval_df(model, state.u))))
    return config.safety / math.sqrt(1.0 + stiff)


def _finite(state: State) -> bool:
    return bool(np.all(np.isfinite(state.u)) and np.all(np.isfinite(state.v)))


def run(state0: State, model: NonlinearityModel, config: SolverConfig,
        stepper: Optional[Callable] = None, on_record: Optional[Callable] = None) -> TrajectoryResult:
    """Integrate to ``config.t_end`` or until a blow-up threshold is crossed.

    ``stepper(state, model, dt, dealias)`` replaces :func:`step` (the damped
    equation plugs in here).  ``on_record(state)`` is called for every
    recorded state and may return extra per-record data kept in
    ``result.extra["rows"]``.
    """
    stepper = stepper or step
    wall0 = time.perf_counter()
    grid = state0.grid
    if not _finite(state0):
        raise ValueError("initial state is not finite")

    horizon = math.inf
    if config.support_radius is not None:
        horizon = 0.5 * grid.L - config.support_radius
        if horizon <= 0:
            raise ValueError("initial support reaches the torus boundary")
    t_stop = min(config.t_end, horizon)

    state = state0.copy()
    records = []
    extra_rows = []

    def record(s):
        records.append(diagnostics(s, model))
        if on_record is not None:
            extra_rows.append(on_record(s))

    record(state)
    G0 = records[0].G
    steps = 0
    dt = math.nan
    outcome, t_out = None, math.nan
    last_recorded = 0

    while t_stop - state.t > 1e-14 * max(1.0, abs(t_stop)):
        dt_law = adaptive_dt(state, model, config)
        if dt_law < config.dt_min:
            outcome, t_out = STEP_UNDERFLOW, state.t
            break
        dt = min(dt_law, config.dt_max, t_stop - state.t)
        if steps == 0:
            dt = min(dt, config.dt_init)
        if t_stop - state.t - dt < 1e-6 * dt:
            # absorb a roundoff-sized remainder instead of taking a sliver step
            dt = t_stop - state.t
        new = stepper(state, model, dt, config.dealias)
        if t_stop - new.t <= 1e-14 * max(1.0, abs(t_stop)):
            new.t = t_stop
        if not _finite(new):
            # non-finite values: the last finite state brackets the crossing
            outcome, t_out = BLOWUP_DETECTED, state.t
            break
        state = new
        steps += 1
        u_max = float(np.max(np.abs(state.u)))
        G = grid.l2_norm_sq(state.u)
        if u_max > config.blowup_amp_threshold or (G0 > 0 and G > config.blowup_norm_factor * G0):
            record(state)
            last_recorded = steps
            outcome, t_out = BLOWUP_DETECTED, state.t
            break
        if steps % config.sample_every == 0:
            record(state)
            last_recorded = steps

    if outcome is None:
        if t_stop < config.t_end:
            outcome, t_out = PROPAGATION_HORIZON_EXCEEDED, state.t
        else:
            outcome, t_out = REACHED_HORIZON, state.t
    if last_recorded != steps:
        record(state)

    result = TrajectoryResult(records, outcome, t_out, steps, dt,
                              time.perf_counter() - wall0, horizon)
    if on_record is not None:
        result.extra["rows"] = extra_rows
    result.extra["final_state"] = state
    return result
