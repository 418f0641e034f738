"""Ground states of -Lap u + u = u^p and the mountain-pass level d = J(u).

n = 1 uses the closed-form solitary wave; n = 2, 3 shoot on the radial ODE
and resample onto the lattice.  Either way the lattice residual is checked
before a result is returned.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import special
from scipy.integrate import quad, solve_ivp
from scipy.interpolate import CubicSpline

from .field import Grid, State
from .functionals import action, nehari
from .nonlinearity import NonlinearityModel

MAX_BISECTIONS = 80


class GroundStateError(RuntimeError):
    pass


@dataclass
class GroundState:
    p: float
    n: int
    center_value: float
    d: float
    grid: Optional[Grid] = None
    profile: Optional[np.ndarray] = None
    residual: float = math.nan
    nehari_rel: float = math.nan
    radial: Optional[Callable] = None

    @property
    def d_radial(self) -> float:
        """J evaluated by 1-D radial quadrature (independent of the lattice)."""
        return radial_action(self.radial, self.p, self.n)


def soliton_profile(p: float, x):
    """((p+1)/2)^(1/(p-1)) sech^(2/(p-1))((p-1)x/2)."""
    z = np.abs(0.5 * (p - 1.0) * np.asarray(x, dtype=float))
    e = np.exp(-2.0 * z)
    sech = 2.0 * np.exp(-z) / (1.0 + e)
    return (0.5 * (p + 1.0)) ** (1.0 / (p - 1.0)) * sech ** (2.0 / (p - 1.0))


def elliptic_residual(grid: Grid, u: np.ndarray, p: float) -> float:
    """||-Lap u + u - |u|^(p-1) u|| / ||u|| on the lattice."""
    res = -grid.laplacian(u) + u - np.abs(u) ** (p - 1) * u
    return math.sqrt(grid.l2_norm_sq(res) / grid.l2_norm_sq(u))


def _finish(p, n, grid, profile, radial, tol):
    res = elliptic_residual(grid, profile, p)
    if res > tol:
        raise GroundStateError(f"lattice residual {res:.3e} exceeds {tol:.1e}")
    model = NonlinearityModel.pure_power(p)
    scale = grid.l2_norm_sq(profile) + grid.grad_norm_sq(profile)
    return GroundState(
        p=p,
        n=n,
        center_value=float(radial(0.0)),
        d=action(grid, profile, p),
        grid=grid,
        profile=profile,
        residual=res,
        nehari_rel=abs(nehari(grid, profile, model)) / scale,
        radial=radial,
    )


def solve_ground_state_1d(p: float, grid: Grid, tol: float = 1e-8, tail_tol: float = 1e-12) -> GroundState:
    if grid.n != 1:
        raise ValueError("solve_ground_state_1d needs a 1-D grid")
    if not p > 1:
        raise ValueError("p must exceed 1")
    radial = lambda r: soliton_profile(p, r)  # noqa: E731
    edge = float(radial(0.5 * grid.L)) / float(radial(0.0))
    if edge > tail_tol:
        raise GroundStateError(f"tail {edge:.2e} at x = L/2 exceeds {tail_tol:.0e}; enlarge L")
    return _finish(p, 1, grid, soliton_profile(p, grid.x), radial, tol)


# radial shooting ------------------------------------------------------------

def _rhs(n, p):
    def rhs(r, y):
        u, du = y
        return [du, -(n - 1) / r * du + u - abs(u) ** (p - 1) * u]
    return rhs


def _start(a, p, n, r0):
    c = (a - a ** p) / (2.0 * n)
    return [a + c * r0 * r0, 2.0 * c * r0]


def _shoot(a, p, n, r_max, r0=1e-4):
    """Integrate from the centre; return (kind, solution).

    kind is +1 when u crosses zero (height too large), -1 when u turns back
    up before crossing (height too small), 0 if neither happens by r_max.
    """
    if a <= 1.0:
        return -1, None

    def crossing(r, y):
        return y[0]
    crossing.terminal = True
    crossing.direction = -1

    def turning(r, y):
        return y[1]
    turning.terminal = True
    turning.direction = 1

    sol = solve_ivp(_rhs(n, p), (r0, r_max), _start(a, p, n, r0), method="DOP853",
                    rtol=1e-12, atol=1e-15, events=[crossing, turning], dense_output=True)
    if sol.t_events[0].size:
        return 1, sol
    if sol.t_events[1].size:
        return -1, sol
    return 0, sol


def _bracket(p, n, r_max, bracket):
    if bracket is not None:
        lo, hi = map(float, bracket)
        if _shoot(lo, p, n, r_max)[0] != -1 or _shoot(hi, p, n, r_max)[0] != 1:
            raise GroundStateError(f"bracket [{lo}, {hi}] does not straddle the ground state")
        return lo, hi
    lo, hi = 1.0, 2.0
    for _ in range(60):
        if _shoot(hi, p, n, r_max)[0] == 1:
            return lo, hi
        lo, hi = hi, 2.0 * hi
    raise GroundStateError("could not find an overshooting initial height")


def radial_action(radial, p, n, r_max=60.0):
    area = {1: 2.0, 2: 2 * math.pi, 3: 4 * math.pi}[n]
    h = 1e-4
    def integrand(r):
        u = float(radial(r))
        du = float((radial(r + h) - radial(abs(r - h))) / (2 * h)) if r > h else 0.0
        return (0.5 * (u * u + du * du) - abs(u) ** (p + 1) / (p + 1)) * area * r ** (n - 1)
    val, _ = quad(integrand, 0.0, r_max, limit=400, epsabs=1e-13, epsrel=1e-11)
    return val


def solve_ground_state_radial(p: float, n: int, grid: Optional[Grid] = None, r_max: float = 30.0,
                              tol: float = 1e-6, bracket=None) -> GroundState:
    """Shoot on u'' + (n-1)/r u' - u + u^p = 0, u'(0) = 0 for the centre height.

    The bisection limit leaves the shot accurate only up to a finite radius;
    beyond it the profile continues with the decaying linear solution
    r^(1-n/2) K_{n/2-1}(r), matched in value.
    """
    if n not in (2, 3):
        raise ValueError("radial shooting is for n = 2 or 3")
    if not 1 < p < (math.inf if n == 2 else (n + 2) / (n - 2)):
        raise ValueError(f"p = {p} outside the subcritical range for n = {n}")
    if grid is not None and grid.n != n:
        raise ValueError("grid dimension does not match n")

    lo, hi = _bracket(p, n, r_max, bracket)
    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        kind = _shoot(mid, p, n, r_max)[0]
        if kind == 0:
            lo = hi = mid
            break
        if kind == 1:
            hi = mid
        else:
            lo = mid
    a = 0.5 * (lo + hi)

    _, sol_lo = _shoot(lo, p, n, r_max)
    _, sol_hi = _shoot(hi, p, n, r_max)
    r_end = min(s.t[-1] for s in (sol_lo, sol_hi) if s is not None)
    rr = np.linspace(1e-4, r_end, 20001)
    u_lo, u_hi = sol_lo.sol(rr)[0], sol_hi.sol(rr)[0]
    u_mid = 0.5 * (u_lo + u_hi)
    apart = np.nonzero(np.abs(u_hi - u_lo) > 1e-10 * a)[0]
    i_c = (apart[0] if apart.size else rr.size) - 1
    # stay well inside the region where both shots agree
    i_c = max(1, int(0.9 * i_c))
    r_c = rr[i_c]
    if u_mid[i_c] <= 0:
        raise GroundStateError("shooting lost positivity before matching radius")

    nu = 0.5 * n - 1.0
    bessel = lambda r: np.asarray(r, float) ** (-nu) * special.kv(nu, r)  # noqa: E731
    amp = u_mid[i_c] / bessel(r_c)

    r_far = max(r_max, 2.0 * r_max)
    r_tail = np.linspace(r_c, r_far, int((r_far - r_c) / 0.005) + 2)[1:]
    r_all = np.concatenate([[0.0], rr[: i_c + 1], r_tail])
    u_all = np.concatenate([[a], u_mid[: i_c + 1], amp * bessel(r_tail)])
    spline = CubicSpline(np.concatenate([-r_all[:0:-1], r_all]),
                         np.concatenate([u_all[:0:-1], u_all]))

    def radial(r):
        r = np.abs(np.asarray(r, dtype=float))
        out = np.where(r <= r_far, spline(np.minimum(r, r_far)), 0.0)
        return out if out.ndim else float(out)

    if radial(r_max) > tol * a:
        raise GroundStateError(f"profile at r_max = {r_max} is {radial(r_max):.2e}; enlarge r_max")
    if grid is None:
        return GroundState(p=p, n=n, center_value=a, d=radial_action(radial, p, n), radial=radial)
    return _finish(p, n, grid, radial(grid.r), radial, tol)


def solve_ground_state(p: float, grid: Grid, **kwargs) -> GroundState:
    if grid.n == 1:
        return solve_ground_state_1d(p, grid, **kwargs)
    return solve_ground_state_radial(p, grid.n, grid, **kwargs)


# sub-threshold dichotomy ------------------------------------------------------

@dataclass
class DichotomyRow:
    lam: float
    E0: float
    I0: float
    outcome: str
    t_final: float
    G0: float
    G_max: float


def dichotomy_experiment(ground: GroundState, lambdas, config, jobs: int = 1):
    """Run u0 = lam * ground state, u1 = 0 for each lam and tabulate outcomes."""
    from .functionals import energy
    from .solver import run

    grid = ground.grid
    model = NonlinearityModel.pure_power(ground.p)

    def one(lam):
        if lam == 1.0:
            raise ValueError("lam = 1 lies on the Nehari manifold")
        u0 = lam * ground.profile
        state = State(grid, u0, np.zeros_like(u0))
        result = run(state, model, config)
        Gs = [rec.G for rec in result.records]
        return DichotomyRow(lam, energy(state, model), nehari(grid, u0, model),
                            result.outcome, result.records[-1].t, Gs[0], max(Gs))

    lambdas = list(lambdas)
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            return list(pool.map(one, lambdas))
    return [one(lam) for lam in lambdas]
