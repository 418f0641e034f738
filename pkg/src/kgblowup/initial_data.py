"""Initial data: closed-form profiles, blow-up condition checks and synthesis.

Certified data at arbitrary energy is produced in two moves: a single cell
amplitude/velocity pair satisfying all four blow-up conditions, then K
disjoint translated copies of that cell, which scales every integral in the
conditions by K and so preserves them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np

from .field import Grid, State
from .functionals import energy, nehari
from .nonlinearity import NonlinearityModel

PROFILES = ("gaussian_bump", "cosine_bump", "fourier_mode", "soliton_scaled", "multi_bump")
GAUSS_TAIL = math.sqrt(14.0 * math.log(10.0))  # exp(-(r/w)^2) = 1e-14 at r = GAUSS_TAIL * w
MIN_POINTS_ACROSS = 8
TC2_MARGIN = 1e-3


class RecipeError(ValueError):
    pass


class SynthesisError(RuntimeError):
    pass


@dataclass(frozen=True)
class DataRecipe:
    profile: str
    amplitude: float = 1.0
    velocity_ratio: float = 0.0
    width: float = 1.0  # gaussian_bump
    radius: float = 1.0  # cosine_bump
    k: int = 1  # fourier_mode
    p: float = 3.0  # soliton_scaled
    count: int = 1  # multi_bump
    separation: float = 0.0  # multi_bump
    base: Optional["DataRecipe"] = None  # multi_bump

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise RecipeError(f"unknown profile {self.profile!r}")
        if self.profile == "multi_bump":
            if self.base is None or self.base.profile not in ("gaussian_bump", "cosine_bump"):
                raise RecipeError("multi_bump needs a gaussian_bump or cosine_bump base")
            if self.count < 1:
                raise RecipeError("multi_bump count must be >= 1")
            if self.separation < 2 * self.base.bump_radius:
                raise RecipeError("multi_bump separation smaller than twice the bump radius")

    @property
    def bump_radius(self) -> float:
        if self.profile == "cosine_bump":
            return self.radius
        if self.profile == "gaussian_bump":
            return GAUSS_TAIL * self.width
        raise RecipeError(f"{self.profile} has no finite radius")

    @property
    def support_radius(self) -> Optional[float]:
        """Half-extent of the data support along the widest axis, if compact."""
        if self.profile in ("gaussian_bump", "cosine_bump"):
            return self.bump_radius
        if self.profile == "multi_bump":
            return 0.5 * (self.count - 1) * self.separation + self.base.bump_radius
        return None


def _unit_profile(recipe: DataRecipe, grid: Grid, shift: float = 0.0, rows=slice(None)) -> np.ndarray:
    coords = [c[rows] for c in grid.coords]
    coords[0] = coords[0] - shift
    r = np.sqrt(sum(c * c for c in coords))
    if recipe.profile == "gaussian_bump":
        return np.exp(-(r / recipe.width) ** 2)
    if recipe.profile == "cosine_bump":
        inside = r < recipe.radius
        return np.where(inside, np.cos(0.5 * np.pi * np.minimum(r / recipe.radius, 1.0)) ** 4, 0.0)
    raise RecipeError(recipe.profile)


def _check_bump(recipe: DataRecipe, grid: Grid, extent: float) -> None:
    if extent >= 0.5 * grid.L:
        raise RecipeError(f"support radius {extent:g} does not fit strictly inside the torus (L/2 = {0.5 * grid.L:g})")
    across = 2 * (recipe.width if recipe.profile == "gaussian_bump" else recipe.radius) / grid.h
    if across < MIN_POINTS_ACROSS:
        raise RecipeError(f"only {across:.1f} lattice points across the bump; need {MIN_POINTS_ACROSS}")


def realize(recipe: DataRecipe, grid: Grid) -> Tuple[np.ndarray, np.ndarray]:
    """Sample (u0, u1) with u1 = velocity_ratio * u0."""
    prof = recipe.profile
    if prof in ("gaussian_bump", "cosine_bump"):
        _check_bump(recipe, grid, recipe.bump_radius)
        phi = _unit_profile(recipe, grid)
    elif prof == "multi_bump":
        _check_bump(recipe.base, grid, recipe.support_radius)
        phi = np.zeros(grid.shape)
        reach = recipe.base.bump_radius + grid.h
        for i in range(recipe.count):
            shift = (i - 0.5 * (recipe.count - 1)) * recipe.separation
            # each bump only touches the axis-0 slab within its radius
            lo, hi = np.searchsorted(grid.x, [shift - reach, shift + reach])
            phi[lo:hi] += _unit_profile(recipe.base, grid, shift, rows=slice(lo, hi))
    elif prof == "fourier_mode":
        periods = recipe.k * grid.L / (2 * np.pi)
        if abs(periods - round(periods)) > 1e-9:
            raise RecipeError("sin(k x) is not periodic on this torus")
        phi = np.sin(recipe.k * grid.coords[0])
    else:
        from .ground_state import solve_ground_state
        phi = solve_ground_state(recipe.p, grid).profile
    u0 = recipe.amplitude * phi
    return u0, recipe.velocity_ratio * u0


# blow-up conditions -----------------------------------------------------------

@dataclass
class StaticCertificate:
    E0: float
    norm_u0_sq: float
    I0: float
    inner_u0_u1: float
    epsilon: float
    threshold: float
    tc1: bool
    tc2: bool
    tc3: bool
    tc4: bool

    @property
    def passed(self) -> bool:
        return self.tc1 and self.tc2 and self.tc3 and self.tc4

    def failures(self):
        return [name for name in ("tc1", "tc2", "tc3", "tc4") if not getattr(self, name)]

    def items(self):
        return [
            ("E0", self.E0), ("norm_u0_sq", self.norm_u0_sq), ("I0", self.I0),
            ("inner_u0_u1", self.inner_u0_u1), ("epsilon", self.epsilon),
            ("threshold", self.threshold), ("TC1_energy_positive", self.tc1),
            ("TC2_norm_above_threshold", self.tc2), ("TC3_nehari_negative", self.tc3),
            ("TC4_inner_positive", self.tc4),
        ]


def norm_threshold(E0: float, epsilon: float) -> float:
    return 2.0 * (2.0 + epsilon) / epsilon * E0


def check_theorem22(grid: Grid, u0: np.ndarray, u1: np.ndarray, model: NonlinearityModel) -> StaticCertificate:
    """Evaluate E(0) > 0, ||u0||^2 >= 2(2+eps)/eps E(0), I(u0) < 0, <u0,u1> > 0."""
    E0 = energy(State(grid, u0, u1), model)
    G0 = grid.l2_norm_sq(u0)
    I0 = nehari(grid, u0, model)
    inner = grid.inner(u0, u1)
    thr = norm_threshold(E0, model.epsilon)
    return StaticCertificate(E0, G0, I0, inner, model.epsilon, thr,
                             E0 > 0, G0 >= thr, I0 < 0, inner > 0)


# synthesis ----------------------------------------------------------------------

@dataclass
class Synthesis:
    grid: Grid
    u0: np.ndarray
    u1: np.ndarray
    certificate: StaticCertificate
    recipe: DataRecipe
    copies: int
    cell_energy: float
    scanned: dict = field(default_factory=dict)

    @property
    def support_radius(self) -> Optional[float]:
        return self.recipe.support_radius

    def state(self) -> State:
        return State(self.grid, self.u0, self.u1)


class _Family:
    """Closed-form condition values for (lam*phi, sigma*lam*phi), pure power f.

    Homogeneity of |u|^(p-1)u makes every lattice integral a fixed multiple
    of a power of lam, so scanning costs nothing after three quadratures.
    """

    def __init__(self, grid, phi, model):
        self.A = grid.l2_norm_sq(phi)
        self.B = grid.grad_norm_sq(phi)
        self.C = grid.integrate(np.abs(phi) ** (model.p + 1))
        self.p, self.b, self.eps = model.p, model.b, model.epsilon

    def energy(self, lam, sigma):
        quad = (1 + sigma * sigma) * self.A + self.B
        return 0.5 * lam * lam * quad - self.b * lam ** (self.p + 1) * self.C / (self.p + 1)

    def qualifies(self, lam, sigma):
        E = self.energy(lam, sigma)
        I = lam * lam * (self.A + self.B) - self.b * lam ** (self.p + 1) * self.C
        thr = norm_threshold(E, self.eps)
        return E > 0 and lam * lam * self.A >= thr * (1 + TC2_MARGIN) and I < 0 and sigma > 0


def _edge(pred, good, bad, iters=100):
    """Bisect between a qualifying and a failing amplitude."""
    for _ in range(iters):
        mid = 0.5 * (good + bad)
        if mid in (good, bad):
            break
        if pred(mid):
            good = mid
        else:
            bad = mid
    return good


def synthesize_certified(model: NonlinearityModel, grid: Grid, target_energy: float,
                         profile: str = "cosine_bump", radius: Optional[float] = None,
                         width: Optional[float] = None,
                         sigmas=(0.1, 0.2, 0.5, 1.0, 2.0, 5.0),
                         lam_range=(1e-2, 1e3), n_scan: int = 2001) -> Synthesis:
    """Certified data with target_energy <= E(0) <= 1.05 target_energy.

    ``grid`` is the single cell; when one cell cannot carry the energy the
    returned grid is ``grid.tile(K)``.  For compact profiles only velocity
    ratios whose blow-up time bound fits inside the cell's propagation
    horizon are admitted, so the subsequent run cannot end inconclusively.
    """
    if not model.is_pure_power:
        raise ValueError("synthesis needs a pure_power model")
    if not target_energy > 0:
        raise ValueError("target_energy must be positive")

    if profile == "fourier_mode":
        base = DataRecipe("fourier_mode", k=1)
    elif profile == "cosine_bump":
        base = DataRecipe("cosine_bump", radius=radius if radius is not None else grid.L / 4)
    elif profile == "gaussian_bump":
        base = DataRecipe("gaussian_bump", width=width if width is not None else grid.L / (4 * GAUSS_TAIL))
    else:
        raise ValueError(f"profile {profile!r} cannot be synthesized")
    phi, _ = realize(base, grid)
    fam = _Family(grid, phi, model)

    horizon = math.inf
    if base.support_radius is not None:
        horizon = 0.5 * grid.L - base.support_radius

    lams = np.logspace(math.log10(lam_range[0]), math.log10(lam_range[1]), n_scan)
    chosen = None
    for sigma in sigmas:
        # chord bound 4 G0 / (eps G0') with G0' = 2 sigma G0
        if 2.0 / (model.epsilon * sigma) >= horizon:
            continue
        ok = np.array([fam.qualifies(lam, sigma) for lam in lams])
        if ok.any():
            chosen = (sigma, ok)
            break
    if chosen is None:
        raise SynthesisError(f"no qualifying (lam, sigma) in lam {lam_range}, sigma {tuple(sigmas)}")
    sigma, ok = chosen
    idx = np.nonzero(ok)[0]
    i0, i1 = idx[0], idx[-1]
    pred = lambda lam: fam.qualifies(lam, sigma)  # noqa: E731
    lam_lo = _edge(pred, lams[i0], lams[i0 - 1]) if i0 > 0 else lams[i0]
    lam_hi = _edge(pred, lams[i1], lams[i1 + 1]) if i1 + 1 < lams.size else lams[i1]

    # energy peaks on the window at (or near) its lower edge
    window = np.linspace(lam_lo, lam_hi, 401)
    energies = np.array([fam.energy(lam, sigma) for lam in window])
    j = int(np.argmax(energies))
    e_ref = energies[j]
    copies = max(1, math.ceil(1.02 * target_energy / e_ref))
    aim = 1.02 * target_energy / copies

    lo, hi = window[j], lam_hi  # E(lo) >= aim > E(hi) ~ 0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if fam.energy(mid, sigma) >= aim:
            lo = mid
        else:
            hi = mid
    lam = lo if pred(lo) else hi

    cell = replace(base, amplitude=lam, velocity_ratio=sigma)
    if copies == 1:
        recipe, big = cell, grid
    elif profile == "fourier_mode":
        big = grid.tile(copies)
        recipe = cell
    else:
        big = grid.tile(copies)
        recipe = DataRecipe("multi_bump", amplitude=lam, velocity_ratio=sigma, count=copies,
                            separation=grid.L, base=replace(base, amplitude=1.0))
    u0, u1 = realize(recipe, big)
    cert = check_theorem22(big, u0, u1, model)
    total = cert.E0
    if not cert.passed or not target_energy <= total <= 1.05 * target_energy:
        raise SynthesisError(f"closed-loop check failed: E0={total:g}, failures={cert.failures()}")
    scanned = {"sigma": sigma, "lam_window": (lam_lo, lam_hi), "e_ref": e_ref, "horizon": horizon}
    return Synthesis(big, u0, u1, cert, recipe, copies, total / copies, scanned)


def synthesize_subthreshold(p: float, grid: Grid, lam: float, ground=None):
    """u0 = lam * ground state, u1 = 0; lam = 1 sits on the Nehari manifold and is rejected."""
    if lam == 1.0:
        raise ValueError("lam = 1 gives E(0) = d exactly (on the Nehari manifold)")
    if ground is None:
        from .ground_state import solve_ground_state
        ground = solve_ground_state(p, grid)
    u0 = lam * ground.profile
    return u0, np.zeros_like(u0)
