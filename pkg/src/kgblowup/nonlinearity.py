"""Nonlinear source terms f(u) with antiderivative F(u) and structural checks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

PC1_RTOL = 1e-9
F_SKIP = 1e-300


@dataclass(frozen=True)
class NonlinearityModel:
    """The pair (f, F) together with the superlinearity margin ``epsilon``.

    ``kind`` is ``"pure_power"`` for f(s) = b|s|^(p-1) s, or ``"custom"`` for
    user supplied vectorised callables.  For custom models ``F`` defaults to
    adaptive quadrature of ``f`` and ``df`` to a central difference.
    """

    kind: str
    p: float
    epsilon: float
    b: float = 1.0
    f: Optional[Callable] = None
    F: Optional[Callable] = None
    df: Optional[Callable] = None

    def __post_init__(self):
        if self.kind not in ("pure_power", "custom"):
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.kind == "pure_power":
            if not self.p > 1:
                raise ValueError("pure_power requires p > 1")
            if not self.b > 0:
                raise ValueError("pure_power requires b > 0")
        elif self.f is None:
            raise ValueError("custom model needs f")

    @classmethod
    def pure_power(cls, p: float, b: float = 1.0, epsilon: float | str = "auto"):
        eps = p - 1.0 if epsilon == "auto" else float(epsilon)
        return cls("pure_power", float(p), eps, float(b))

    @classmethod
    def custom(cls, f, F=None, df=None, epsilon: float = 1.0, p: float = 3.0):
        return cls("custom", float(p), float(epsilon), 1.0, f, F, df)

    @classmethod
    def linear(cls):
        """f = 0; convenient for exercising the linear Klein-Gordon flow."""
        zero = lambda s: np.zeros_like(np.asarray(s, dtype=float))  # noqa: E731
        return cls("custom", 3.0, 1.0, 1.0, zero, zero, zero)

    @property
    def is_pure_power(self) -> bool:
        return self.kind == "pure_power"


def eval_f(model: NonlinearityModel, s):
    if model.is_pure_power:
        s = np.asarray(s, dtype=float)
        return model.b * np.abs(s) ** (model.p - 1.0) * s
    return model.f(s)


def eval_F(model: NonlinearityModel, s):
    if model.is_pure_power:
        s = np.asarray(s, dtype=float)
        return model.b * np.abs(s) ** (model.p + 1.0) / (model.p + 1.0)
    if model.F is not None:
        return model.F(s)
    return _quad_antiderivative(model.f, s)


def eval_df(model: NonlinearityModel, s):
    """f'(s); used by the step-size law."""
    s = np.asarray(s, dtype=float)
    if model.is_pure_power:
        return model.p * model.b * np.abs(s) ** (model.p - 1.0)
    if model.df is not None:
        return model.df(s)
    h = 1e-6 * np.maximum(1.0, np.abs(s))
    return (model.f(s + h) - model.f(s - h)) / (2 * h)


def _quad_antiderivative(f, s):
    s_arr = np.asarray(s, dtype=float)
    flat = [integrate.quad(lambda x: float(f(x)), 0.0, si, epsabs=0, epsrel=1e-12)[0]
            for si in s_arr.ravel()]
    out = np.array(flat).reshape(s_arr.shape)
    return out if out.ndim else float(out)


def pc1_sample_grid(s_max: float, n_samples: int) -> np.ndarray:
    """Symmetric log-spaced grid on [-s_max, s_max] including 0."""
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    pos = np.logspace(np.log10(s_max) - 12.0, np.log10(s_max), n_samples)
    return np.concatenate([-pos[::-1], [0.0], pos])


@dataclass
class PC1Report:
    ok: bool
    max_eps: float
    violations: list

    def __bool__(self):
        return self.ok


def verify_pc1(model: NonlinearityModel, s_max: float = 1e3, n_samples: int = 1000) -> PC1Report:
    """Check f(s)s >= (2+eps)F(s) on a sample grid.

    Grid checks are exact for pure powers by homogeneity; for custom models
    they say nothing about s outside the sampled range.
    """
    s = pc1_sample_grid(s_max, n_samples)
    fs = np.asarray(eval_f(model, s), dtype=float) * s
    Fs = np.asarray(eval_F(model, s), dtype=float)
    if float(np.asarray(eval_f(model, 0.0))) != 0.0:
        return PC1Report(False, float("nan"), [0.0])
    lhs_need = (2.0 + model.epsilon) * Fs
    mask = np.abs(Fs) >= F_SKIP
    bad = mask & (fs < lhs_need - PC1_RTOL * np.abs(lhs_need))
    pos = mask & (Fs > 0)
    max_eps = float(np.min(fs[pos] / Fs[pos]) - 2.0) if np.any(pos) else float("inf")
    return PC1Report(not bool(np.any(bad)), max_eps, [float(v) for v in s[bad]])


@dataclass
class ExistenceReport:
    ok: bool
    violated: str = ""
    lipschitz_c: float = float("nan")

    def __bool__(self):
        return self.ok


def p_upper_bound(n: int) -> float:
    """Exclusive upper limit on p for local well-posedness in dimension n."""
    return float("inf") if n <= 2 else n / (n - 2.0)


def verify_local_existence_hypotheses(model: NonlinearityModel, n: int) -> ExistenceReport:
    if n not in (1, 2, 3):
        raise ValueError("dimension must be 1, 2 or 3")
    if float(np.asarray(eval_f(model, 0.0))) != 0.0:
        return ExistenceReport(False, "f(0) != 0")
    p = model.p
    if not p > 1:
        return ExistenceReport(False, "p <= 1")
    if not p < p_upper_bound(n):
        return ExistenceReport(False, f"p >= n/(n-2) = {p_upper_bound(n):g} for n={n}")
    if model.is_pure_power:
        return ExistenceReport(True, lipschitz_c=model.p * model.b)
    # a bounded growth constant must not keep increasing as the range widens
    c = _lipschitz_growth_constant(model, s_max=1e1)
    c_wide = _lipschitz_growth_constant(model, s_max=1e3)
    if not np.isfinite(c_wide) or c_wide > 10.0 * max(c, 1e-300):
        return ExistenceReport(False, "growth bound |f(a)-f(b)| <= c(|a|^(p-1)+|b|^(p-1))|a-b| fails")
    return ExistenceReport(True, lipschitz_c=c_wide)


def _lipschitz_growth_constant(model, s_max, n=101):
    s = pc1_sample_grid(s_max, n)
    a, b = np.meshgrid(s, s, indexing="ij")
    off = a != b
    num = np.abs(eval_f(model, a) - eval_f(model, b))
    den = (np.abs(a) ** (model.p - 1) + np.abs(b) ** (model.p - 1)) * np.abs(a - b)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(off & (den > 0), num / den, 0.0)
    ratio = np.where(off & (den == 0) & (num > 0), np.inf, ratio)
    return float(np.max(ratio))
