"""Periodic lattice fields: quadrature, spectral derivatives and snapshot I/O.

A field is a plain ``numpy`` array of shape ``(N,)*n`` living on a
:class:`Grid`; the torus ``[-L/2, L/2)^n`` stands in for R^n.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np

MAGIC = b"KGF1"
HEADER = struct.Struct("<4sIQd8x")  # magic, n, N, L, padding -> 32 bytes


@dataclass(frozen=True)
class Grid:
    n: int
    L: float
    N: int

    def __post_init__(self):
        if self.n not in (1, 2, 3):
            raise ValueError("n must be 1, 2 or 3")
        if not self.L > 0:
            raise ValueError("L must be positive")
        if self.N <= 0 or self.N % 2:
            raise ValueError("N must be a positive even integer")

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.n

    @property
    def axes(self) -> tuple:
        return tuple(range(self.n))

    @property
    def cell_volume(self) -> float:
        return self.h ** self.n

    @cached_property
    def x(self) -> np.ndarray:
        """1-D coordinates of one axis."""
        return -0.5 * self.L + self.h * np.arange(self.N)

    @cached_property
    def coords(self) -> tuple:
        return tuple(np.meshgrid(*([self.x] * self.n), indexing="ij"))

    @cached_property
    def r(self) -> np.ndarray:
        return np.sqrt(sum(c * c for c in self.coords))

    @cached_property
    def k(self) -> np.ndarray:
        """Angular wavenumbers of one axis in FFT ordering."""
        return 2 * np.pi * np.fft.fftfreq(self.N, d=self.h)

    @cached_property
    def k_sq(self) -> np.ndarray:
        """|k|^2 on the full FFT lattice."""
        ks = np.meshgrid(*([self.k] * self.n), indexing="ij")
        return sum(kk * kk for kk in ks)

    @cached_property
    def k_sq_half(self) -> np.ndarray:
        """|k|^2 on the rfftn lattice (last axis halved)."""
        k_last = 2 * np.pi * np.fft.rfftfreq(self.N, d=self.h)
        ks = np.meshgrid(*([self.k] * (self.n - 1) + [k_last]), indexing="ij")
        return sum(kk * kk for kk in ks)

    @cached_property
    def omega_half(self) -> np.ndarray:
        """Klein-Gordon dispersion sqrt(1 + |k|^2) on the rfftn lattice."""
        return np.sqrt(1.0 + self.k_sq_half)

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    def sample(self, func) -> np.ndarray:
        """Evaluate ``func(*coords)`` on the lattice."""
        return np.broadcast_to(np.asarray(func(*self.coords), dtype=float), self.shape).copy()

    def check(self, u: np.ndarray) -> None:
        if u.shape != self.shape:
            raise ValueError(f"field shape {u.shape} does not match grid {self.shape}")

    # quadrature ---------------------------------------------------------

    def integrate(self, u: np.ndarray) -> float:
        return float(self.cell_volume * np.sum(u))

    def inner(self, u: np.ndarray, w: np.ndarray) -> float:
        if u.shape != w.shape:
            raise ValueError("grid mismatch in inner product")
        return float(self.cell_volume * np.sum(u * w))

    def l2_norm_sq(self, u: np.ndarray) -> float:
        return float(self.cell_volume * np.sum(u * u))

    def grad_norm_sq(self, u: np.ndarray) -> float:
        """||grad u||^2 as <u, -Lap u> with the spectral Laplacian.

        The Nyquist mode keeps its |k|^2 weight so this agrees with the
        quadratic form the linear propagator conserves.
        """
        uh = np.fft.fftn(u)
        return float(self.cell_volume * np.sum(self.k_sq * np.abs(uh) ** 2) / u.size)

    def derivative(self, u: np.ndarray, axis: int = 0) -> np.ndarray:
        """Spectral partial derivative; the Nyquist mode is dropped."""
        k = 1j * self.k.copy()
        k[self.N // 2] = 0.0
        shape = [1] * self.n
        shape[axis] = self.N
        return np.fft.ifftn(k.reshape(shape) * np.fft.fftn(u)).real

    def laplacian(self, u: np.ndarray) -> np.ndarray:
        return np.fft.irfftn(-self.k_sq_half * np.fft.rfftn(u), s=self.shape, axes=self.axes)

    def spectral_l2_norm_sq(self, u: np.ndarray) -> float:
        """Parseval form of :meth:`l2_norm_sq`."""
        uh = np.fft.fftn(u)
        return float(self.cell_volume * np.sum(np.abs(uh) ** 2) / u.size)

    def boundary_tail_mass(self, u: np.ndarray, margin_fraction: float = 0.1) -> float:
        """Fraction of ||u||^2 within ``margin_fraction * L`` of the torus boundary."""
        if not 0 < margin_fraction < 0.5:
            raise ValueError("margin_fraction must lie in (0, 0.5)")
        total = float(np.sum(u * u))
        if total == 0.0:
            return 0.0
        edge = 0.5 * self.L - margin_fraction * self.L
        near = np.zeros(self.shape, dtype=bool)
        for c in self.coords:
            near |= np.abs(c) > edge
        return float(np.sum((u * u)[near]) / total)

    def support_extent(self, *fields: np.ndarray, rel_tol: float = 1e-14) -> float:
        """Largest per-axis |x_i| where any field exceeds ``rel_tol`` of its peak."""
        extent = 0.0
        for u in fields:
            peak = np.max(np.abs(u)) if u.size else 0.0
            if peak == 0:
                continue
            mask = np.abs(u) > rel_tol * peak
            for c in self.coords:
                extent = max(extent, float(np.max(np.abs(c[mask]))) + self.h)
        return extent

    def tile(self, copies: int) -> "Grid":
        """Grid of ``copies`` cells laid side by side (n = 1 only)."""
        if self.n != 1:
            raise ValueError("replication is implemented for n = 1")
        return Grid(1, self.L * copies, self.N * copies)


def padded_evaluate(grid: Grid, u: np.ndarray, func) -> np.ndarray:
    """Evaluate ``func(u)`` on a 3/2-oversampled lattice and truncate back.

    This is the padded form of the 2/3 rule: products up to quadratic order
    are alias free, higher powers have reduced aliasing.
    """
    N, M = grid.N, 3 * grid.N // 2
    uh = np.fft.fftn(u)
    big = np.zeros((M,) * grid.n, dtype=complex)
    idx = _low_mode_index(N, M, grid.n)
    big[idx] = uh[_low_mode_index(N, N, grid.n)]
    fine = np.fft.ifftn(big).real * (M / N) ** grid.n
    fh = np.fft.fftn(func(fine)) * (N / M) ** grid.n
    out = np.zeros(grid.shape, dtype=complex)
    out[_low_mode_index(N, N, grid.n)] = fh[idx]
    return np.fft.ifftn(out).real


def _low_mode_index(N, M, n):
    axis = np.concatenate([np.arange(N // 2), np.arange(M - N // 2, M)])
    return np.ix_(*([axis] * n))


@dataclass
class State:
    grid: Grid
    u: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.grid.check(self.u)
        self.grid.check(self.v)

    def copy(self) -> "State":
        return State(self.grid, self.u.copy(), self.v.copy(), self.t)


def write_field(path, grid: Grid, u: np.ndarray) -> None:
    grid.check(u)
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, grid.n, grid.N, float(grid.L)))
        fh.write(np.ascontiguousarray(u, dtype="<f8").tobytes())


def read_field(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, n, N, L = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: not a KGF1 field file")
    grid = Grid(int(n), float(L), int(N))
    u = np.frombuffer(raw, dtype="<f8", offset=HEADER.size).reshape(grid.shape).copy()
    return grid, u


def write_field_csv(path, grid: Grid, u: np.ndarray) -> None:
    if grid.n != 1:
        raise ValueError("CSV export is for n = 1 fields")
    with open(path, "w") as fh:
        fh.write("x,u\n")
        for xi, ui in zip(grid.x, u):
            fh.write(f"{xi:.17g},{ui:.17g}\n")
