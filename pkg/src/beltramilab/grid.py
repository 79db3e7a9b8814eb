"""Periodic sampling grids, discrete Fourier analysis, quadrature and cell averages.

Conventions (fixed once for the whole package):

* the torus is [-L/2, L/2)^d with samples at cell centers
  x_k = -L/2 + (k + 1/2) L/N per axis;
* the frequency lattice is xi in (1/L) {-N/2, ..., N/2 - 1}^d and the forward
  transform approximates f_hat(xi) = int f(x) exp(-2 pi i <x, xi>) dx with the
  Riemann weight (L/N)^d, so that d/dzbar -> pi i xi and d/dz -> pi i conj(xi)
  with xi = xi_1 + i xi_2 in d = 2;
* the inverse transform is the exact discrete inverse of the forward one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigurationError, ResolutionError

PHYSICAL = "physical"
SPECTRAL = "spectral"


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on the d-torus, d in {1, 2, 3}, N a power of two."""

    d: int
    N: int
    L: float

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ConfigurationError(f"dimension must be 1, 2 or 3, got {self.d}")
        if self.N < 8 or (self.N & (self.N - 1)) != 0:
            raise ConfigurationError(f"N must be a power of two >= 8, got {self.N}")
        if not self.L > 0:
            raise ConfigurationError(f"period L must be positive, got {self.L}")
        object.__setattr__(self, "L", float(self.L))

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.d

    @property
    def cell_volume(self) -> float:
        return (self.L / self.N) ** self.d

    @cached_property
    def axis_coords(self) -> np.ndarray:
        return -self.L / 2 + (np.arange(self.N) + 0.5) * self.h

    @cached_property
    def axis_freqs(self) -> np.ndarray:
        # fft ordering: modes 0, 1, ..., N/2-1, -N/2, ..., -1 over period L
        return np.fft.fftfreq(self.N, d=1.0) * (self.N / self.L)

    @cached_property
    def _axis_phase(self) -> np.ndarray:
        # exp(-2 pi i x_0 xi) with x_0 the first cell center; turns the DFT of
        # cell-centered samples into the quadrature transform above
        x0 = -self.L / 2 + self.h / 2
        return np.exp(-2j * np.pi * x0 * self.axis_freqs)

    def broadcast_axis(self, values: np.ndarray, axis: int) -> np.ndarray:
        shape = [1] * self.d
        shape[axis] = self.N
        return values.reshape(shape)

    def coords(self, axis: int) -> np.ndarray:
        return self.broadcast_axis(self.axis_coords, axis)

    def freqs(self, axis: int) -> np.ndarray:
        return self.broadcast_axis(self.axis_freqs, axis)

    def zmesh(self) -> np.ndarray:
        """Complex coordinates z = x1 + i x2 (d = 2 only)."""
        if self.d != 2:
            raise ConfigurationError("zmesh requires d = 2")
        return self.coords(0) + 1j * self.coords(1)

    def freq_abs2(self) -> np.ndarray:
        out = np.zeros(self.shape)
        for ax in range(self.d):
            out = out + self.freqs(ax) ** 2
        return out


@dataclass
class Field:
    """Complex samples on a grid, tagged physical or spectral."""

    grid: Grid
    samples: np.ndarray
    space: str = PHYSICAL

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128)
        if samples.shape != self.grid.shape:
            raise ConfigurationError(
                f"sample shape {samples.shape} does not match grid {self.grid.shape}"
            )
        if self.space not in (PHYSICAL, SPECTRAL):
            raise ConfigurationError(f"unknown space tag {self.space!r}")
        self.samples = samples

    def copy(self) -> "Field":
        return Field(self.grid, self.samples.copy(), self.space)

    def mean(self) -> complex:
        return complex(np.mean(self.samples))

    def _binary_check(self, other: "Field"):
        if self.grid != other.grid:
            raise ConfigurationError("fields live on different grids")
        if self.space != other.space:
            raise ConfigurationError("fields live in different spaces")

    def __add__(self, other: "Field") -> "Field":
        self._binary_check(other)
        return Field(self.grid, self.samples + other.samples, self.space)

    def __sub__(self, other: "Field") -> "Field":
        self._binary_check(other)
        return Field(self.grid, self.samples - other.samples, self.space)

    def __mul__(self, other):
        if isinstance(other, Field):
            self._binary_check(other)
            return Field(self.grid, self.samples * other.samples, self.space)
        return Field(self.grid, self.samples * other, self.space)

    __rmul__ = __mul__


def constant_field(grid: Grid, value: complex) -> Field:
    return Field(grid, np.full(grid.shape, value, dtype=np.complex128))


def field_from_callable(grid: Grid, fn) -> Field:
    """Sample fn(*coordinate_arrays) at cell centers (broadcasting axes)."""
    axes = [grid.coords(ax) for ax in range(grid.d)]
    vals = np.asarray(fn(*axes), dtype=np.complex128)
    return Field(grid, np.broadcast_to(vals, grid.shape).copy())


def spectral_transform(f: Field, direction: str) -> Field:
    """Forward quadrature Fourier transform or its exact discrete inverse."""
    grid = f.grid
    if direction == "forward":
        if f.space != PHYSICAL:
            raise ConfigurationError("forward transform expects a physical-space field")
        out = np.fft.fftn(f.samples) * grid.cell_volume
        for ax in range(grid.d):
            out *= grid.broadcast_axis(grid._axis_phase, ax)
        return Field(grid, out, SPECTRAL)
    if direction == "inverse":
        if f.space != SPECTRAL:
            raise ConfigurationError("inverse transform expects a spectral-space field")
        tmp = f.samples.copy()
        for ax in range(grid.d):
            tmp *= grid.broadcast_axis(np.conj(grid._axis_phase), ax)
        out = np.fft.ifftn(tmp) / grid.cell_volume
        return Field(grid, out, PHYSICAL)
    raise ConfigurationError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def pairing(f: Field, phi: Field) -> complex:
    """Quadrature of f*phi over the torus (plain product, no conjugation)."""
    if f.grid != phi.grid:
        raise ConfigurationError("pairing requires both fields on one grid")
    if f.space != PHYSICAL or phi.space != PHYSICAL:
        raise ConfigurationError("pairing requires physical-space fields")
    return complex(np.sum(f.samples * phi.samples) * f.grid.cell_volume)


def spectral_pairing(fhat: Field, ghat: Field) -> complex:
    """Frequency-side pairing sum fhat * ghat * (1/L)^d (Parseval partner)."""
    if fhat.grid != ghat.grid:
        raise ConfigurationError("pairing requires both fields on one grid")
    if fhat.space != SPECTRAL or ghat.space != SPECTRAL:
        raise ConfigurationError("spectral pairing requires spectral-space fields")
    return complex(np.sum(fhat.samples * ghat.samples) / fhat.grid.L**fhat.grid.d)


def lp_norm(f: Field, p) -> float:
    """L^p quadrature norm; p = inf gives the sample sup."""
    if f.space != PHYSICAL:
        raise ConfigurationError("lp_norm expects a physical-space field")
    if p == np.inf or p == "inf":
        return float(np.max(np.abs(f.samples)))
    p = float(p)
    if p < 1:
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    a = np.abs(f.samples)
    return float((np.sum(a**p) * f.grid.cell_volume) ** (1.0 / p))


def l2_norm(samples: np.ndarray, grid: Grid) -> float:
    """L2 quadrature norm of a raw sample array (internal fast path)."""
    return float(np.sqrt(np.sum(np.abs(samples) ** 2).real * grid.cell_volume))


@dataclass
class CellAverages:
    """Exact per-cell averages [f]_delta(n) on the lattice n*delta + [0, delta)^d.

    values[i_1, ..., i_d] is the average over the cell with n = n0 + i; the
    lattice origin n0 = -L/(2 delta) per axis puts cell (0,...,0) at the corner 0.
    """

    values: np.ndarray
    delta: float
    n0: int
    grid: Grid

    @property
    def cells_per_axis(self) -> int:
        return self.values.shape[0]

    def prolong(self) -> Field:
        """Piecewise-constant prolongation back to the sample grid."""
        out = self.values
        s = self.grid.N // self.cells_per_axis
        for ax in range(self.grid.d):
            out = np.repeat(out, s, axis=ax)
        return Field(self.grid, out)


def scale_ratio(grid: Grid, delta: float) -> int:
    """delta / h as an exact integer, or raise ResolutionError."""
    ratio = delta / grid.h
    s = int(round(ratio))
    if s < 1 or abs(ratio - s) > 1e-9:
        raise ResolutionError(
            f"delta = {delta} is not an integer multiple of the grid spacing h = {grid.h}"
        )
    return s


def cell_average(f: Field, delta: float) -> CellAverages:
    """Average f over each delta-cell (delta an integer multiple of h)."""
    if f.space != PHYSICAL:
        raise ConfigurationError("cell_average expects a physical-space field")
    grid = f.grid
    s = scale_ratio(grid, delta)
    M = grid.N // s
    if M * s != grid.N:
        raise ResolutionError(f"delta = {delta} does not tile the torus (N = {grid.N})")
    if M % 2 != 0:
        raise ResolutionError(
            f"L/(2 delta) = {grid.L / (2 * delta)} must be an integer so the cell "
            "lattice contains the origin corner"
        )
    shaped = f.samples.reshape(sum(((M, s) for _ in range(grid.d)), ()))
    values = shaped.mean(axis=tuple(2 * ax + 1 for ax in range(grid.d)))
    return CellAverages(values=values, delta=float(delta), n0=-(M // 2), grid=grid)
