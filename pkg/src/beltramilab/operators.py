"""Translation- and dilation-invariant singular integrals as Fourier multipliers.

Every operator is diagonal on the frequency lattice with the xi = 0 mode
annihilated (principal-value operators carry no canonical zero mode; the one
consequence, C inverting d/dzbar only on mean-zero data, is handled explicitly
in the map reconstruction). The identity built-in follows the same rule, so it
acts as Id minus the torus mean.

Built-in multipliers, with xi = xi_1 + i xi_2 in d = 2:

========== ======= ============================ =====
name       degree  m(xi)                        dims
========== ======= ============================ =====
beurling      0    conj(xi)/xi                  2
cauchy       -1    1/(pi i xi)                  2
dz           +1    pi i conj(xi)                2
dzbar        +1    pi i xi                      2
riesz2(a,b)   0    -xi_a xi_b / |xi|^2          any
invlap(a,b)   0    xi_a xi_b / |xi|^2           any
inv_laplacian -2   -1/(4 pi^2 |xi|^2)           any
identity      0    1                            any
custom        0    tabulated angular symbol     2
========== ======= ============================ =====

invlap(a,b) is Delta^{-1} d_a d_b, the building block of the 3-d PDE demo.
Any bounded angular symbol is accepted for custom operators; the built-ins
fall in the classical smooth mean-zero class (plus an identity component).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError
from .grid import PHYSICAL, SPECTRAL, Field, Grid

_TWO_D_ONLY = ("beurling", "cauchy", "dz", "dzbar", "custom_angular")


@dataclass(frozen=True)
class MultiplierOp:
    """A Fourier-multiplier operator: |xi|^degree times an angular symbol."""

    name: str
    kind: str
    degree: int
    params: tuple = ()

    def multiplier(self, grid: Grid) -> np.ndarray:
        """The multiplier sampled on the grid's frequency lattice (read-only)."""
        self.check_dims(grid.d)
        return _multiplier_array(self, grid)

    def check_dims(self, d: int):
        if self.kind in _TWO_D_ONLY and d != 2:
            raise ConfigurationError(f"operator {self.name!r} requires d = 2, got d = {d}")
        if self.kind == "riesz2" or self.kind == "deriv2_over_lap":
            a, b = self.params
            if a >= d or b >= d:
                raise ConfigurationError(
                    f"operator {self.name!r} uses axis {max(a, b)} but d = {d}"
                )


def beurling() -> MultiplierOp:
    return MultiplierOp("beurling", "beurling", 0)


def cauchy() -> MultiplierOp:
    return MultiplierOp("cauchy", "cauchy", -1)


def dz() -> MultiplierOp:
    return MultiplierOp("dz", "dz", 1)


def dzbar() -> MultiplierOp:
    return MultiplierOp("dzbar", "dzbar", 1)


def riesz2(a: int, b: int) -> MultiplierOp:
    return MultiplierOp(f"riesz2({a},{b})", "riesz2", 0, (int(a), int(b)))


def inv_laplacian() -> MultiplierOp:
    return MultiplierOp("inv_laplacian", "inv_laplacian", -2)


def deriv2_over_laplacian(a: int, b: int) -> MultiplierOp:
    """Delta^{-1} d_a d_b (degree 0, sup 1/2 off-diagonal, 1 on-diagonal)."""
    return MultiplierOp(f"invlap_d{a}d{b}", "deriv2_over_lap", 0, (int(a), int(b)))


def identity_op() -> MultiplierOp:
    return MultiplierOp("identity", "identity", 0)


def custom_angular(table) -> MultiplierOp:
    """Degree-0 operator from tabulated (angle, complex value) pairs, d = 2.

    The symbol is interpolated linearly in the angle with periodic wrap.
    """
    entries = tuple(sorted((float(a) % (2 * np.pi), complex(v)) for a, v in table))
    if len(entries) < 2:
        raise ConfigurationError("custom angular symbol needs at least 2 table entries")
    return MultiplierOp("custom", "custom_angular", 0, entries)


@lru_cache(maxsize=3)
def _multiplier_array(op: MultiplierOp, grid: Grid) -> np.ndarray:
    kind = op.kind
    zero = (0,) * grid.d
    if kind == "identity":
        m = np.ones(grid.shape, dtype=np.complex128)
    elif kind in ("beurling", "cauchy", "dz", "dzbar"):
        xi = grid.freqs(0) + 1j * grid.freqs(1)
        xi = np.broadcast_to(xi, grid.shape).copy()
        xi[zero] = 1.0  # placeholder, zero mode overwritten below
        if kind == "beurling":
            m = np.conj(xi) / xi
        elif kind == "cauchy":
            m = 1.0 / (np.pi * 1j * xi)
        elif kind == "dz":
            m = np.pi * 1j * np.conj(xi)
        else:
            m = np.pi * 1j * xi
    elif kind in ("riesz2", "deriv2_over_lap"):
        a, b = op.params
        abs2 = grid.freq_abs2()
        abs2[zero] = 1.0
        m = (grid.freqs(a) * grid.freqs(b) / abs2).astype(np.complex128)
        if kind == "riesz2":
            m = -m
    elif kind == "inv_laplacian":
        abs2 = grid.freq_abs2()
        abs2[zero] = 1.0
        m = (-1.0 / (4 * np.pi**2 * abs2)).astype(np.complex128)
    elif kind == "custom_angular":
        angles = np.array([a for a, _ in op.params])
        vals = np.array([v for _, v in op.params], dtype=np.complex128)
        # periodic linear interpolation in the angle
        angles = np.concatenate([angles, [angles[0] + 2 * np.pi]])
        vals = np.concatenate([vals, [vals[0]]])
        theta = np.arctan2(
            np.broadcast_to(grid.freqs(1), grid.shape),
            np.broadcast_to(grid.freqs(0), grid.shape),
        ) % (2 * np.pi)
        m = np.interp(theta, angles, vals.real) + 1j * np.interp(theta, angles, vals.imag)
        m = m.astype(np.complex128)
    else:
        raise ConfigurationError(f"unknown operator kind {kind!r}")
    m = np.broadcast_to(m, grid.shape).copy()
    m[zero] = 0.0
    m.setflags(write=False)
    return m


def apply_operator(T: MultiplierOp, f: Field) -> Field:
    """Apply T spectrally: inverse transform of m(xi) f_hat(xi), zero mode 0.

    The cell-center quadrature phases cancel between the forward and inverse
    transforms, so this reduces to ifftn(m * fftn(samples)).
    """
    if f.space != PHYSICAL:
        raise ConfigurationError("apply_operator expects a physical-space field")
    m = T.multiplier(f.grid)
    return Field(f.grid, np.fft.ifftn(m * np.fft.fftn(f.samples)), PHYSICAL)


def apply_multiplier_samples(m: np.ndarray, samples: np.ndarray) -> np.ndarray:
    """Raw-array version of apply_operator for iteration hot loops."""
    return np.fft.ifftn(m * np.fft.fftn(samples))


def operator_sup_norm(T: MultiplierOp, grid: Grid) -> float:
    """max |m(xi)| over the grid's nonzero frequency lattice."""
    return float(np.max(np.abs(T.multiplier(grid))))


def chain_apply(ops, start: Field) -> Field:
    """Right-to-left composition: the last list entry acts first.

    Entries are either Fields (pointwise multiplication) or MultiplierOps.
    chain_apply([mu, T, mu], ones) is mu * T(mu * ones).
    """
    x = start
    for item in reversed(list(ops)):
        if isinstance(item, MultiplierOp):
            x = apply_operator(item, x)
        elif isinstance(item, Field):
            x = item * x
        else:
            raise ValueError(f"chain entries must be Field or MultiplierOp, got {type(item)}")
    return x
