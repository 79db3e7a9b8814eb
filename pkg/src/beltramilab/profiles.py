"""Bump profiles: the single-site shapes g that tile into random fields.

A profile lives in rescaled coordinates where its home cell is [0, 1)^d with
center (1/2, ..., 1/2). All built-ins are separable into (site value) x
(fixed shape), which is what every model in scope uses. Profiles report their
own decay radius so translates can be truncated once they fall below a given
threshold, and a minimum samples-per-cell so the resolution check can be strict
for smooth shapes and lenient (exact) for cell-aligned indicators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

TRUNCATION_EPS = 1e-12


def _r2(xs) -> np.ndarray:
    out = 0.0
    for x in xs:
        out = out + (np.asarray(x) - 0.5) ** 2
    return out


@dataclass(frozen=True)
class BaseProfile:
    cell_aligned = False
    min_samples = 8

    def eval_coords(self, *xs) -> np.ndarray:
        raise NotImplementedError

    def tail_radius(self, eps: float = TRUNCATION_EPS) -> float:
        raise NotImplementedError

    def max_abs(self) -> float:
        raise NotImplementedError

    def integral(self, d: int) -> complex:
        raise NotImplementedError


@dataclass(frozen=True)
class SquareIndicator(BaseProfile):
    """amp times the indicator of the home cell [0, 1)^d; exact on aligned grids."""

    amp: float = 1.0
    cell_aligned = True
    min_samples = 1

    def eval_coords(self, *xs):
        inside = np.ones(np.broadcast_shapes(*(np.shape(x) for x in xs)), dtype=bool)
        for x in xs:
            inside = inside & (np.asarray(x) >= 0.0) & (np.asarray(x) < 1.0)
        return self.amp * inside.astype(np.complex128)

    def tail_radius(self, eps: float = TRUNCATION_EPS) -> float:
        return 0.5 * math.sqrt(3)  # support radius about the cell center, any d <= 3

    def max_abs(self) -> float:
        return abs(self.amp)

    def integral(self, d: int) -> complex:
        return complex(self.amp)


@dataclass(frozen=True)
class GaussianBump(BaseProfile):
    """amp * exp(-|x - center|^2 / width^2), center at the cell midpoint."""

    width: float = 0.25
    amp: float = 1.0

    def eval_coords(self, *xs):
        return self.amp * np.exp(-_r2(xs) / self.width**2)

    def tail_radius(self, eps: float = TRUNCATION_EPS) -> float:
        return self.width * math.sqrt(max(math.log(abs(self.amp) / eps), 1.0))

    def max_abs(self) -> float:
        return abs(self.amp)

    def integral(self, d: int) -> complex:
        return complex(self.amp * (self.width * math.sqrt(math.pi)) ** d)


@dataclass(frozen=True)
class SmoothSquareBump(BaseProfile):
    """C-infinity bump supported exactly in the home cell (product of axis bumps)."""

    amp: float = 1.0

    @staticmethod
    def _axis(t):
        t = np.asarray(t, dtype=np.float64)
        inside = (t > 0.0) & (t < 1.0)
        out = np.zeros(t.shape, dtype=np.float64)
        ts = np.where(inside, t, 0.5)
        out[inside] = np.exp(1.0 - 1.0 / (4.0 * ts * (1.0 - ts)))[inside]
        return out

    def eval_coords(self, *xs):
        out = np.complex128(self.amp)
        for x in xs:
            out = out * self._axis(x)
        return out

    def tail_radius(self, eps: float = TRUNCATION_EPS) -> float:
        return 0.5 * math.sqrt(3)

    def max_abs(self) -> float:
        return abs(self.amp)

    def integral(self, d: int) -> complex:
        return complex(self.amp * _AXIS_BUMP_MASS**d)


def _axis_bump_mass(n: int = 1 << 16) -> float:
    # midpoint rule; the integrand is C-infinity with all derivatives 0 at the ends
    t = (np.arange(n) + 0.5) / n
    return float(np.mean(np.exp(1.0 - 1.0 / (4.0 * t * (1.0 - t)))))


_AXIS_BUMP_MASS = _axis_bump_mass()


@dataclass(frozen=True)
class TwoBump(BaseProfile):
    """Two equal Gaussian humps split along the first axis inside the cell."""

    sep: float = 0.5
    width: float = 0.1
    amp: float = 0.45

    def _centers(self):
        return 0.5 - self.sep / 2, 0.5 + self.sep / 2

    def eval_coords(self, *xs):
        c1, c2 = self._centers()
        r2_rest = 0.0
        for x in xs[1:]:
            r2_rest = r2_rest + (np.asarray(x) - 0.5) ** 2
        x0 = np.asarray(xs[0])
        w2 = self.width**2
        return self.amp * (
            np.exp(-((x0 - c1) ** 2 + r2_rest) / w2) + np.exp(-((x0 - c2) ** 2 + r2_rest) / w2)
        )

    def tail_radius(self, eps: float = TRUNCATION_EPS) -> float:
        return self.sep / 2 + self.width * math.sqrt(max(math.log(2 * abs(self.amp) / eps), 1.0))

    def max_abs(self) -> float:
        return abs(self.amp) * (1.0 + math.exp(-(self.sep**2) / self.width**2))

    def integral(self, d: int) -> complex:
        return complex(2 * self.amp * (self.width * math.sqrt(math.pi)) ** d)


@dataclass(frozen=True)
class MeanZeroRadial(BaseProfile):
    """Difference of two Gaussians with exactly zero integral (any d).

    amp * (exp(-r^2/w1^2) - (w1/w2)^d exp(-r^2/w2^2)), r measured from the
    cell center. Radial and mean-zero, so its Beurling image decays like the
    profile itself; beurling_exact gives the d = 2 closed form.
    """

    w1: float = 0.18
    w2: float = 0.26
    amp: float = 1.0

    def eval_coords(self, *xs):
        d = len(xs)
        r2 = _r2(xs)
        ratio = (self.w1 / self.w2) ** d
        return self.amp * (np.exp(-r2 / self.w1**2) - ratio * np.exp(-r2 / self.w2**2))

    def tail_radius(self, eps: float = TRUNCATION_EPS) -> float:
        return max(self.w1, self.w2) * math.sqrt(max(math.log(2 * abs(self.amp) / eps), 1.0))

    def max_abs(self) -> float:
        return abs(self.amp)

    def integral(self, d: int) -> complex:
        return 0.0

    def beurling_exact(self, z: np.ndarray) -> np.ndarray:
        """Closed-form Beurling transform in d = 2, argument relative to origin
        at the cell center: T g(z) = (conj(z)/z) g(z) - M(|z|)/(pi z^2) with
        M the mass inside radius |z|."""
        zc = np.asarray(z, dtype=np.complex128)
        r2 = (zc * np.conj(zc)).real
        w1sq, w2sq = self.w1**2, self.w2**2
        ratio = w1sq / w2sq
        g = self.amp * (np.exp(-r2 / w1sq) - ratio * np.exp(-r2 / w2sq))
        mass = self.amp * math.pi * w1sq * (np.exp(-r2 / w2sq) - np.exp(-r2 / w1sq))
        zsafe = np.where(zc == 0, 1.0, zc)
        out = np.conj(zsafe) / zsafe * g - mass / (math.pi * zsafe**2)
        return np.where(zc == 0, 0.0, out)


class TabulatedProfile(BaseProfile):
    """Profile tabulated on a reference torus, evaluated by cubic spline.

    Used for transformed profiles such as g' = T(g - A 1_cell): the transform
    is computed once on a fine reference grid (in profile coordinates, home
    cell [0,1)^2 near the middle) and rescaled wherever a tensor product needs
    it. Values outside the reference window are truncated to zero.
    """

    cell_aligned = False
    min_samples = 8

    def __init__(self, ref_grid, values: np.ndarray, tail: float):
        from scipy.interpolate import RectBivariateSpline

        if ref_grid.d != 2:
            raise ConfigurationError("TabulatedProfile supports d = 2 only")
        self.ref_grid = ref_grid
        self.tail = float(tail)
        # profile coordinates: reference torus centered on the cell center
        ax = ref_grid.axis_coords + 0.5
        self._lo, self._hi = ax[0], ax[-1]
        self._re = RectBivariateSpline(ax, ax, values.real, kx=3, ky=3)
        self._im = RectBivariateSpline(ax, ax, values.imag, kx=3, ky=3)

    def eval_coords(self, *xs):
        if len(xs) != 2:
            raise ConfigurationError("TabulatedProfile supports d = 2 only")
        x, y = np.broadcast_arrays(np.asarray(xs[0], float), np.asarray(xs[1], float))
        inside = (x >= self._lo) & (x <= self._hi) & (y >= self._lo) & (y <= self._hi)
        xq = np.clip(x, self._lo, self._hi)
        yq = np.clip(y, self._lo, self._hi)
        vals = self._re.ev(xq, yq) + 1j * self._im.ev(xq, yq)
        return np.where(inside, vals, 0.0)

    def tail_radius(self, eps: float = TRUNCATION_EPS) -> float:
        return self.tail

    def max_abs(self) -> float:
        return float(np.abs(self._re(self.ref_grid.axis_coords + 0.5,
                                      self.ref_grid.axis_coords + 0.5)).max())

    def integral(self, d: int) -> complex:
        raise NotImplementedError("tabulated profiles carry no closed-form integral")


@dataclass(frozen=True)
class LatticeProductProfile(BaseProfile):
    """g2(x) * sum_n g1(x + n): the single-cell profile of a product of tensor
    products. For cell-supported g1 only the n = 0 term survives."""

    g1: BaseProfile
    g2: BaseProfile

    @property
    def min_samples(self):  # type: ignore[override]
        return max(self.g1.min_samples, self.g2.min_samples)

    def _offsets(self, d: int):
        r = int(math.ceil(self.g1.tail_radius() + 0.5))
        rng = range(-r, r + 1)
        if d == 1:
            return [(n,) for n in rng]
        if d == 2:
            return [(n1, n2) for n1 in rng for n2 in rng]
        return [(n1, n2, n3) for n1 in rng for n2 in rng for n3 in rng]

    def eval_coords(self, *xs):
        d = len(xs)
        acc = 0.0
        for off in self._offsets(d):
            acc = acc + self.g1.eval_coords(*(np.asarray(x) + o for x, o in zip(xs, off)))
        return acc * self.g2.eval_coords(*xs)

    def tail_radius(self, eps: float = TRUNCATION_EPS) -> float:
        return self.g2.tail_radius(eps)

    def max_abs(self) -> float:
        return self.g1.max_abs() * self.g2.max_abs() * 2  # crude bound, display only

    def integral(self, d: int) -> complex:
        raise NotImplementedError("lattice-product integrals are computed by quadrature")


_PROFILE_KINDS = {
    "unit_square_indicator": SquareIndicator,
    "gaussian_bump": GaussianBump,
    "smooth_square_bump": SmoothSquareBump,
    "two_bump": TwoBump,
    "mean_zero_radial": MeanZeroRadial,
}


def profile_from_spec(spec: dict) -> BaseProfile:
    """Build a profile from its JSON description ({'kind': ..., params...})."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind not in _PROFILE_KINDS:
        raise ConfigurationError(f"unknown bump profile kind {kind!r}")
    try:
        return _PROFILE_KINDS[kind](**spec)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for profile {kind!r}: {exc}") from exc
