"""Beltrami solves on the torus: Neumann series, fixed point, map reconstruction.

The equation d/dzbar F = mu d/dz F is reduced to the fixed point
g = mu (1 + T g) for g = d/dzbar F, with T the Beurling multiplier. The map is
recovered through the torus ansatz

    F(z) = z + A zbar + C(g - A),        A = mean(g),

where C is the Cauchy multiplier. C cannot produce the zero mode of g, so the
mean rides on the zbar term; this reproduces constant coefficients exactly and
makes A the effective dilatation (for the aligned stripe pattern it equals the
square of the stripe amplitude, independent of scale). By construction
d/dzbar F = g and d/dz F = 1 + T g hold spectrally, so the Beltrami residual
equals the fixed-point residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .errors import (
    ConfigurationError,
    ConvergenceError,
    DegenerateNormalizationError,
    DivergenceError,
    ModelError,
)
from .grid import Field, Grid, l2_norm
from .operators import MultiplierOp, apply_multiplier_samples, beurling, cauchy


@dataclass
class SolveReport:
    """Outcome of one fixed-point solve."""

    g: Field
    a_eff: complex
    residual: float
    iterations: int
    term_norms: list
    mu_inf: float
    converged: bool = True
    clamp_rate: Optional[float] = None
    exp_k_integral: Optional[float] = None


def neumann_terms(mu: Field, T: MultiplierOp, M: int):
    """First M Neumann terms psi_1 = mu, psi_m = mu T psi_{m-1}, with L2 norms."""
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    grid = mu.grid
    k = float(np.max(np.abs(mu.samples)))
    if k >= 1.0:
        import warnings

        warnings.warn(f"sup |mu| = {k} >= 1: Neumann terms may diverge", stacklevel=2)
    m_arr = T.multiplier(grid)
    terms = [mu.copy()]
    norms = [l2_norm(mu.samples, grid)]
    cur = mu.samples
    for m in range(2, M + 1):
        cur = mu.samples * (apply_multiplier_samples(m_arr, cur))
        if not np.all(np.isfinite(cur)):
            raise DivergenceError(
                f"Neumann term {m} is non-finite (sup |mu| = {k})", last_finite_index=m - 1
            )
        terms.append(Field(grid, cur.copy()))
        norms.append(l2_norm(cur, grid))
    return terms, norms


def default_max_iter(tol: float, k: float) -> int:
    """Geometric-convergence budget with headroom: 10 ceil(log tol / log k)."""
    if k <= 0:
        return 10
    base = math.ceil(math.log(tol) / math.log(k)) if k < 1 else 1
    return max(10 * max(base, 1), 10)


def solve_fixed_point(mu: Field, T: Optional[MultiplierOp] = None, tol: float = 1e-10,
                      max_iter: Optional[int] = None) -> SolveReport:
    """Iterate g <- mu (1 + T g) from g = mu until the relative update < tol.

    Successive updates are exactly the Neumann terms psi_m, so term_norms come
    for free. Requires sup |mu| < 1.
    """
    grid = mu.grid
    T = T if T is not None else beurling()
    k = float(np.max(np.abs(mu.samples)))
    if k >= 1.0:
        raise ModelError(f"solve_fixed_point requires sup |mu| < 1, got {k}")
    mu_norm = l2_norm(mu.samples, grid)
    if mu_norm == 0.0:
        return SolveReport(g=mu.copy(), a_eff=0.0, residual=0.0, iterations=0,
                           term_norms=[0.0], mu_inf=0.0)
    if max_iter is None:
        max_iter = default_max_iter(tol, k)
    m_arr = T.multiplier(grid)
    g = mu.samples.copy()
    term_norms = [mu_norm]
    iterations = 0
    rel = math.inf
    while iterations < max_iter:
        g_new = mu.samples * (1.0 + apply_multiplier_samples(m_arr, g))
        if not np.all(np.isfinite(g_new)):
            raise DivergenceError("fixed-point iterate is non-finite",
                                  last_finite_index=iterations)
        upd = l2_norm(g_new - g, grid)
        term_norms.append(upd)
        g = g_new
        iterations += 1
        rel = upd / mu_norm
        if rel < tol:
            break
    else:
        raise ConvergenceError(
            f"no convergence after {max_iter} iterations (relative update {rel:.3e})",
            residual=rel, iterations=max_iter,
        )
    residual = l2_norm(g - mu.samples * (1.0 + apply_multiplier_samples(m_arr, g)), grid)
    return SolveReport(
        g=Field(grid, g),
        a_eff=complex(np.mean(g)),
        residual=residual / mu_norm,
        iterations=iterations,
        term_norms=term_norms,
        mu_inf=k,
    )


@dataclass
class MapField:
    """F(z) = alpha z + beta zbar + periodic(z) with a normalization tag.

    The raw reconstruction has alpha = 1, beta = A_eff; the 3-point form fixes
    F(0) = 0, F(1) = 1 (off-grid values by bilinear interpolation of the
    periodic part plus the exact affine part).
    """

    alpha: complex
    beta: complex
    periodic: Field
    normalization: str = "raw"

    @property
    def grid(self) -> Grid:
        return self.periodic.grid

    def on_grid(self) -> np.ndarray:
        z = self.grid.zmesh()
        return self.alpha * z + self.beta * np.conj(z) + self.periodic.samples

    def evaluate(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=np.complex128)
        per = _bilinear_periodic(self.periodic, z.real, z.imag)
        return self.alpha * z + self.beta * np.conj(z) + per


def _bilinear_periodic(field: Field, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    grid = field.grid
    if grid.d != 2:
        raise ConfigurationError("map evaluation requires d = 2")
    s = field.samples
    out = []
    idx = []
    wts = []
    for coords in (x, y):
        u = (np.asarray(coords) + grid.L / 2) / grid.h - 0.5
        i0 = np.floor(u).astype(np.int64)
        t = u - i0
        idx.append((np.mod(i0, grid.N), np.mod(i0 + 1, grid.N)))
        wts.append(t)
    (ix0, ix1), (iy0, iy1) = idx
    tx, ty = wts
    return ((1 - tx) * (1 - ty) * s[ix0, iy0] + tx * (1 - ty) * s[ix1, iy0]
            + (1 - tx) * ty * s[ix0, iy1] + tx * ty * s[ix1, iy1])


def reconstruct_map(report: SolveReport) -> MapField:
    """Torus reconstruction F = z + A zbar + C(g - A) from a solved report."""
    grid = report.g.grid
    c_arr = cauchy().multiplier(grid)
    per = apply_multiplier_samples(c_arr, report.g.samples - report.a_eff)
    return MapField(alpha=1.0, beta=report.a_eff, periodic=Field(grid, per),
                    normalization="raw")


def normalize_3pt(F: MapField) -> MapField:
    """3-point normalize: Ftilde = (F(1)-F(0))^{-1} (F(z) - F(0))."""
    grid = F.grid
    if grid.L / 4 < 1.0:
        raise ConfigurationError(
            f"3-point normalization needs 0 and 1 inside the inner window (L = {grid.L})"
        )
    f0, f1 = F.evaluate(np.array([0.0 + 0.0j, 1.0 + 0.0j]))
    den = f1 - f0
    if abs(den) < 1e-9:
        raise DegenerateNormalizationError(f"|F(1) - F(0)| = {abs(den)} < 1e-9")
    return MapField(
        alpha=F.alpha / den,
        beta=F.beta / den,
        periodic=Field(grid, (F.periodic.samples - f0) / den),
        normalization="three_point",
    )


def stripes_exact(a: float, grid: Grid, delta: float) -> MapField:
    """Closed-form 3-point-normalized map for the aligned +-a stripe pattern.

    Vertical strips of width delta, value +a on even strips; the map is
    piecewise linear in x with slopes 1 and b^2 (b = (1-a)/(1+a)) and linear
    iby in y, rescaled so F(0) = 0 and F(1) = 1.
    """
    if not 0 < a < 1:
        raise ConfigurationError(f"stripe amplitude must be in (0, 1), got {a}")
    b = (1.0 - a) / (1.0 + a)
    inv_delta = 1.0 / delta
    if abs(inv_delta - round(inv_delta)) > 1e-9 or int(round(inv_delta)) % 2 != 0:
        raise ConfigurationError("stripes_exact needs 1/delta an even integer")
    x = grid.coords(0)
    y = grid.coords(1)
    t = x / delta
    n = np.floor(t / 2.0)
    frac = t - 2.0 * n
    even = frac < 1.0
    gx = np.where(even, frac + n * (1.0 + b * b),
                  b * b * (frac - 1.0) + n * (1.0 + b * b) + 1.0)
    norm = (1.0 + b * b) / (2.0 * delta)
    samples = (gx + 1j * b * (y / delta)) / norm
    samples = np.broadcast_to(samples, grid.shape).astype(np.complex128)
    alpha = 1.0 / (1.0 + a * a)
    beta = a * a / (1.0 + a * a)
    z = grid.zmesh()
    periodic = samples - alpha * z - beta * np.conj(z)
    return MapField(alpha=alpha, beta=beta, periodic=Field(grid, periodic.copy()),
                    normalization="three_point")


def beltrami_residual(mu: Field, F: MapField) -> float:
    """|| dzbar F - mu dz F ||_2 / ||mu||_2 with derivatives taken spectrally."""
    from .operators import dz as dz_op, dzbar as dzbar_op

    grid = mu.grid
    per = F.periodic.samples
    dzbar_F = F.beta + apply_multiplier_samples(dzbar_op().multiplier(grid), per)
    dz_F = F.alpha + apply_multiplier_samples(dz_op().multiplier(grid), per)
    num = l2_norm(dzbar_F - mu.samples * dz_F, grid)
    den = l2_norm(mu.samples, grid)
    return num / den if den > 0 else num
