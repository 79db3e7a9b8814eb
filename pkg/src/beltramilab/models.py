"""Dilatation models: bump fields, envelopes, checkerboards, stripes, the
degenerate model, and the (stochastic) multiscale tensor product.

Site layout: at scale delta = 2**-j the torus [-L/2, L/2)^d is tiled by cells
n*delta + [0, delta)^d with n in [-L/(2 delta), L/(2 delta))^d. Each site draws
from its own counter-based stream (see randomness), so generation is
order-independent and reproducible. Translates of a profile are truncated once
they decay below 1e-12 of their peak and wrap at most once around the torus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .errors import ConfigurationError, ModelError, ResolutionError
from .grid import Field, Grid, cell_average, scale_ratio
from .profiles import (
    BaseProfile,
    GaussianBump,
    SmoothSquareBump,
    SquareIndicator,
    TwoBump,
    profile_from_spec,
)
from .randomness import Distribution, constant_dist, degenerate_k, rademacher, site_keys


@dataclass(frozen=True)
class Envelope:
    """Macroscopic, scale-independent modulation of a dilatation field.

    kinds: constant(a), indicator_square(corner, side), smooth_bump(center,
    radius, height) and holder_product (indicator times smooth bump). The
    Hölder exponent is carried as metadata; built-ins satisfy it by
    construction.
    """

    kind: str
    params: tuple = ()
    holder_alpha: float = 1.0

    @staticmethod
    def constant(a: complex) -> "Envelope":
        return Envelope("constant", (complex(a),))

    @staticmethod
    def indicator_square(corner=(0.0, 0.0), side: float = 1.0) -> "Envelope":
        return Envelope("indicator_square", (tuple(float(c) for c in corner), float(side)))

    @staticmethod
    def smooth_bump(center=(0.0, 0.0), radius: float = 1.0, height: float = 0.5) -> "Envelope":
        return Envelope("smooth_bump", (tuple(float(c) for c in center), float(radius),
                                        float(height)))

    @staticmethod
    def holder_product(corner=(0.0, 0.0), side: float = 1.0, center=(0.5, 0.5),
                       radius: float = 1.0, height: float = 0.5) -> "Envelope":
        return Envelope("holder_product",
                        (tuple(float(c) for c in corner), float(side),
                         tuple(float(c) for c in center), float(radius), float(height)))

    def sup_bound(self) -> float:
        if self.kind == "constant":
            return abs(self.params[0])
        if self.kind == "indicator_square":
            return 1.0
        if self.kind in ("smooth_bump", "holder_product"):
            return abs(self.params[-1])
        raise ConfigurationError(f"unknown envelope kind {self.kind!r}")

    def sample(self, grid: Grid) -> Field:
        if self.kind == "constant":
            return Field(grid, np.full(grid.shape, self.params[0], dtype=np.complex128))
        if self.kind == "indicator_square":
            corner, side = self.params
            return Field(grid, self._indicator(grid, corner, side))
        if self.kind == "smooth_bump":
            center, radius, height = self.params
            return Field(grid, self._smooth(grid, center, radius, height))
        corner, side, center, radius, height = self.params
        return Field(grid, self._indicator(grid, corner, side)
                     * self._smooth(grid, center, radius, height))

    def _indicator(self, grid: Grid, corner, side) -> np.ndarray:
        inside = np.ones(grid.shape, dtype=bool)
        for ax in range(grid.d):
            c = corner[ax] if ax < len(corner) else corner[-1]
            x = grid.coords(ax)
            inside = inside & (x >= c) & (x < c + side)
        return inside.astype(np.complex128)

    def _smooth(self, grid: Grid, center, radius, height) -> np.ndarray:
        r2 = np.zeros(grid.shape)
        for ax in range(grid.d):
            c = center[ax] if ax < len(center) else 0.0
            r2 = r2 + (grid.coords(ax) - c) ** 2
        t = r2 / radius**2
        inside = t < 1.0
        out = np.zeros(grid.shape)
        tsafe = np.where(inside, t, 0.0)
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - tsafe))[inside]
        return height * out.astype(np.complex128)


def envelope_from_spec(spec: dict) -> Envelope:
    spec = dict(spec)
    kind = spec.pop("kind", None)
    builders = {
        "constant": Envelope.constant,
        "indicator_square": Envelope.indicator_square,
        "smooth_bump": Envelope.smooth_bump,
        "holder_product": Envelope.holder_product,
    }
    if kind not in builders:
        raise ConfigurationError(f"unknown envelope kind {kind!r}")
    if kind == "constant" and isinstance(spec.get("a"), (list, tuple)):
        spec["a"] = complex(*spec["a"])
    try:
        return builders[kind](**spec)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for envelope {kind!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# site lattice and scattering


@dataclass(frozen=True)
class SiteLattice:
    grid: Grid
    j: int
    delta: float
    s: int   # samples per cell and axis
    M: int   # cells per axis
    n0: int  # first lattice index per axis


def site_lattice(grid: Grid, j: int) -> SiteLattice:
    delta = 2.0 ** (-j)
    s = scale_ratio(grid, delta)
    M = grid.N // s
    if M % 2 != 0:
        raise ResolutionError(
            f"L/(2 delta) = {grid.L / (2 * delta)} must be an integer (j = {j}, L = {grid.L})"
        )
    return SiteLattice(grid, j, delta, s, M, -(M // 2))


def check_profile_resolution(lat: SiteLattice, profile: BaseProfile):
    if lat.s < profile.min_samples:
        raise ResolutionError(
            f"delta/h = {lat.s} but profile {type(profile).__name__} needs at least "
            f"{profile.min_samples} samples per cell"
        )
    if 2 * profile.tail_radius() * lat.delta > lat.grid.L:
        raise ResolutionError(
            "profile tail wraps more than once around the torus at this scale"
        )


def site_index_mesh(lat: SiteLattice):
    """Integer site coordinates n per axis, broadcast to the site lattice shape."""
    idx = np.arange(lat.n0, lat.n0 + lat.M)
    out = []
    for ax in range(lat.grid.d):
        shape = [1] * lat.grid.d
        shape[ax] = lat.M
        out.append(np.broadcast_to(idx.reshape(shape), (lat.M,) * lat.grid.d))
    return tuple(out)


def scatter_sites(lat: SiteLattice, weights: np.ndarray, profile: BaseProfile) -> np.ndarray:
    """sum_n weights[n] * profile(x/delta - n) sampled at cell centers.

    Exact block assignment for cell-aligned indicators; otherwise an exact
    circular convolution of the upsampled weight lattice with the sampled
    (tail-truncated) profile, evaluated by FFT.
    """
    grid, s, M = lat.grid, lat.s, lat.M
    if weights.shape != (M,) * grid.d:
        raise ConfigurationError("weight lattice does not match the site lattice")
    if profile.cell_aligned:
        amp = profile.eval_coords(*((np.full((1,) * grid.d, 0.5),) * grid.d)).reshape(())
        out = weights.astype(np.complex128) * amp
        for ax in range(grid.d):
            out = np.repeat(out, s, axis=ax)
        return out
    # sampled profile at offsets q relative to the owning site's origin cell,
    # wrapped once around the torus and truncated beyond the tail radius
    q = np.arange(grid.N)
    q = (q + grid.N // 2) % grid.N - grid.N // 2
    zeta = (q + 0.5) / s
    axes = [grid.broadcast_axis(zeta, ax) for ax in range(grid.d)]
    patch = np.asarray(profile.eval_coords(*axes), dtype=np.complex128)
    patch = np.broadcast_to(patch, grid.shape).copy()
    r2 = np.zeros(grid.shape)
    for ax in range(grid.d):
        r2 = r2 + (axes[ax] - 0.5) ** 2
    patch[r2 > profile.tail_radius() ** 2] = 0.0
    lattice = np.zeros(grid.shape, dtype=np.complex128)
    lattice[(slice(None, None, s),) * grid.d] = weights
    return np.fft.ifftn(np.fft.fftn(lattice) * np.fft.fftn(patch))


# ---------------------------------------------------------------------------
# spec operations


def bump_field(grid: Grid, profile: BaseProfile, dist: Distribution, j: int,
               seed: int) -> Field:
    """Random bump field B_delta = sum_n X_n profile(x/delta - n), delta = 2**-j."""
    lat = site_lattice(grid, j)
    check_profile_resolution(lat, profile)
    keys = site_keys(seed, j, site_index_mesh(lat))
    values = dist.sample(keys)
    return Field(grid, scatter_sites(lat, values, profile))


def tensor_product(f, profile: BaseProfile, j: int, dist: Optional[Distribution],
                   seed: int = 0, grid: Optional[Grid] = None) -> Field:
    """Multiscale tensor product sum_n [f]_delta(n) g(x/delta - n) (times X_n
    when a distribution is supplied: the stochastic variant)."""
    if not isinstance(f, Field):
        if grid is None:
            raise ConfigurationError("tensor_product needs a Field or an explicit grid")
        f = f.sample(grid)
    lat = site_lattice(f.grid, j)
    check_profile_resolution(lat, profile)
    weights = cell_average(f, lat.delta).values
    if dist is not None and dist.kind != "constant":
        keys = site_keys(seed, j, site_index_mesh(lat))
        weights = weights * dist.sample(keys)
    elif dist is not None:
        weights = weights * dist.params[0]
    return Field(f.grid, scatter_sites(lat, weights, profile))


@dataclass(frozen=True)
class DilatationModel:
    """Declarative description of one dilatation field at scale 2**-j.

    kinds: constant, stripes, model1_periodic, model2_checkerboard,
    model3_bumpfield, model4_degenerate.
    """

    kind: str
    a: complex = 0.0
    masked: bool = False
    gamma: float = 4.0
    k_cap: float = 50.0
    p_exp: float = 2.5
    profile: Optional[BaseProfile] = None
    dist: Optional[Distribution] = None
    envelope: Optional[Envelope] = None
    independent: bool = False

    def bound(self) -> float:
        """A priori sup bound on |mu| (1.0 for the degenerate model's cap)."""
        if self.kind in ("constant", "stripes"):
            return abs(self.a)
        if self.kind == "model2_checkerboard":
            return abs(self.a)
        if self.kind == "model4_degenerate":
            return (self.k_cap - 1.0) / (self.k_cap + 1.0)
        env = self.envelope.sup_bound() if self.envelope is not None else 1.0
        prof = self.profile.max_abs() if self.profile is not None else 1.0
        return env * prof


def model_from_spec(spec: dict) -> DilatationModel:
    spec = dict(spec)
    kind = spec.pop("kind", None)
    kinds = ("constant", "stripes", "model1_periodic", "model2_checkerboard",
             "model3_bumpfield", "model4_degenerate")
    if kind not in kinds:
        raise ConfigurationError(f"unknown model kind {kind!r}")
    if isinstance(spec.get("a"), (list, tuple)):
        spec["a"] = complex(*spec["a"])
    if "profile" in spec:
        spec["profile"] = profile_from_spec(spec["profile"])
    if "dist" in spec:
        d = dict(spec["dist"])
        dkind = d.pop("kind", None)
        if dkind == "rademacher":
            spec["dist"] = rademacher()
        elif dkind == "symmetric_disk":
            spec["dist"] = Distribution("symmetric_disk", (float(d.get("r", 1.0)),))
        elif dkind == "constant":
            c = d.get("c", 1.0)
            spec["dist"] = constant_dist(complex(*c) if isinstance(c, (list, tuple)) else c)
        elif dkind == "degenerate_k":
            spec["dist"] = degenerate_k(float(d.get("gamma", 4.0)))
        else:
            raise ConfigurationError(f"unknown distribution kind {dkind!r}")
    if "envelope" in spec:
        spec["envelope"] = envelope_from_spec(spec["envelope"])
    try:
        return DilatationModel(kind=kind, **spec)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for model {kind!r}: {exc}") from exc


def _mask_q0(grid: Grid) -> np.ndarray:
    """Exact indicator of Q0 = [0,1)^d sampled at cell centers."""
    return Envelope.indicator_square((0.0,) * grid.d, 1.0).sample(grid).samples


def build_dilatation(grid: Grid, model: DilatationModel, j: int, seed: int):
    """Realize a model at scale 2**-j: returns (Field, diagnostics dict).

    Diagnostics always carry mu_inf; the degenerate model adds clamp_rate and
    exp_K_integral (integral of exp(p K) over Q0 at the configured p).
    """
    diagnostics: dict = {}
    if model.kind == "constant":
        mu = np.full(grid.shape, complex(model.a), dtype=np.complex128)
        out = Field(grid, mu)
    elif model.kind == "stripes":
        lat = site_lattice(grid, j)
        strip = np.floor(grid.axis_coords / lat.delta + 1e-12).astype(np.int64)
        sign = np.where(strip % 2 == 0, 1.0, -1.0).astype(np.complex128) * complex(model.a)
        out = Field(grid, np.broadcast_to(grid.broadcast_axis(sign, 0), grid.shape).copy())
    elif model.kind == "model1_periodic":
        profile = model.profile or SmoothSquareBump(amp=1.0)
        env = model.envelope or Envelope.smooth_bump((0.0, 0.0), 1.0, 0.5)
        bumps = bump_field(grid, profile, constant_dist(1.0), j, seed)
        out = env.sample(grid) * bumps
    elif model.kind == "model2_checkerboard":
        base = bump_field(grid, SquareIndicator(), rademacher(), j, seed)
        mu = complex(model.a) * base.samples
        if model.masked:
            mu = mu * _mask_q0(grid)
        out = Field(grid, mu)
    elif model.kind == "model3_bumpfield":
        profile = model.profile or GaussianBump()
        dist = model.dist or rademacher()
        env = model.envelope or Envelope.constant(0.5)
        out = env.sample(grid) * bump_field(grid, profile, dist, j, seed)
    elif model.kind == "model4_degenerate":
        lat = site_lattice(grid, j)
        check_profile_resolution(lat, SquareIndicator())
        keys = site_keys(seed, j, site_index_mesh(lat))
        dist = model.dist or degenerate_k(model.gamma)
        eps, _, clamped = dist.sample_degenerate(keys, model.k_cap)
        mu = scatter_sites(lat, eps, SquareIndicator())
        mask = _mask_q0(grid)
        mu = mu * mask
        masked_sites = int(round((1.0 / lat.delta) ** grid.d))
        diagnostics["clamp_rate"] = clamped / keys.size  # clamps counted over all sites
        absmu = np.abs(mu)
        k_field = (1.0 + absmu) / (1.0 - absmu)
        diagnostics["exp_K_integral"] = float(
            np.sum(np.exp(model.p_exp * k_field) * mask.real) * grid.cell_volume
        )
        diagnostics["masked_sites"] = masked_sites
        out = Field(grid, mu)
    else:
        raise ConfigurationError(f"unknown model kind {model.kind!r}")

    diagnostics["mu_inf"] = float(np.max(np.abs(out.samples)))
    if model.kind != "model4_degenerate" and diagnostics["mu_inf"] >= 1.0:
        raise ModelError(
            f"model {model.kind!r} produced sup |mu| = {diagnostics['mu_inf']} >= 1"
        )
    return out, diagnostics


@dataclass
class BumpBoundReport:
    passed: bool
    sup: float
    witness: tuple
    trials: int


def validate_bump_bound(profile: BaseProfile, dist: Distribution, trials: int = 256,
                        seed: int = 0, d: int = 2) -> BumpBoundReport:
    """Monte Carlo check of sup_z |sum_n g(z - n, y_n)| <= 1 (+1e-9 slack).

    Random offsets z in the home cell (the lattice sum is 1-periodic) and
    independent draws y_n over every translate within the tail radius; the
    report carries the worst witness point.
    """
    from .randomness import stream_word, uniform01

    reach = int(math.ceil(profile.tail_radius(1e-9))) + 1
    offsets = np.arange(-reach, reach + 1)
    mesh = np.meshgrid(*([offsets] * d), indexing="ij")
    flat = [m.reshape(-1) for m in mesh]
    nsites = flat[0].size
    tidx = np.arange(trials)
    zkeys = site_keys(seed, 0x5A5A, (tidx,))
    zs = [uniform01(stream_word(zkeys, ax)) for ax in range(d)]
    coords = (np.broadcast_to(tidx[:, None], (trials, nsites)),) + tuple(
        np.broadcast_to(f[None, :], (trials, nsites)) for f in flat
    )
    y = dist.sample(site_keys(seed, 0xA11CE, coords))
    args = [zs[ax][:, None] - flat[ax][None, :] for ax in range(d)]
    vals = np.abs(np.sum(y * profile.eval_coords(*args), axis=1))
    i = int(np.argmax(vals))
    sup = float(vals[i])
    witness = tuple(float(zs[ax][i]) for ax in range(d))
    return BumpBoundReport(passed=sup <= 1.0 + 1e-9, sup=sup, witness=witness, trials=trials)
