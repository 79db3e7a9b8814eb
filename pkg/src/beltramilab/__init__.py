"""Spectral laboratory for random Beltrami equations on the torus and
homogenization of iterated singular integrals.

Core pieces: periodic grids and discrete Fourier analysis (grid), multiplier
operators including the Beurling transform (operators), random dilatation
models and multiscale tensor products (models, profiles, randomness), the
Neumann-series Beltrami solver (solver), the experiment engine (experiments),
and the config/CSV/PPM surface (config, results, render, cli).
"""

from .errors import (
    ConfigurationError,
    ConvergenceError,
    DegenerateNormalizationError,
    DivergenceError,
    ModelError,
    ResolutionError,
    SimulationError,
)
from .grid import (
    Field,
    Grid,
    cell_average,
    constant_field,
    field_from_callable,
    lp_norm,
    pairing,
    spectral_pairing,
    spectral_transform,
)
from .models import (
    DilatationModel,
    Envelope,
    build_dilatation,
    bump_field,
    tensor_product,
    validate_bump_bound,
)
from .operators import (
    MultiplierOp,
    apply_operator,
    beurling,
    cauchy,
    chain_apply,
    custom_angular,
    deriv2_over_laplacian,
    dz,
    dzbar,
    identity_op,
    inv_laplacian,
    operator_sup_norm,
    riesz2,
)
from .profiles import (
    GaussianBump,
    MeanZeroRadial,
    SmoothSquareBump,
    SquareIndicator,
    TwoBump,
)
from .randomness import Distribution, constant_dist, degenerate_k, rademacher, symmetric_disk
from .solver import (
    MapField,
    SolveReport,
    beltrami_residual,
    neumann_terms,
    normalize_3pt,
    reconstruct_map,
    solve_fixed_point,
    stripes_exact,
)
from .experiments import (
    ExperimentConfig,
    RunResult,
    TestFunction,
    check_product_equiv,
    check_T_image,
    check_weak_limit,
    default_test_battery,
    estimate_hgx,
    fit_decay,
    run_beltrami,
    run_iterated,
    run_pde3d,
    solve_pde3d,
    two_bump_functional,
)

__version__ = "0.1.0"
