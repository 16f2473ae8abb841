"""Checkerboard (piecewise-constant) bivariate copula estimation.

The density is constant on an m x m grid over the unit square, with cell
masses constrained to uniform margins.  The package provides the exact
grid algebra (density, CDF, Spearman's rho), constrained maximum
likelihood, a spatially dependent beta prior over the free cells, a
Gibbs-within-Metropolis posterior sampler, reference copula families for
simulation studies, and goodness-of-fit summaries (LPML, sup norm,
credible intervals for rho).
"""

from .families import CopulaFamily, normal_rho_closed_form, true_rho
from .gof import GofReport, lpml, posterior_mean_grid, report, rho_interval, sup_norm
from .grid import (
    CellCounts,
    GridPartition,
    MassGrid,
    PseudoSample,
    TiesError,
    cdf,
    cell_counts,
    cell_index,
    complete_grid,
    density,
    is_feasible,
    rank_transform,
    spearman_rho,
)
from .mcmc import Chain, McmcConfig, run_chain
from .mle import MleResult, empirical_checkerboard, log_likelihood, mle_m2, mle_solve
from .prior import LatentState, SpatialBetaPrior, prior_correlation, sample_prior

__version__ = "0.1.0"

__all__ = [
    "CopulaFamily",
    "true_rho",
    "normal_rho_closed_form",
    "GofReport",
    "lpml",
    "posterior_mean_grid",
    "report",
    "rho_interval",
    "sup_norm",
    "CellCounts",
    "GridPartition",
    "MassGrid",
    "PseudoSample",
    "TiesError",
    "cdf",
    "cell_counts",
    "cell_index",
    "complete_grid",
    "density",
    "is_feasible",
    "rank_transform",
    "spearman_rho",
    "Chain",
    "McmcConfig",
    "run_chain",
    "MleResult",
    "empirical_checkerboard",
    "log_likelihood",
    "mle_m2",
    "mle_solve",
    "LatentState",
    "SpatialBetaPrior",
    "prior_correlation",
    "sample_prior",
]
