"""Spatially dependent beta prior for the free cell masses.

Three-level hierarchy on the free (m-1) x (m-1) lattice:

    omega            ~ Beta(a, b)
    eta[j,k] | omega ~ Binomial(c[j,k], omega)      independently
    theta[j,k] | eta ~ Beta(a + S_eta[j,k], b + S_c[j,k] - S_eta[j,k])

where S_x[j,k] sums x over the edge-sharing neighbourhood of (j,k)
(the cell itself plus the cells directly above/below/left/right that
fall inside the lattice).  Marginally each theta[j,k] is Beta(a, b);
the binomial latents make neighbouring cells positively correlated,
with c = 0 recovering full independence.

The hierarchy draws each theta in (0, 1) and does not by itself respect
the copula margin constraints; the posterior sampler reintroduces them
through an indicator.  ``sample_prior_feasible`` offers rejection to the
constraint polytope purely as a visualisation device.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .grid import MassGrid, complete_grid, is_feasible

__all__ = [
    "OPEN_UNIT_EPS",
    "SpatialBetaPrior",
    "LatentState",
    "PriorDraw",
    "neighbors",
    "reversed_neighbors",
    "neighbor_sum",
    "sample_prior",
    "sample_prior_batch",
    "sample_prior_feasible",
    "prior_correlation",
    "log_prior_density",
]


# Beta draws with shapes < 1 can round to exactly 0 or 1 in double
# precision; probabilities are clipped back into the open interval.
OPEN_UNIT_EPS = 1e-15


def _clip_open_unit(x):
    return np.clip(x, OPEN_UNIT_EPS, 1.0 - OPEN_UNIT_EPS)


@dataclass(frozen=True)
class SpatialBetaPrior:
    """Hyperparameters (a, b, c) of the spatial beta prior for order m."""

    a: float
    b: float
    c: np.ndarray
    m: int

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError("shape parameters a, b must be positive")
        if self.m < 2:
            raise ValueError("partition order must be >= 2")
        c = np.array(self.c, dtype=int)
        if c.shape != (self.m - 1, self.m - 1):
            raise ValueError(f"c must be ({self.m-1}, {self.m-1}), got {c.shape}")
        if np.any(c < 0):
            raise ValueError("c entries must be nonnegative integers")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    @classmethod
    def constant(cls, m: int, a: float = 0.1, b: float = 0.1, c: int = 0) -> "SpatialBetaPrior":
        return cls(a=a, b=b, c=np.full((m - 1, m - 1), c, dtype=int), m=m)


@dataclass(frozen=True)
class LatentState:
    """Latent binomial lattice eta and shared success probability omega."""

    eta: np.ndarray
    omega: float

    def __post_init__(self):
        eta = np.array(self.eta, dtype=int)
        if eta.ndim != 2:
            raise ValueError("eta must be a 2-d integer lattice")
        if not (0.0 < self.omega < 1.0):
            raise ValueError("omega must lie in (0, 1)")
        eta.setflags(write=False)
        object.__setattr__(self, "eta", eta)

    def validate_against(self, prior: SpatialBetaPrior) -> None:
        if self.eta.shape != prior.c.shape:
            raise ValueError("eta shape does not match the prior's c lattice")
        if np.any(self.eta < 0) or np.any(self.eta > prior.c):
            raise ValueError("eta entries must satisfy 0 <= eta <= c elementwise")


@dataclass(frozen=True)
class PriorDraw:
    free: np.ndarray
    latent: LatentState
    feasible: bool


def neighbors(j: int, k: int, m: int) -> set[tuple[int, int]]:
    """Edge-sharing neighbourhood of free cell (j, k), the cell itself included.

    Indices are 1-based on the (m-1) x (m-1) free lattice: interior cells
    have 5 neighbours, edge cells 4, corner cells 3.
    """
    p = m - 1
    if not (1 <= j <= p and 1 <= k <= p):
        raise ValueError(f"({j}, {k}) outside the free lattice 1..{p}")
    cand = [(j, k), (j - 1, k), (j + 1, k), (j, k - 1), (j, k + 1)]
    return {(t, s) for t, s in cand if 1 <= t <= p and 1 <= s <= p}


def reversed_neighbors(j: int, k: int, m: int) -> set[tuple[int, int]]:
    """Cells whose neighbourhood contains (j, k), computed from the definition.

    Equals ``neighbors(j, k, m)`` because edge-sharing with self-inclusion
    is symmetric; tests assert rather than assume this.
    """
    p = m - 1
    if not (1 <= j <= p and 1 <= k <= p):
        raise ValueError(f"({j}, {k}) outside the free lattice 1..{p}")
    return {
        (t, s)
        for t in range(1, p + 1)
        for s in range(1, p + 1)
        if (j, k) in neighbors(t, s, m)
    }


def neighbor_sum(lattice: np.ndarray) -> np.ndarray:
    """Sum each entry with its in-lattice edge neighbours (vectorised, any leading dims)."""
    out = lattice.astype(float).copy()
    out[..., 1:, :] += lattice[..., :-1, :]
    out[..., :-1, :] += lattice[..., 1:, :]
    out[..., :, 1:] += lattice[..., :, :-1]
    out[..., :, :-1] += lattice[..., :, 1:]
    return out


def sample_prior(prior: SpatialBetaPrior, rng: np.random.Generator) -> PriorDraw:
    """One draw of (free masses, latent state) from the hierarchy.

    The free block is not constrained to the copula polytope; the
    ``feasible`` flag reports whether its completion happens to land inside.
    """
    omega = float(_clip_open_unit(rng.beta(prior.a, prior.b)))
    eta = rng.binomial(prior.c, omega)
    s_eta = neighbor_sum(eta)
    s_c = neighbor_sum(prior.c)
    free = _clip_open_unit(rng.beta(prior.a + s_eta, prior.b + s_c - s_eta))
    feasible = is_feasible(complete_grid(free))
    return PriorDraw(free=free, latent=LatentState(eta=eta, omega=omega), feasible=feasible)


def sample_prior_batch(prior: SpatialBetaPrior, rng: np.random.Generator, size: int):
    """Vectorised draws: returns (free, eta, omega) with leading dimension ``size``."""
    if size < 1:
        raise ValueError("size must be >= 1")
    omega = _clip_open_unit(rng.beta(prior.a, prior.b, size=size))
    eta = rng.binomial(prior.c[None, :, :], omega[:, None, None])
    s_eta = neighbor_sum(eta)
    s_c = neighbor_sum(prior.c)[None, :, :]
    free = _clip_open_unit(rng.beta(prior.a + s_eta, prior.b + s_c - s_eta))
    return free, eta, omega


def sample_prior_feasible(
    prior: SpatialBetaPrior, rng: np.random.Generator, max_tries: int = 100_000
) -> PriorDraw:
    """Rejection-sample the hierarchy until the completion is feasible.

    Visualisation device only: acceptance decays sharply with m, so this
    is practical for m = 2 or 3.
    """
    for _ in range(max_tries):
        draw = sample_prior(prior, rng)
        if draw.feasible:
            return draw
    raise RuntimeError(f"no feasible draw in {max_tries} tries (m={prior.m})")


def prior_correlation(
    prior: SpatialBetaPrior, jk: tuple[int, int], jk2: tuple[int, int]
) -> float:
    """Correlation of two free-cell masses under the prior.

    For distinct cells, writing S and S' for the c-sums over the two
    neighbourhoods and S_cap for the c-sum over their intersection:

        corr = ((a+b) * S_cap + S * S') / ((a+b+S) * (a+b+S'))

    Identical indices return 1 exactly (the displayed form covers the
    distinct-pair derivation only).
    """
    if jk == jk2:
        return 1.0
    a, b, m = prior.a, prior.b, prior.m
    nb1 = neighbors(*jk, m)
    nb2 = neighbors(*jk2, m)

    def csum(cells):
        return float(sum(prior.c[t - 1, s - 1] for t, s in cells))

    s1, s2, s12 = csum(nb1), csum(nb2), csum(nb1 & nb2)
    return ((a + b) * s12 + s1 * s2) / ((a + b + s1) * (a + b + s2))


def log_prior_density(
    free: np.ndarray, latent: LatentState, prior: SpatialBetaPrior
) -> float:
    """Joint log density of (free, eta, omega) under the extended hierarchy.

    -inf outside the support (any theta outside (0,1), eta outside
    {0..c}, omega outside (0,1) is rejected upstream by LatentState).
    """
    latent.validate_against(prior)
    free = np.asarray(free, dtype=float)
    if free.shape != prior.c.shape:
        raise ValueError("free block shape does not match the prior lattice")
    if np.any(free <= 0.0) or np.any(free >= 1.0):
        return float("-inf")
    s_eta = neighbor_sum(latent.eta)
    s_c = neighbor_sum(prior.c)
    logp = stats.beta.logpdf(free, prior.a + s_eta, prior.b + s_c - s_eta).sum()
    logp += stats.binom.logpmf(latent.eta, prior.c, latent.omega).sum()
    logp += stats.beta.logpdf(latent.omega, prior.a, prior.b)
    return float(logp)
