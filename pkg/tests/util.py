"""Shared helpers for the test suite."""

import numpy as np

from gridcopula.grid import MassGrid


def lattice_search_m3(r):
    """Exhaustive coarse-to-fine lattice maximiser of the m=3 log-likelihood.

    Evaluates sum r*log(theta) directly over candidate free blocks (the
    boundary entries spelled out inline), refining the winning lattice
    cell down to spacing 1/3000 so the winner is within ~1/6000 of the
    true optimum per coordinate.  Concavity of the objective keeps the
    refinement around the coarse winner exhaustive in effect.
    """
    r = np.asarray(r, dtype=float)

    def loglik(cand):
        t11, t12, t21, t22 = (cand[:, i] for i in range(4))
        theta = np.stack(
            [
                t11, t12, 1 / 3 - (t11 + t12),
                t21, t22, 1 / 3 - (t21 + t22),
                1 / 3 - (t11 + t21), 1 / 3 - (t12 + t22),
                (t11 + t12 + t21 + t22) - 1 / 3,
            ],
            axis=1,
        )
        ok = theta.min(axis=1) > 0
        out = np.full(cand.shape[0], -np.inf)
        if ok.any():
            out[ok] = np.log(theta[ok]) @ r.ravel()
        return out

    centre = np.full(4, 1 / 12)
    for spacing, span in [(1 / 30, 9), (1 / 300, 11), (1 / 3000, 11)]:
        axes = [centre[i] + spacing * np.arange(-span, span + 1) for i in range(4)]
        axes = [a[(a > 0) & (a < 1 / 3)] for a in axes]
        cand = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
        centre = cand[np.argmax(loglik(cand))]
    return centre


def merge_thin_bins(observed, probs, min_expected):
    """Greedily merge adjacent bins until each expected count is large enough."""
    total = observed.sum()
    obs_out, prob_out = [], []
    acc_o, acc_p = 0, 0.0
    for o, p in zip(observed, probs):
        acc_o += o
        acc_p += p
        if acc_p * total >= min_expected:
            obs_out.append(acc_o)
            prob_out.append(acc_p)
            acc_o, acc_p = 0, 0.0
    if acc_o or acc_p:
        obs_out[-1] += acc_o
        prob_out[-1] += acc_p
    probs = np.asarray(prob_out)
    return np.asarray(obs_out), probs / probs.sum()


def batch_random_feasible_grids(rng, m: int, size: int, iters: int = 400) -> np.ndarray:
    """Vectorised iterative proportional fitting: (size, m, m) feasible mass grids."""
    full = rng.gamma(shape=1.5, scale=1.0, size=(size, m, m)) + 1e-3
    target = 1.0 / m
    for _ in range(iters):
        full *= target / full.sum(axis=2, keepdims=True)
        full *= target / full.sum(axis=1, keepdims=True)
        err = max(
            np.abs(full.sum(axis=2) - target).max(),
            np.abs(full.sum(axis=1) - target).max(),
        )
        if err < 1e-14:
            break
    return full


def random_feasible_grid(rng, m: int, iters: int = 300, tol: float = 1e-14) -> MassGrid:
    """Random interior point of the constraint polytope.

    Draws a positive random matrix and iteratively rescales rows/columns
    until both margins equal 1/m (iterative proportional fitting).  The
    limit has strictly positive entries and exact uniform margins, so its
    free block is feasible.
    """
    full = rng.gamma(shape=1.5, scale=1.0, size=(m, m)) + 1e-3
    target = 1.0 / m
    for _ in range(iters):
        full *= target / full.sum(axis=1, keepdims=True)
        full *= target / full.sum(axis=0, keepdims=True)
        err = max(
            np.abs(full.sum(axis=1) - target).max(),
            np.abs(full.sum(axis=0) - target).max(),
        )
        if err < tol:
            break
    return MassGrid.from_free(full[:-1, :-1])


def bilinear_cdf_oracle(full: np.ndarray, u: float, v: float) -> float:
    """CDF by cellwise summation: whole-cell masses plus partial-cell remainders.

    Independent of the closed-form coefficient path in gridcopula.grid.cdf.
    """
    m = full.shape[0]
    # fractional position of (u, v) inside its cell, in cell units
    ju = min(int(np.ceil(round(u * m, 9))), m)
    kv = min(int(np.ceil(round(v * m, 9))), m)
    ju = max(ju, 1)
    kv = max(kv, 1)
    a = u * m - (ju - 1)
    b = v * m - (kv - 1)
    block = full[: ju - 1, : kv - 1].sum()
    row = full[ju - 1, : kv - 1].sum()
    col = full[: ju - 1, kv - 1].sum()
    return float(block + a * row + b * col + a * b * full[ju - 1, kv - 1])
