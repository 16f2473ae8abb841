"""Checkerboard copula grids: partition geometry, mass grids, CDF/density, rank transform.

The unit square is split into m x m half-open cells
Q(j,k) = ((j-1)/m, j/m] x ((k-1)/m, k/m], indexed 1-based.  A copula of
this family is parameterised by an m x m matrix of cell masses whose rows
and columns each sum to 1/m; only the top-left (m-1) x (m-1) block is
free, the last row/column being determined by the margin constraints.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TiesError",
    "GridPartition",
    "MassGrid",
    "PseudoSample",
    "CellCounts",
    "cell_index",
    "complete_grid",
    "is_feasible",
    "density",
    "cdf",
    "spearman_rho",
    "rank_transform",
    "cell_counts",
]

# Cell boundaries are exact rationals j/m; coordinates arrive as floats.
# Products u*m within this absolute distance of an integer are snapped to
# it so that e.g. rank-transformed values k/n with m | n land in the cell
# the exact arithmetic dictates.
_BOUNDARY_SNAP = 1e-10


class TiesError(ValueError):
    """Raised by rank_transform in strict mode when a margin has ties."""


def _as_unit_coords(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > 1.0) or not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must lie in [0, 1]")
    return arr


def _check_order(m: int) -> int:
    m = int(m)
    if m < 2:
        raise ValueError(f"partition order must be >= 2, got {m}")
    return m


@dataclass(frozen=True)
class GridPartition:
    """Uniform m x m partition of the unit square into half-open cells."""

    m: int

    def __post_init__(self):
        _check_order(self.m)

    def cell_bounds(self, j: int, k: int) -> tuple[tuple[float, float], tuple[float, float]]:
        """Bounds ((u_lo, u_hi), (v_lo, v_hi)) of cell (j, k); intervals are (lo, hi]."""
        if not (1 <= j <= self.m and 1 <= k <= self.m):
            raise ValueError(f"cell index ({j}, {k}) outside 1..{self.m}")
        return ((j - 1) / self.m, j / self.m), ((k - 1) / self.m, k / self.m)


def cell_index(u, v, m: int):
    """Map coordinates to 1-based cell indices (j, k) of the m x m partition.

    Cells are left-open/right-closed; u = 0 (unreachable for rank data) is
    assigned to index 1 by convention.  Accepts scalars or arrays.

    Returns
    -------
    (j, k) : int or ndarray of int
    """
    m = _check_order(m)
    uu = _as_unit_coords(u, "u")
    vv = _as_unit_coords(v, "v")
    j = _axis_index(uu, m)
    k = _axis_index(vv, m)
    if np.isscalar(u) and np.isscalar(v):
        return int(j), int(k)
    return j, k


def _axis_index(x: np.ndarray, m: int) -> np.ndarray:
    w = x * m
    nearest = np.rint(w)
    w = np.where(np.abs(w - nearest) <= _BOUNDARY_SNAP, nearest, w)
    idx = np.ceil(w).astype(int)
    return np.clip(idx, 1, m)


@dataclass(frozen=True)
class MassGrid:
    """Cell-mass parameterisation of a checkerboard copula.

    The free (m-1) x (m-1) block is the source of truth; the boundary
    row/column are recomputed from the margin constraints on demand,
    except for grids built with :meth:`from_full` (e.g. the empirical
    checkerboard estimate), which carry an explicit full matrix.
    """

    m: int
    free: np.ndarray
    full_override: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        m = _check_order(self.m)
        free = np.array(self.free, dtype=float)
        if free.shape != (m - 1, m - 1):
            raise ValueError(f"free block must be ({m-1}, {m-1}), got {free.shape}")
        if not np.all(np.isfinite(free)):
            raise ValueError("free block entries must be finite")
        free.setflags(write=False)
        object.__setattr__(self, "free", free)
        if self.full_override is not None:
            full = np.array(self.full_override, dtype=float)
            if full.shape != (m, m):
                raise ValueError(f"full matrix must be ({m}, {m}), got {full.shape}")
            full.setflags(write=False)
            object.__setattr__(self, "full_override", full)

    @classmethod
    def from_free(cls, free) -> "MassGrid":
        free = np.asarray(free, dtype=float)
        return cls(m=free.shape[0] + 1, free=free)

    @classmethod
    def from_full(cls, full) -> "MassGrid":
        """Wrap an explicit m x m mass matrix (margins not enforced)."""
        full = np.asarray(full, dtype=float)
        if full.ndim != 2 or full.shape[0] != full.shape[1]:
            raise ValueError("full matrix must be square")
        return cls(m=full.shape[0], free=full[:-1, :-1], full_override=full)

    @classmethod
    def independence(cls, m: int) -> "MassGrid":
        m = _check_order(m)
        return cls(m=m, free=np.full((m - 1, m - 1), 1.0 / m**2))

    @property
    def full(self) -> np.ndarray:
        """Completed m x m mass matrix."""
        if self.full_override is not None:
            return self.full_override
        return _complete(self.free, self.m)

    @property
    def feasible(self) -> bool:
        return is_feasible(self)


def _complete(free: np.ndarray, m: int) -> np.ndarray:
    full = np.empty((m, m))
    full[:-1, :-1] = free
    full[:-1, -1] = 1.0 / m - free.sum(axis=1)
    full[-1, :-1] = 1.0 / m - free.sum(axis=0)
    full[-1, -1] = free.sum() - (m - 2) / m
    return full


def complete_grid(free) -> MassGrid:
    """Fill in the boundary row/column of a free block via the margin constraints.

    Never raises for finite input; check feasibility with :func:`is_feasible`
    (or ``grid.feasible``) before treating the result as a copula.
    """
    free = np.asarray(free, dtype=float)
    if free.ndim != 2 or free.shape[0] != free.shape[1]:
        raise ValueError("free block must be square")
    return MassGrid.from_free(free)


def is_feasible(grid: MassGrid, closed: bool = False) -> bool:
    """True iff every completed cell mass is strictly positive.

    This is equivalent to the strict inequalities defining the open
    parameter space (positive free cells plus row/column sums below 1/m
    and the total in ((m-2)/m, (m-1)/m)).  With ``closed=True`` the
    comparison is >= 0, admitting grids on the closure such as empirical
    estimates with empty cells.
    """
    full = grid.full
    if closed:
        return bool(np.all(full >= 0.0))
    return bool(np.all(full > 0.0))


def density(grid: MassGrid, u, v):
    """Copula density m^2 * theta(j,k) at (u, v); scalars or arrays."""
    j, k = cell_index(u, v, grid.m)
    out = grid.m**2 * grid.full[np.asarray(j) - 1, np.asarray(k) - 1]
    if np.isscalar(u) and np.isscalar(v):
        return float(out)
    return out


def _cdf_coefficients(full: np.ndarray, m: int):
    # Piecewise-bilinear CDF: C = A + B*u + D*v + m^2*theta*u*v on each cell,
    # with coefficients built from cumulative cell masses.
    S = np.cumsum(np.cumsum(full, axis=0), axis=1)     # block sums through (j,k)
    R = np.cumsum(full, axis=1)                        # row j cumulated through k
    T = np.cumsum(full, axis=0)                        # column k cumulated through j
    jj, kk = np.meshgrid(np.arange(1, m + 1), np.arange(1, m + 1), indexing="ij")
    A = S - jj * R - kk * T + jj * kk * full
    B = m * R - m * kk * full
    D = m * T - m * jj * full
    return A, B, D


def cdf(grid: MassGrid, u, v):
    """Closed-form CDF of the checkerboard copula; scalars or arrays.

    Satisfies C(u,0) = C(0,v) = 0, C(u,1) = u, C(1,v) = v and is
    2-increasing for any (closed-)feasible grid.
    """
    m = grid.m
    full = grid.full
    uu = _as_unit_coords(u, "u")
    vv = _as_unit_coords(v, "v")
    j = _axis_index(np.atleast_1d(uu), m) - 1
    k = _axis_index(np.atleast_1d(vv), m) - 1
    A, B, D = _cdf_coefficients(full, m)
    ua, va = np.atleast_1d(uu), np.atleast_1d(vv)
    out = A[j, k] + B[j, k] * ua + D[j, k] * va + m**2 * full[j, k] * ua * va
    if np.isscalar(u) and np.isscalar(v):
        return float(out[0])
    return out.reshape(np.broadcast(uu, vv).shape)


def spearman_rho(grid: MassGrid) -> float:
    """Spearman's rho of the grid copula: (3/m^2) * (4 * sum jk*theta(j,k) - (m+1)^2)."""
    m = grid.m
    jj, kk = np.meshgrid(np.arange(1, m + 1), np.arange(1, m + 1), indexing="ij")
    return float(3.0 / m**2 * (4.0 * np.sum(jj * kk * grid.full) - (m + 1) ** 2))


@dataclass(frozen=True)
class PseudoSample:
    """n points in (0, 1]^2, e.g. rank-transformed data or copula draws."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if u.ndim != 1 or v.shape != u.shape:
            raise ValueError("u and v must be 1-d arrays of equal length")
        for name, arr in (("u", u), ("v", v)):
            if arr.size and (np.any(arr <= 0.0) or np.any(arr > 1.0)):
                raise ValueError(f"{name} coordinates must lie in (0, 1]")
        u.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def n(self) -> int:
        return self.u.size

    def as_array(self) -> np.ndarray:
        return np.column_stack([self.u, self.v])


@dataclass(frozen=True)
class CellCounts:
    """m x m histogram of pseudo-observations over the partition cells."""

    m: int
    r: np.ndarray

    def __post_init__(self):
        m = _check_order(self.m)
        r = np.array(self.r, dtype=int)
        if r.shape != (m, m):
            raise ValueError(f"count matrix must be ({m}, {m}), got {r.shape}")
        if np.any(r < 0):
            raise ValueError("cell counts must be nonnegative")
        r.setflags(write=False)
        object.__setattr__(self, "r", r)

    @property
    def n(self) -> int:
        return int(self.r.sum())


def rank_transform(x, y, ties: str = "strict") -> PseudoSample:
    """Modified rank transformation: U_i = rank(X_i)/n, V_i = rank(Y_i)/n.

    Ranks are 1-based positions in the sorted sample, so coordinates land
    in {1/n, ..., 1}.  Continuous margins have no ties almost surely; with
    ``ties="strict"`` (default) tied values raise :class:`TiesError`, with
    ``ties="lenient"`` they are broken by original index order.
    """
    if ties not in ("strict", "lenient"):
        raise ValueError("ties must be 'strict' or 'lenient'")
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.ndim != 1 or ya.shape != xa.shape:
        raise ValueError("x and y must be 1-d arrays of equal length")
    if xa.size == 0:
        raise ValueError("need at least one observation")
    if ties == "strict":
        for name, arr in (("x", xa), ("y", ya)):
            if np.unique(arr).size != arr.size:
                raise TiesError(f"ties in {name}; rerun with ties='lenient'")
    n = xa.size
    u = np.empty(n)
    v = np.empty(n)
    u[np.argsort(xa, kind="stable")] = np.arange(1, n + 1)
    v[np.argsort(ya, kind="stable")] = np.arange(1, n + 1)
    return PseudoSample(u=u / n, v=v / n)


def cell_counts(sample: PseudoSample, m: int) -> CellCounts:
    """Count sample points per partition cell; counts sum to n."""
    m = _check_order(m)
    r = np.zeros((m, m), dtype=int)
    if sample.n:
        j, k = cell_index(sample.u, sample.v, m)
        np.add.at(r, (np.asarray(j) - 1, np.asarray(k) - 1), 1)
    return CellCounts(m=m, r=r)
