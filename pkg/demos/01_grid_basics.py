"""
Checkerboard copula basics
==========================

Build mass grids, complete the boundary from the margin constraints,
and evaluate the density, the CDF and Spearman's rho.
"""

import numpy as np

from gridcopula import MassGrid, cdf, complete_grid, density, is_feasible, spearman_rho

# A 2x2 copula has a single free parameter: the mass of the lower-left
# cell.  The other three cells follow from the uniform-margin constraints.
g = complete_grid([[0.3]])
print("order-2 grid with theta_11 = 0.3:")
print(g.full)
print("feasible:", is_feasible(g))

# Row and column sums are 1/m by construction.
print("row sums:", g.full.sum(axis=1))

# The density is piecewise constant: m^2 * theta on each cell.
print("density at (0.25, 0.25):", density(g, 0.25, 0.25))
print("density at (0.75, 0.25):", density(g, 0.75, 0.25))

# The CDF is continuous and piecewise bilinear.  Margins are uniform:
print("C(0.37, 1) =", cdf(g, 0.37, 1.0))
print("C(0.5, 0.5) =", cdf(g, 0.5, 0.5), "(the lower-left cell mass)")

# Spearman's rho has a closed form in the cell masses.
print("rho of the 0.3 grid:", spearman_rho(g))
print("rho of independence:", spearman_rho(MassGrid.independence(5)))

# A strongly dependent grid: nearly all mass on the diagonal.
m = 5
eps = 1e-3
diag = np.full((m, m), eps)
np.fill_diagonal(diag, 1 / m - (m - 1) * eps)
g_diag = MassGrid.from_full(diag)
print("rho of a near-diagonal grid:", round(spearman_rho(g_diag), 4))
print("(the attainable maximum at m=5 is 1 - 1/25 = 0.96)")

# Infeasible parameters are completed anyway but flagged.
bad = complete_grid([[0.6]])
print("theta_11 = 0.6 =>", bad.full[0, 1], "in the boundary row; feasible:", is_feasible(bad))
