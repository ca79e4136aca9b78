"""
Graph charts over the tangent space
===================================

Near a point u_bar on M = {G = 0} the constraint set is the graph of
omega -> omega + psi(omega) over ker G'(u_bar). On the unit sphere psi is
known in closed form, which makes it a good check of the Newton solve.
"""
import numpy as np

from loja_lab.analysis import sample_chart_coordinates
from loja_lab.geometry import (build_chart, lemma42_comparison, phi_prime_singular_values, psi,
                               psi_prime_fd_error, tangent_identity_check)
from loja_lab.models import RevolutionModel, SphereConstraint, revolution_volume_constraint
from loja_lab.numerics import Grid1D

sphere = SphereConstraint(3)
chart = build_chart(sphere, np.array([0.0, 0.0, 1.0]))
for w in sample_chart_coordinates(chart, 0.5, 5, seed=0):
    print(f"|w| {np.linalg.norm(w):.4f}  psi {psi(chart, sphere, w)[0]: .12f}  "
          f"closed form {np.sqrt(1 - w @ w) - 1: .12f}")

# the volume constraint around the cylinder, on a coarse grid
grid = Grid1D(0.0, 1.0, 49)
E, G = RevolutionModel(grid), revolution_volume_constraint(grid, np.pi)
chart = build_chart(G, grid.zeros())
omegas = sample_chart_coordinates(chart, 1e-2, 20, seed=1)
print("largest tangent angle", max(max(tangent_identity_check(chart, G, w)) for w in omegas))
print("largest psi' error", max(psi_prime_fd_error(chart, G, w) for w in omegas))
print("smallest singular value of id + psi'",
      min(phi_prime_singular_values(chart, G, w)[-1] for w in omegas))
rep = lemma42_comparison(chart, E, G, omegas)
print(f"two-sided gradient comparison: {len(rep.violations)} violations in {len(omegas)} samples")
