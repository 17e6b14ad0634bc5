"""Minimizers need not be unique, the stress and the boundary value are.

Two configurations, each solved from three random initial guesses:

* the benchmark (contact on the bottom edge, load f = 0.2): lines
  orthogonal to A = (1, 0) reach the transmission edge at the top, so even
  the displacement is unique and all runs coincide;
* contact on three sides, transmission only on the left, flux t0 = 0.5:
  no vertical line reaches the transmission edge, the contact opens and the
  energy is flat along A, so u_h depends on the starting point.  sigma_h, xi_h
  and the boundary value u_h + v_h still agree.

Run:  python demos/uniqueness.py
"""
import numpy as np

from dwcouple.assembly import ProblemData
from dwcouple.estimator import lp_norm, solve_level
from dwcouple.mesh import generate_initial_mesh
from dwcouple.potential import WellParams
from dwcouple.solver import SolveOptions

wells = WellParams((-1.0, 0.0), (1.0, 0.0))
cases = {
    "benchmark": ({0: "S"}, ProblemData(f=0.2)),
    "transmission on the left only": ({0: "S", 1: "S", 2: "S"}, ProblemData(t0=0.5)),
}

for title, (labels, data) in cases.items():
    mesh = generate_initial_mesh("unit_square", labels=labels, h0=1 / 8)
    runs = [solve_level(mesh, wells, data, SolveOptions(seed=s)) for s in (1, 2, 3)]
    ref = runs[0]
    print(f"{title}: {ref.n_elements} triangles, unique-displacement region "
          f"{ref.macro.unique_region.sum()} elements, open contact dofs "
          f"{ref.layout.n_v - int(ref.state.active.sum())} / {ref.layout.n_v}")
    print("  seed  J_h               max|u - u(seed 1)|  sigma dist  xi dist   boundary dist")
    for seed, r in zip((1, 2, 3), runs):
        print(f"  {seed:4d}  {r.j_h:.12f}  {np.abs(r.state.u - ref.state.u).max():18.3e}  "
              f"{lp_norm(mesh, r.macro.sigma - ref.macro.sigma, 4 / 3):10.1e}  "
              f"{lp_norm(mesh, r.macro.xi - ref.macro.xi, 2):7.1e}  "
              f"{np.abs(r.macro.boundary_value - ref.macro.boundary_value).max():13.1e}")
    print()
