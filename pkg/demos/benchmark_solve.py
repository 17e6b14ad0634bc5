"""Solve the benchmark problem once and look at what comes out.

Unit square, Signorini contact on the bottom edge, transmission elsewhere,
wells F1 = (-1, 0) and F2 = (1, 0), constant volume load f = 0.2.

Run:  python demos/benchmark_solve.py
"""
import numpy as np

from dwcouple.assembly import ProblemData
from dwcouple.estimator import lp_norm, solve_level
from dwcouple.mesh import generate_initial_mesh
from dwcouple.potential import WellParams
from dwcouple.solver import SolveOptions

wells = WellParams((-1.0, 0.0), (1.0, 0.0))
mesh = generate_initial_mesh("unit_square", labels={0: "S"}, h0=1 / 16)
res = solve_level(mesh, wells, ProblemData(f=0.2), SolveOptions())

print(f"mesh: {res.n_elements} triangles, {res.n_dofs} unknowns "
      f"({res.layout.n_v} of them jumps on the contact edge)")
print(f"solver: {res.state.iterations} Newton steps, final residual {res.state.residual:.2e}")
print(f"discrete energy J_h = {res.j_h:.8f}")

# The load is small compared with the well distance, so gradients stay inside
# the relaxed well: the whole domain is a microstructure region.
macro = res.macro
print(f"microstructure elements: {macro.micro_flag.sum()} / {res.n_elements}")
print(f"stress: ||sigma||_L4/3 = {lp_norm(mesh, macro.sigma, 4 / 3):.4e}, "
      f"sigma is parallel to A^perp: max|sigma_x| = {np.abs(macro.sigma[:, 0]).max():.1e}")

# The contact edge is closed everywhere: every jump sits on its bound.
print(f"active jumps: {int(res.state.active.sum())} / {res.layout.n_v}, "
      f"mean-condition multiplier {res.state.multiplier:.3e}")

r = res.report
print("estimator contributions:")
for name in ("eta_omega", "eta_c1", "eta_c2", "eta_s"):
    print(f"  {name:10s} {getattr(r, name):.5f}")
print(f"  {'total':10s} {r.total:.5f}")
