"""Adaptive versus uniform refinement on the benchmark problem.

Prints the run tables of both strategies and the number of unknowns the
adaptive loop needs to match the estimator of the finest uniform mesh.

Run:  python demos/adaptive_vs_uniform.py
"""
from dwcouple.assembly import ProblemData
from dwcouple.estimator import AdaptiveOptions, adaptive_loop, reliability_constants, sigma_difference
from dwcouple.mesh import generate_initial_mesh
from dwcouple.potential import WellParams

wells = WellParams((-1.0, 0.0), (1.0, 0.0))
data = ProblemData(f=0.2)
mesh = generate_initial_mesh("unit_square", labels={0: "S"}, h0=0.25)


def table(title, levels):
    print(title)
    print("level  elements   dofs        J_h       eta_total")
    for lvl in levels:
        print(f"{lvl.level:5d}  {lvl.n_elements:8d}  {lvl.n_dofs:5d}  {lvl.j_h:.7f}  {lvl.report.total:.5f}")
    print()


uniform = adaptive_loop(mesh, wells, data, options=AdaptiveOptions(mode="uniform", max_levels=5)).levels
table("uniform refinement", uniform[:4])

# sigma_h - sigma_{h/2} against eta_h: a stable ratio means the estimator
# tracks the error up to a constant.
diffs = [sigma_difference(c.mesh, c.macro.sigma, f.mesh, f.macro.sigma) for c, f in zip(uniform, uniform[1:])]
ratios = reliability_constants(diffs, [lvl.report.total for lvl in uniform[:4]])
print("||sigma_h - sigma_h/2|| / eta_h:", " ".join(f"{r:.4f}" for r in ratios), "\n")

target = uniform[3]
adaptive = adaptive_loop(mesh, wells, data, options=AdaptiveOptions(
    theta=0.5, max_levels=30, eta_target=target.report.total)).levels
table("adaptive refinement, theta = 0.5", adaptive)

last = adaptive[-1]
print(f"adaptive reaches eta = {last.report.total:.5f} <= {target.report.total:.5f} with "
      f"{last.n_dofs} unknowns, {last.n_dofs / target.n_dofs:.0%} of the uniform mesh.")

# The adaptive sequences of eta and J_h are not monotone.  Local bisection
# creates new interior edges across which sigma_h jumps, and the contact term
# switches on and off as the corners of the contact edge are resolved.  Under
# uniform refinement both sequences decrease.
