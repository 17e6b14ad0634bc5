"""Boundary element building blocks on an exact exterior solution.

The dipole u(x) = d.(x - x0)/|x - x0|^2 with x0 inside the unit square is
harmonic and decaying outside.  Its Cauchy data go through the Galerkin
matrices, the representation formula and the Steklov-Poincare operator.

Run:  python demos/dipole_bem.py
"""
import numpy as np

from dwcouple.bem import BoundaryMesh, assemble, evaluate_exterior
from dwcouple.mesh import generate_initial_mesh
from dwcouple.steklov import coercivity_ratio, dirichlet_to_neumann_residual, steklov_for

x0 = np.array([0.4, 0.55])
d = np.array([1.0, 0.5])


def u(x, y):
    r = np.stack([x - x0[0], y - x0[1]], axis=-1)
    return (r @ d) / np.sum(r * r, axis=-1)


def grad(x, y):
    r = np.stack([x - x0[0], y - x0[1]], axis=-1)
    r2 = np.sum(r * r, axis=-1)[..., None]
    return d / r2 - 2 * (r @ d)[..., None] * r / r2 ** 2


def panel_flux(bm):
    a, tau, nu, length = bm.geometry(scaled=False)
    gx, gw = np.polynomial.legendre.leggauss(10)
    s = 0.5 * (gx + 1)
    pts = a[:, None, :] + s[None, :, None] * length[:, None, None] * tau[:, None, :]
    return np.einsum("pqj,pj->pq", grad(pts[..., 0], pts[..., 1]), nu) @ (0.5 * gw)


far = np.array([[2.0, 0.5], [0.5, -1.0], [-1.0, 0.5], [0.5, 2.0]])
print("    h  panels  exterior error  DtN residual  jump identity  coercivity")
prev = None
for h in (0.25, 0.125, 0.0625, 0.03125):
    bm = BoundaryMesh.from_mesh(generate_initial_mesh("unit_square", h0=h))
    ops = assemble(bm)
    sp = steklov_for(bm)
    g, t = bm.interpolate(u), panel_flux(bm)
    err = np.abs(evaluate_exterior(bm, g, t, far) - u(far[:, 0], far[:, 1])).max()
    res = dirichlet_to_neumann_residual(sp, ops, g, flux=t)
    one = np.ones(bm.n_nodes)
    jump = np.abs(ops.K @ one + 0.5 * ops.M @ one).max()
    print(f"{h:6.4f}  {bm.n_panels:6d}  {err:14.3e}  {res:12.3e}  {jump:13.1e}  {coercivity_ratio(sp):10.3f}")

# The exterior error drops by four per halving (second order), the DtN
# residual by about two and a half.  K 1 = -M 1 / 2 holds to rounding on any
# polygon because the inner integral of the double layer kernel is the
# exactly computed subtended angle.
