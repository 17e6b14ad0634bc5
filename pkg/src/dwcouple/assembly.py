"""Discrete coupled energy, its derivatives and the load functional.

Unknowns are ``x = (u, v)``: ``u`` holds the P1 nodal values on the whole
mesh, ``v`` the nodal values of the Signorini variable at boundary nodes
whose hat function is supported in the closed Signorini boundary.  With
``w = u|_bd + v`` the boundary value seen by the exterior problem::

    J(u, v) = sum_K |K| W**(grad u|_K) + 1/2 w.S w - l.x
    l.x     = <t0 + S u0, w> + int f u
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Union

import numpy as np
from scipy import sparse

from . import potential as pot
from .bem import BoundaryMesh
from .mesh import BoundaryLabel, Mesh
from .steklov import SteklovOperator

DataFn = Union[float, Callable]

# 7-point degree-5 rule on the reference triangle (barycentric, weights sum to 1)
_R15 = np.sqrt(15.0)
_A1, _B1 = (9 - 2 * _R15) / 21, (6 + _R15) / 21
_A2, _B2 = (9 + 2 * _R15) / 21, (6 - _R15) / 21
DUNAVANT7 = (
    np.array([[1 / 3, 1 / 3, 1 / 3],
              [_A1, _B1, _B1], [_B1, _A1, _B1], [_B1, _B1, _A1],
              [_A2, _B2, _B2], [_B2, _A2, _B2], [_B2, _B2, _A2]]),
    np.array([0.225] + [(155 + _R15) / 1200] * 3 + [(155 - _R15) / 1200] * 3),
)


def as_function(value: DataFn) -> Callable:
    """Wrap constants so that every datum is a vectorized ``f(x, y)``."""
    if callable(value):
        return value
    c = float(value)
    return lambda x, y: np.full(np.broadcast(x, y).shape, c)


@dataclass
class ProblemData:
    """Volume load ``f``, flux datum ``t0`` and jump datum ``u0``."""

    f: DataFn = 0.0
    t0: DataFn = 0.0
    u0: DataFn = 0.0

    def __post_init__(self):
        self.f = as_function(self.f)
        self.t0 = as_function(self.t0)
        self.u0 = as_function(self.u0)


class DofLayout:
    """Index maps between mesh nodes, boundary nodes and unknowns."""

    def __init__(self, mesh: Mesh, bm: BoundaryMesh):
        self.mesh = mesh
        self.bm = bm
        self.n_u = mesh.n_vertices
        self.boundary_nodes = bm.mesh_nodes
        self.n_b = len(self.boundary_nodes)
        sig = bm.labels == BoundaryLabel.SIGNORINI
        # node k sits between panels k-1 and k
        self.signorini_positions = np.flatnonzero(sig & np.roll(sig, 1))
        self.n_v = len(self.signorini_positions)

    @property
    def n_dofs(self) -> int:
        return self.n_u + self.n_v

    def split(self, x: np.ndarray):
        return x[: self.n_u], x[self.n_u:]

    def boundary_value(self, x: np.ndarray) -> np.ndarray:
        """``w = u|_bd + v`` at the boundary nodes."""
        u, v = self.split(x)
        w = u[self.boundary_nodes].copy()
        w[self.signorini_positions] += v
        return w

    def boundary_adjoint(self, wdual: np.ndarray) -> np.ndarray:
        """Transpose of :meth:`boundary_value`."""
        out = np.zeros(self.n_dofs)
        out[self.boundary_nodes] += wdual
        out[self.n_u:] = wdual[self.signorini_positions]
        return out

    def v_on_boundary(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros(self.n_b)
        out[self.signorini_positions] = self.split(x)[1]
        return out

    @cached_property
    def coupling_indices(self) -> np.ndarray:
        return np.concatenate([self.boundary_nodes, self.n_u + np.arange(self.n_v)])

    @cached_property
    def coupling_selector(self) -> np.ndarray:
        """Dense ``(n_b, n_b + n_v)`` map from coupling dofs to ``w``."""
        c = np.zeros((self.n_b, self.n_b + self.n_v))
        c[np.arange(self.n_b), np.arange(self.n_b)] = 1.0
        c[self.signorini_positions, self.n_b + np.arange(self.n_v)] = 1.0
        return c


def element_gradients(mesh: Mesh, u: np.ndarray) -> np.ndarray:
    """Constant gradient of the P1 function ``u`` on every triangle."""
    return np.einsum("ki,kij->kj", u[mesh.triangles], mesh.basis_gradients)


def assemble_load(layout: DofLayout, data: ProblemData, sp: SteklovOperator) -> np.ndarray:
    mesh, bm = layout.mesh, layout.bm
    p = mesh.vertices[mesh.triangles]
    mids = 0.5 * (p + np.roll(p, -1, axis=1))  # midpoint of local edge (i, i+1)
    fm = np.broadcast_to(np.asarray(data.f(mids[..., 0], mids[..., 1]), dtype=float), mids.shape[:2])
    area = mesh.areas
    # node i touches the midpoints of local edges i and i-1, each with value 1/2
    local = (area / 3.0)[:, None] * 0.5 * (fm + np.roll(fm, 1, axis=1))
    load = np.zeros(layout.n_dofs)
    np.add.at(load, mesh.triangles.ravel(), local.ravel())
    t0 = bm.project_p0(data.t0)
    u0 = bm.interpolate(data.u0)
    bdual = bm.mass_p0p1().T @ t0 + sp.S @ u0
    return load + layout.boundary_adjoint(bdual)


class CoupledEnergy:
    """Energy ``J_h`` with gradient and generalized Hessian."""

    def __init__(self, layout: DofLayout, params: pot.WellParams, sp: SteklovOperator,
                 load: np.ndarray):
        self.layout = layout
        self.params = params
        self.sp = sp
        self.load = np.asarray(load, dtype=float)
        self.mesh = layout.mesh

    def volume(self, u: np.ndarray) -> float:
        g = element_gradients(self.mesh, u)
        return float(self.mesh.areas @ pot.eval_wss(self.params, g))

    def __call__(self, x: np.ndarray) -> float:
        u, _ = self.layout.split(x)
        w = self.layout.boundary_value(x)
        return self.volume(u) + 0.5 * float(w @ self.sp.S @ w) - float(self.load @ x)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        mesh = self.mesh
        u, _ = self.layout.split(x)
        sigma = pot.grad_wss(self.params, element_gradients(mesh, u))
        local = mesh.areas[:, None] * np.einsum("kj,kij->ki", sigma, mesh.basis_gradients)
        g = np.zeros(self.layout.n_dofs)
        np.add.at(g, mesh.triangles.ravel(), local.ravel())
        w = self.layout.boundary_value(x)
        return g + self.layout.boundary_adjoint(self.sp.S @ w) - self.load

    def hessian(self, x: np.ndarray) -> sparse.csr_matrix:
        mesh = self.mesh
        lay = self.layout
        u, _ = lay.split(x)
        h = pot.hess_wss(self.params, element_gradients(mesh, u))
        bg = mesh.basis_gradients
        local = mesh.areas[:, None, None] * np.einsum("kia,kab,kjb->kij", bg, h, bg)
        t = mesh.triangles
        rows = np.repeat(t, 3, axis=1).ravel()
        cols = np.tile(t, (1, 3)).ravel()
        c = lay.coupling_selector
        block = c.T @ self.sp.S @ c
        ci = lay.coupling_indices
        rows = np.concatenate([rows, np.repeat(ci, len(ci))])
        cols = np.concatenate([cols, np.tile(ci, len(ci))])
        vals = np.concatenate([local.ravel(), block.ravel()])
        n = lay.n_dofs
        return sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()

    def mean_constraint(self, u0_nodal: np.ndarray):
        """``(c, d)`` with ``c.x = d`` encoding ``<S(w - u0), 1> = 0``."""
        s1 = self.sp.S @ np.ones(self.layout.n_b)
        return self.layout.boundary_adjoint(s1), float(s1 @ u0_nodal)


def energy(layout, p, sp, load, state) -> float:
    return CoupledEnergy(layout, p, sp, load)(state)


def energy_gradient(layout, p, sp, load, state) -> np.ndarray:
    return CoupledEnergy(layout, p, sp, load).gradient(state)


def energy_by_quadrature(layout, p, sp, load, state, rule=DUNAVANT7) -> float:
    """Re-evaluate the energy element by element with a 7-point rule.

    Independent of :class:`CoupledEnergy`: gradients are taken from
    barycentric derivatives at each quadrature point and the boundary
    coupling term is summed entrywise.
    """
    mesh = layout.mesh
    u, _ = layout.split(state)
    bary, weights = rule
    total = 0.0
    for k, tri in enumerate(mesh.triangles):
        pts = mesh.vertices[tri]
        jac = np.array([pts[1] - pts[0], pts[2] - pts[0]]).T
        area = 0.5 * abs(np.linalg.det(jac))
        ref_grad = np.array([u[tri[1]] - u[tri[0]], u[tri[2]] - u[tri[0]]])
        grad = np.linalg.solve(jac.T, ref_grad)
        for lam, wq in zip(bary, weights):
            total += area * wq * float(pot.eval_wss(p, grad))
    w = layout.boundary_value(state)
    s = sp.S
    coupling = 0.0
    for i in range(len(w)):
        for j in range(len(w)):
            coupling += w[i] * s[i, j] * w[j]
    return total + 0.5 * coupling - float(np.dot(load, state))
