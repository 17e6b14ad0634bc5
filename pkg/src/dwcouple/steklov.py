"""Discrete symmetric Steklov-Poincare operator of the exterior problem.

For the exterior Laplacian with the decay normalization, the
Dirichlet-to-Neumann map ``du/dnu = -S u`` has the symmetric
representation ``S = W + (1/2 - K') V^{-1} (1/2 - K)``.  The Galerkin
version replaces ``V^{-1}`` by the inverse of the P0 Galerkin matrix.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .bem import BoundaryMesh, BoundaryOperators, assemble


class SteklovError(RuntimeError):
    pass


@dataclass
class SteklovOperator:
    """``S`` on boundary P1 plus the factorized ``V`` used to build it."""

    S: np.ndarray
    ops: BoundaryOperators
    v_factor: tuple
    boundary_nodes: np.ndarray

    @property
    def bm(self) -> BoundaryMesh:
        return self.ops.bm

    @property
    def b_mat(self) -> np.ndarray:
        return 0.5 * self.ops.M - self.ops.K

    def apply(self, trace: np.ndarray) -> np.ndarray:
        return self.S @ trace

    def solve_v(self, rhs: np.ndarray) -> np.ndarray:
        return linalg.cho_solve(self.v_factor, rhs)

    def neumann(self, trace: np.ndarray) -> np.ndarray:
        """P0 Neumann data ``-V^{-1}(1/2 - K) g`` in physical units."""
        return -self.solve_v(self.b_mat @ trace) * self.bm.scale

    def neumann_dual(self, trace: np.ndarray) -> np.ndarray:
        """Discrete Neumann data as a P1 dual vector, ``-S g``."""
        return -self.S @ trace

    def constant_flux(self) -> float:
        """``<S 1, 1>``, positive in 2D (capacity term)."""
        one = np.ones(len(self.S))
        return float(one @ self.S @ one)


def assemble_steklov(ops: BoundaryOperators) -> SteklovOperator:
    """Build ``S = W + B^T V^{-1} B`` with ``B = M/2 - K``."""
    try:
        factor = linalg.cho_factor(ops.V, lower=True)
    except linalg.LinAlgError as exc:
        raise SteklovError("single layer matrix is not positive definite; "
                           "boundary not rescaled?") from exc
    b = 0.5 * ops.M - ops.K
    s = ops.W + b.T @ linalg.cho_solve(factor, b)
    s = 0.5 * (s + s.T)
    return SteklovOperator(S=s, ops=ops, v_factor=factor, boundary_nodes=ops.bm.mesh_nodes)


def steklov_for(bm: BoundaryMesh) -> SteklovOperator:
    return assemble_steklov(assemble(bm))


def dual_norm(bm: BoundaryMesh, vec: np.ndarray) -> float:
    """Norm of a P1 dual vector through the lumped boundary mass matrix."""
    lumped = bm.mass_p1().sum(axis=1)
    return float(np.sqrt(np.sum(vec * vec / lumped)))


def dirichlet_to_neumann_residual(sp: SteklovOperator, ops: BoundaryOperators, trace,
                                  flux=None, flux_dual=None) -> float:
    """Dual-norm distance between ``S_h g`` and ``-t``.

    ``flux`` is a physical P0 Neumann datum ``t = du/dnu``; alternatively
    ``flux_dual`` gives ``t`` directly as a P1 dual vector ``<t, psi_j>``.
    """
    trace = np.asarray(trace, dtype=float)
    if flux_dual is None:
        flux = np.zeros(ops.bm.n_panels) if flux is None else np.asarray(flux, dtype=float)
        flux_dual = ops.bm.mass_p0p1().T @ flux
    r = sp.S @ trace + np.asarray(flux_dual, dtype=float)
    return dual_norm(ops.bm, r)


def half_norm_matrix(bm: BoundaryMesh) -> np.ndarray:
    """Discrete ``H^{1/2}`` norm by interpolation between ``L2`` and ``H1``.

    With ``(A + M) phi = lam M phi`` and ``M``-orthonormal ``phi`` the
    matrix is ``M phi diag(sqrt(lam)) phi^T M``.
    """
    m = bm.mass_p1(scaled=True)
    a = bm.stiffness_p1(scaled=True)
    lam, phi = linalg.eigh(a + m, m)
    mp = m @ phi
    return (mp * np.sqrt(lam)) @ mp.T


def coercivity_ratio(sp: SteklovOperator) -> float:
    """Smallest generalized eigenvalue of ``S`` against the ``H^{1/2}`` norm matrix."""
    return float(linalg.eigh(sp.S, half_norm_matrix(sp.bm), eigvals_only=True)[0])


def riesz_lift(bm: BoundaryMesh, dual: np.ndarray) -> np.ndarray:
    """P1 function whose L2 pairing with the hat functions equals ``dual``."""
    return linalg.solve(bm.mass_p1(), dual, assume_a="pos")
