"""Residual a posteriori estimator, Dörfler marking and the adaptive loop.

Indicators (all nonnegative)::

    eta_Omega = sum_K h_K ||f||_{L^{4/3}(K)} + sum_E h_E ||[nu_E . sigma]||_{L2(E)}
    eta_C1    = sum_{E in Gamma_s} ||(nu . sigma)_+||_{L2(E)}
    eta_C2    = sum_{E in Gamma_s} int_E (nu . sigma)_- v
    eta_S     = sum_{E on the boundary} h_E^{1/2} ||R||_{L2(E)}

with ``R = S(w - u0) + nu . sigma - t0`` and ``S(...)`` lifted to a P1
function through the boundary mass matrix.  The discrete mean condition
enters ``R`` through its multiplier: the lifted term is ``S(w - u0 + mu)``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import linalg

from . import potential as pot
from .assembly import DUNAVANT7, CoupledEnergy, DofLayout, ProblemData, assemble_load
from .bem import BoundaryMesh, BoundaryOperators, _gauss01, assemble
from .mesh import BoundaryLabel, Mesh, bisect, edge_patches, prolongate, refine_uniform
from .solver import (MacroFields, SolutionState, SolveOptions, SolverError, extract_macro,
                     solve)
from .steklov import SteklovOperator, steklov_for

log = logging.getLogger(__name__)


@dataclass
class EstimatorReport:
    volume: np.ndarray       # per element, h_K ||f||_{L^{4/3}(K)}
    jump: np.ndarray         # per edge, zero on boundary edges
    contact_pos: np.ndarray  # per boundary panel, zero off Gamma_s
    contact_comp: np.ndarray  # per boundary panel, zero off Gamma_s
    flux: np.ndarray         # per boundary panel
    edge_triangles: np.ndarray  # (n_edges, 2), -1 for the missing side
    panel_triangles: np.ndarray  # triangle adjacent to each boundary panel
    dist: float | None = None

    @property
    def eta_omega(self) -> float:
        return float(self.volume.sum() + self.jump.sum())

    @property
    def eta_c1(self) -> float:
        return float(self.contact_pos.sum())

    @property
    def eta_c2(self) -> float:
        return float(self.contact_comp.sum())

    @property
    def eta_s(self) -> float:
        return float(self.flux.sum())

    @property
    def total(self) -> float:
        return self.eta_omega + self.eta_c1 + self.eta_c2 + self.eta_s

    def local_indicators(self) -> np.ndarray:
        """Per-element indicators; interior edge terms split half and half."""
        out = self.volume.copy()
        t = self.edge_triangles
        interior = t[:, 1] >= 0
        np.add.at(out, t[interior, 0], 0.5 * self.jump[interior])
        np.add.at(out, t[interior, 1], 0.5 * self.jump[interior])
        np.add.at(out, t[~interior, 0], self.jump[~interior])
        np.add.at(out, self.panel_triangles, self.contact_pos + self.contact_comp + self.flux)
        return out


def panel_triangles(mesh: Mesh, bm: BoundaryMesh) -> np.ndarray:
    """Index of the triangle adjacent to each boundary panel."""
    geo = edge_patches(mesh)
    lookup = {(int(min(a, b)), int(max(a, b))): int(t)
              for (a, b), t in zip(geo.edges, geo.triangles[:, 0])}
    nodes = bm.mesh_nodes
    nxt = np.roll(nodes, -1)
    return np.array([lookup[(min(a, b), max(a, b))] for a, b in zip(nodes, nxt)], dtype=np.int64)


def volume_terms(mesh: Mesh, f: Callable, rule=DUNAVANT7) -> np.ndarray:
    """``h_K ||f||_{L^{4/3}(K)}`` per element."""
    bary, weights = rule
    pts = np.einsum("qi,kij->kqj", bary, mesh.vertices[mesh.triangles])
    vals = np.broadcast_to(np.asarray(f(pts[..., 0], pts[..., 1]), dtype=float), pts.shape[:2])
    integral = mesh.areas * (np.abs(vals) ** (4.0 / 3.0) @ weights)
    return mesh.diameters * integral ** 0.75


def jump_terms(mesh: Mesh, sigma: np.ndarray):
    """``h_E^{3/2} |[sigma] . nu_E|`` on interior edges, zero on the boundary."""
    geo = edge_patches(mesh)
    t = geo.triangles
    interior = t[:, 1] >= 0
    out = np.zeros(len(t))
    diff = sigma[t[interior, 0]] - sigma[t[interior, 1]]
    out[interior] = geo.length[interior] ** 1.5 * np.abs(np.sum(diff * geo.normal[interior], axis=1))
    return out, t


def estimate(mesh: Mesh, layout: DofLayout, p: pot.WellParams, sp: SteklovOperator,
             data: ProblemData, state, macro: MacroFields | None = None) -> EstimatorReport:
    """Evaluate all estimator contributions for a converged state."""
    bm = layout.bm
    x = state.x if isinstance(state, SolutionState) else np.asarray(state, dtype=float)
    mu = state.multiplier if isinstance(state, SolutionState) else 0.0
    if macro is None:
        macro = extract_macro(layout, p, x, with_region=False)
    sigma = macro.sigma
    volume = volume_terms(mesh, data.f)
    jump, edge_tris = jump_terms(mesh, sigma)

    ptri = panel_triangles(mesh, bm)
    a, tau, nu, length = bm.geometry(scaled=False)
    sn = np.sum(sigma[ptri] * nu, axis=1)
    sig = bm.labels == BoundaryLabel.SIGNORINI
    contact_pos = np.where(sig, np.maximum(sn, 0.0) * np.sqrt(length), 0.0)
    vb = layout.v_on_boundary(x)
    vmean = 0.5 * (vb + np.roll(vb, -1))
    contact_comp = np.where(sig, np.maximum(-sn, 0.0) * length * vmean, 0.0)

    w = layout.boundary_value(x)
    u0 = bm.interpolate(data.u0)
    lifted = linalg.solve(bm.mass_p1(), sp.S @ (w - u0 + mu), assume_a="pos")
    gx, gw = _gauss01(6)
    qp = a[:, None, :] + (gx[None, :, None] * length[:, None, None]) * tau[:, None, :]
    t0 = np.broadcast_to(np.asarray(data.t0(qp[..., 0], qp[..., 1]), dtype=float), qp.shape[:2])
    rq = (lifted[:, None] * (1 - gx)[None, :] + np.roll(lifted, -1)[:, None] * gx[None, :]
          + sn[:, None] - t0)
    flux = np.sqrt(length) * np.sqrt(length * (rq ** 2 @ gw))
    return EstimatorReport(volume=volume, jump=jump, contact_pos=contact_pos,
                           contact_comp=contact_comp, flux=flux, edge_triangles=edge_tris,
                           panel_triangles=ptri)


def mark(report, theta: float) -> np.ndarray:
    """Dörfler marking on the local indicators; ties go to the lower index."""
    if not 0 < theta <= 1:
        raise ValueError(f"theta must lie in (0, 1], got {theta}")
    eta = report.local_indicators() if isinstance(report, EstimatorReport) else np.asarray(report, float)
    total = eta.sum()
    if total <= 0:
        return np.zeros(0, dtype=np.int64)
    if theta >= 1:
        return np.flatnonzero(eta > 0)
    order = np.argsort(-eta, kind="stable")
    csum = np.cumsum(eta[order])
    k = int(np.searchsorted(csum, theta * total * (1 - 1e-14))) + 1
    return np.sort(order[:k])


def dist_surrogate(bm: BoundaryMesh, ops_fine: BoundaryOperators, datum: np.ndarray) -> float:
    """Two-level surrogate of the distance of ``V^{-1}(1/2 - K) datum`` to coarse P0.

    ``datum`` holds coarse boundary P1 coefficients of ``w - u0``.  The
    fine density is split V-orthogonally against the coarse piecewise
    constants; the V-norm of the remainder is returned.  Heuristic only.
    """
    datum = np.asarray(datum, dtype=float)
    if not np.any(datum):
        return 0.0
    fine = bm.prolong_p1(datum)
    v = ops_fine.V
    psi = linalg.solve(v, (0.5 * ops_fine.M - ops_fine.K) @ fine, assume_a="pos")
    n = bm.n_panels
    pmat = np.zeros((2 * n, n))
    pmat[2 * np.arange(n), np.arange(n)] = 1.0
    pmat[2 * np.arange(n) + 1, np.arange(n)] = 1.0
    vp = v @ pmat
    coarse = linalg.solve(pmat.T @ vp, vp.T @ psi, assume_a="pos")
    r = psi - pmat @ coarse
    return float(np.sqrt(max(r @ v @ r, 0.0)))


def sigma_difference(coarse: Mesh, sigma_coarse: np.ndarray, fine: Mesh, sigma_fine: np.ndarray) -> float:
    """``||sigma_h - sigma_{h/2}||_{L^{4/3}}``; ``fine.triangle_parent`` must point into ``coarse``."""
    parent = fine.triangle_parent
    if parent.min() < 0 or parent.max() >= coarse.n_triangles:
        raise ValueError("fine mesh is not a refinement of the coarse mesh")
    diff = np.linalg.norm(sigma_fine - sigma_coarse[parent], axis=1)
    return float(np.sum(fine.areas * diff ** (4.0 / 3.0)) ** 0.75)


def lp_norm(mesh: Mesh, values: np.ndarray, q: float) -> float:
    """``L^q`` norm of a piecewise constant (scalar or vector) field."""
    values = np.asarray(values, dtype=float)
    mag = np.linalg.norm(values, axis=1) if values.ndim == 2 else np.abs(values)
    return float(np.sum(mesh.areas * mag ** q) ** (1.0 / q))


def reliability_constants(differences, etas) -> np.ndarray:
    """Ratios ``||sigma_h - sigma_{h/2}|| / eta_h``; stable ratios mean a stable constant."""
    return np.asarray(differences, dtype=float) / np.asarray(etas, dtype=float)


# ----------------------------------------------------------------------
# level pipeline and adaptive loop

@dataclass
class LevelResult:
    level: int
    mesh: Mesh
    layout: DofLayout
    sp: SteklovOperator
    energy: CoupledEnergy
    state: SolutionState
    macro: MacroFields
    report: EstimatorReport

    @property
    def n_elements(self) -> int:
        return self.mesh.n_triangles

    @property
    def n_dofs(self) -> int:
        return self.layout.n_dofs

    @property
    def j_h(self) -> float:
        return self.state.energy

    def row(self) -> dict:
        r = self.report
        return {"level": self.level, "n_elements": self.n_elements, "n_dofs": self.n_dofs,
                "J_h": self.j_h, "eta_omega": r.eta_omega, "eta_c1": r.eta_c1,
                "eta_c2": r.eta_c2, "eta_s": r.eta_s,
                "dist_surrogate": np.nan if r.dist is None else r.dist,
                "iterations": self.state.iterations}


def solve_level(mesh: Mesh, p: pot.WellParams, data: ProblemData, options: SolveOptions,
                initial=None, level: int = 0, with_dist: bool = False) -> LevelResult:
    """Assemble, solve and estimate on one mesh."""
    bm = BoundaryMesh.from_mesh(mesh)
    sp = steklov_for(bm)
    layout = DofLayout(mesh, bm)
    energy = CoupledEnergy(layout, p, sp, assemble_load(layout, data, sp))
    u0 = bm.interpolate(data.u0)
    try:
        state = solve(energy, u0, options, initial=initial)
    except SolverError as exc:
        raise SolverError(f"level {level}: {exc}", exc.history) from exc
    macro = extract_macro(layout, p, state)
    report = estimate(mesh, layout, p, sp, data, state, macro)
    if with_dist:
        report.dist = dist_surrogate(bm, assemble(bm.refined()), layout.boundary_value(state.x) - u0)
    return LevelResult(level, mesh, layout, sp, energy, state, macro, report)


def transfer_state(result: LevelResult, fine: Mesh, fine_layout: DofLayout) -> np.ndarray:
    """Warm start on ``fine`` by nodal interpolation; ``v`` is clipped at zero."""
    u = prolongate(fine, result.state.u)
    vnode = np.zeros(result.mesh.n_vertices)
    vnode[result.layout.boundary_nodes] = result.layout.v_on_boundary(result.state.x)
    vfine = prolongate(fine, vnode)[fine_layout.boundary_nodes[fine_layout.signorini_positions]]
    return np.concatenate([u, np.maximum(vfine, 0.0)])


@dataclass
class AdaptiveOptions:
    mode: str = "adaptive"  # "adaptive" or "uniform"
    theta: float = 0.5
    max_levels: int = 6
    dof_budget: int = 10 ** 6
    eta_target: float = 0.0
    with_dist: bool = False


@dataclass
class RunRecord:
    levels: list = field(default_factory=list)

    def rows(self) -> list:
        return [lvl.row() for lvl in self.levels]


def adaptive_loop(mesh: Mesh, p: pot.WellParams, data: ProblemData,
                  solve_options: SolveOptions | None = None,
                  options: AdaptiveOptions | None = None,
                  on_level: Callable | None = None) -> RunRecord:
    """Solve, estimate, mark and refine until a stopping rule fires.

    Stops after ``max_levels`` levels, once ``eta <= eta_target`` or once the
    number of unknowns reaches ``dof_budget``.  In ``uniform`` mode every
    level halves the mesh size.
    """
    opts = options or AdaptiveOptions()
    sopts = solve_options or SolveOptions()
    if opts.mode not in ("adaptive", "uniform"):
        raise ValueError(f"unknown refinement mode {opts.mode!r}")
    record = RunRecord()
    initial = None
    for level in range(opts.max_levels):
        result = solve_level(mesh, p, data, sopts, initial, level, opts.with_dist)
        record.levels.append(result)
        log.info("level %d: %d elements, %d dofs, J=%r, eta=%r", level, result.n_elements,
                 result.n_dofs, result.j_h, result.report.total)
        if on_level is not None:
            on_level(result)
        if (result.report.total <= opts.eta_target or result.n_dofs >= opts.dof_budget
                or level == opts.max_levels - 1):
            break
        if opts.mode == "uniform":
            fine = refine_uniform(mesh)
        else:
            fine = bisect(mesh, mark(result.report, opts.theta))
        fine_layout = DofLayout(fine, BoundaryMesh.from_mesh(fine))
        initial = transfer_state(result, fine, fine_layout)
        mesh = fine
        # the first solve at the next level uses the seed only without a warm start
        sopts = SolveOptions(tol=sopts.tol, max_iter=sopts.max_iter, max_newton=sopts.max_newton,
                             mean_constraint=sopts.mean_constraint, seed=None)
    return record
