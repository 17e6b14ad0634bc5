"""Minimization of the coupled energy over the admissible set.

The admissible set asks ``v >= 0`` at every Signorini dof and, in two
dimensions, the single linear condition ``<S(w - u0), 1> = 0`` that encodes
decay of the exterior solution.  The solver is a primal active-set method:
the bound-constrained dofs currently at zero are frozen, the remaining ones
are updated by damped generalized Newton steps on the bordered system of the
linear constraint, and blocking bounds are added during the line search.
Once the free problem is stationary, active dofs with a negative multiplier
are released in one sweep.

Minimizers need not be unique; the stress, the projected gradient, the
microstructure indicator and the boundary value are (see
:func:`extract_macro`).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from . import potential as pot
from .assembly import CoupledEnergy, DofLayout, element_gradients
from .mesh import BoundaryLabel, Mesh

log = logging.getLogger(__name__)

ARMIJO = 1e-4


class SolverError(RuntimeError):
    """Raised when the iteration fails; carries the iteration log."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history or []


@dataclass
class SolveOptions:
    tol: float = 1e-8
    max_iter: int = 100
    max_newton: int = 200
    mean_constraint: bool = True
    seed: int | None = None


@dataclass
class IterationRecord:
    index: int
    energy: float
    residual: float
    n_active: int
    step: float = 0.0
    kind: str = "newton"

    def format(self) -> str:
        return (f"iter={self.index} energy={self.energy!r} residual={self.residual!r} "
                f"active={self.n_active} step={self.step!r} kind={self.kind}")


@dataclass
class SolutionState:
    """Discrete minimizer.  ``u`` alone is not unique; see :class:`MacroFields`."""

    x: np.ndarray
    layout: DofLayout
    multiplier: float
    active: np.ndarray
    history: list = field(default_factory=list)
    energy: float = 0.0
    residual: float = 0.0
    iterations: int = 0

    @property
    def u(self) -> np.ndarray:
        return self.layout.split(self.x)[0]

    @property
    def v(self) -> np.ndarray:
        return self.layout.split(self.x)[1]

    def log_text(self) -> str:
        return "\n".join(r.format() for r in self.history) + ("\n" if self.history else "")


def random_initial(layout: DofLayout, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    x = np.empty(layout.n_dofs)
    x[: layout.n_u] = rng.uniform(-1.0, 1.0, layout.n_u)
    x[layout.n_u:] = rng.uniform(0.0, 1.0, layout.n_v)
    return x


def solve(problem: CoupledEnergy, u0_nodal=None, options: SolveOptions | None = None,
          initial=None) -> SolutionState:
    """Minimize ``problem`` over the admissible set."""
    opts = options or SolveOptions()
    lay = problem.layout
    n, nu = lay.n_dofs, lay.n_u
    if initial is not None:
        x = np.array(initial, dtype=float)
    elif opts.seed is not None:
        x = random_initial(lay, opts.seed)
    else:
        x = np.zeros(n)
    x[nu:] = np.maximum(x[nu:], 0.0)
    u0_nodal = np.zeros(lay.n_b) if u0_nodal is None else np.asarray(u0_nodal, dtype=float)

    if opts.mean_constraint:
        c, d = problem.mean_constraint(u0_nodal)
        x[:nu] += (d - c @ x) / c[:nu].sum()
    else:
        c, d = np.zeros(n), 0.0

    active = x[nu:] <= 0.0
    scale = 1.0 + float(np.max(np.abs(problem.load), initial=0.0))
    target = opts.tol * scale
    energy = problem(x)
    grad = problem.gradient(x)
    history: list = []
    outer = 0
    newton = 0
    mu = 0.0

    while True:
        free = np.ones(n, dtype=bool)
        free[nu + np.flatnonzero(active)] = False
        gf, cf = grad[free], c[free]
        cc = float(cf @ cf)
        mu = -float(cf @ gf) / cc if cc > 0 else 0.0
        res_free = float(np.max(np.abs(gf + mu * cf), initial=0.0))
        lam = grad[nu:][active] + mu * c[nu:][active]
        res_active = max(0.0, -float(np.min(lam, initial=0.0)))
        residual = max(res_free, res_active)
        if not history:
            history.append(IterationRecord(0, energy, residual, int(active.sum()), 0.0, "start"))

        if res_free <= target:
            if res_active <= target:
                break
            outer += 1
            if outer > opts.max_iter:
                raise SolverError(f"active set did not settle after {opts.max_iter} sweeps", history)
            release = np.flatnonzero(active)[lam < -target]
            active[release] = False
            history.append(IterationRecord(len(history), energy, residual, int(active.sum()), 0.0, "release"))
            continue

        newton += 1
        if newton > opts.max_newton * max(1, outer + 1) or newton > opts.max_newton * opts.max_iter:
            raise SolverError(f"no convergence after {newton - 1} Newton steps "
                              f"(residual {residual:.3e}, target {target:.3e})", history)
        step = _newton_direction(problem, x, grad, free, c if opts.mean_constraint else None, residual / scale)
        slope = float(grad @ step)
        kind = "newton"
        if not np.isfinite(slope) or slope >= -1e-300:
            step = _gradient_direction(problem, x, grad, free, c if opts.mean_constraint else None)
            slope = float(grad @ step)
            kind = "gradient"
            if slope >= 0:
                raise SolverError("no descent direction available", history)

        # ratio test on the free Signorini dofs
        dv = step[nu:]
        v = x[nu:]
        blocking = (dv < 0) & ~active
        alpha_max = np.inf
        if blocking.any():
            ratios = -v[blocking] / dv[blocking]
            alpha_max = float(ratios.min())
        alpha = min(1.0, alpha_max)
        while True:
            trial = x + alpha * step
            trial[nu:] = np.maximum(trial[nu:], 0.0)
            e_trial = problem(trial)
            if e_trial <= energy + ARMIJO * alpha * slope + 1e-15 * abs(energy):
                break
            alpha *= 0.5
            if alpha < 1e-14:
                raise SolverError("line search failed; energy and gradient inconsistent", history)
        if alpha == alpha_max:
            hit = np.flatnonzero(blocking)[np.argmin(-v[blocking] / dv[blocking])]
            trial[nu + hit] = 0.0
        x = trial
        newly = (x[nu:] <= 0.0) & ~active
        active |= newly
        x[nu:][active] = 0.0
        energy = problem(x)
        grad = problem.gradient(x)
        history.append(IterationRecord(len(history), energy, residual, int(active.sum()), alpha, kind))
        log.debug(history[-1].format())

    state = SolutionState(x=x, layout=lay, multiplier=mu, active=active.copy(), history=history,
                          energy=energy, residual=residual, iterations=newton)
    history.append(IterationRecord(len(history), energy, residual, int(active.sum()), 0.0, "converged"))
    return state


def _newton_direction(problem, x, grad, free, c, rel_res):
    h = problem.hessian(x)
    idx = np.flatnonzero(free)
    hf = h[idx][:, idx].tocsr()
    diag = hf.diagonal()
    mean_diag = float(np.mean(np.abs(diag))) if len(diag) else 1.0
    delta = mean_diag * (min(1e-3, rel_res) + 1e-12)
    hf = hf + delta * sparse.identity(len(idx), format="csr")
    rhs = -grad[idx]
    if c is not None:
        cf = c[idx]
        k = sparse.bmat([[hf, cf[:, None]], [cf[None, :], None]], format="csc")
        sol = splinalg.spsolve(k, np.concatenate([rhs, [0.0]]))
        df = sol[:-1]
    else:
        df = splinalg.spsolve(hf.tocsc(), rhs)
    step = np.zeros(len(x))
    step[idx] = df
    return step


def _gradient_direction(problem, x, grad, free, c):
    h = problem.hessian(x)
    idx = np.flatnonzero(free)
    diag = np.abs(h.diagonal()[idx]) + 1e-12
    g = grad[idx]
    if c is not None:
        cf = c[idx]
        lam = -float(cf @ (g / diag)) / float(cf @ (cf / diag))
        g = g + lam * cf
    step = np.zeros(len(x))
    step[idx] = -g / diag
    return step


# ----------------------------------------------------------------------

@dataclass
class MacroFields:
    """Minimizer-independent quantities (per element unless noted)."""

    sigma: np.ndarray
    xi: np.ndarray
    p_grad: np.ndarray
    micro_flag: np.ndarray
    boundary_value: np.ndarray  # boundary P1 coefficients of u|_bd + v
    unique_region: np.ndarray | None = None


def extract_macro(layout: DofLayout, p: pot.WellParams, state, with_region: bool = True) -> MacroFields:
    x = state.x if isinstance(state, SolutionState) else np.asarray(state, dtype=float)
    u, _ = layout.split(x)
    g = element_gradients(layout.mesh, u)
    xi = pot.eval_q(p, g)
    tol_micro = 1e-8 * p.a_norm2
    region = unique_displacement_region(layout.mesh, p) if with_region else None
    return MacroFields(sigma=pot.grad_wss(p, g), xi=xi, p_grad=pot.project_perp(p, g),
                       micro_flag=xi <= tol_micro, boundary_value=layout.boundary_value(x),
                       unique_region=region)


def unique_displacement_region(mesh: Mesh, p: pot.WellParams, chunk: int = 2048) -> np.ndarray:
    """Elements whose line perpendicular to ``A`` reaches the transmission boundary.

    Casts rays from each barycenter in both directions orthogonal to ``A``
    and reports whether the first boundary edge hit on either side is a
    transmission edge.
    """
    v = mesh.vertices
    ea = v[mesh.boundary_edges[:, 0]]
    eb = v[mesh.boundary_edges[:, 1]]
    seg = eb - ea
    is_t = mesh.boundary_labels == BoundaryLabel.TRANSMISSION
    direction = p.a_perp
    out = np.zeros(mesh.n_triangles, dtype=bool)
    for start in range(0, mesh.n_triangles, chunk):
        origin = mesh.barycenters[start:start + chunk]
        hit_t = np.zeros(len(origin), dtype=bool)
        for sgn in (1.0, -1.0):
            dvec = sgn * direction
            # origin + s dvec = ea + t seg
            det = dvec[0] * (-seg[:, 1]) - dvec[1] * (-seg[:, 0])
            rel = ea[None, :, :] - origin[:, None, :]
            with np.errstate(divide="ignore", invalid="ignore"):
                s = (rel[..., 0] * (-seg[:, 1]) - rel[..., 1] * (-seg[:, 0])) / det
                t = (dvec[0] * rel[..., 1] - dvec[1] * rel[..., 0]) / det
            ok = (np.abs(det) > 1e-14) & (t >= -1e-12) & (t <= 1 + 1e-12) & (s > 1e-12)
            s = np.where(ok, s, np.inf)
            smin = s.min(axis=1, keepdims=True)
            nearest = ok & (s <= smin * (1 + 1e-10))
            hit_t |= np.any(nearest & is_t[None, :], axis=1)
        out[start:start + chunk] = hit_t
    return out
