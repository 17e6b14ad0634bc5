"""Galerkin boundary integral operators of the 2D Laplacian on polygons.

Kernels, with ``G(x - y) = -log|x - y| / (2 pi)`` and ``nu`` the outward
normal of the bounded domain::

    V phi(x) = int G(x - y) phi(y) ds_y
    K u(x)   = int d/dnu_y G(x - y) u(y) ds_y      (K 1 = -1/2 on flat parts)
    W        = -d/dnu D,   <W u, w> = <V u', w'>   (tangential derivatives)

Discrete spaces: piecewise constants (P0, one per panel) and continuous
piecewise linears (P1, one per boundary node).  Panel ``p`` runs from node
``p`` to node ``p + 1`` (cyclically), counter-clockwise around the domain.

The 2D logarithmic kernel is only positive definite for boundaries of
logarithmic capacity below one, so operators are assembled on a copy of the
boundary scaled to diameter 1/2.  The Steklov-Poincare matrix built from
them is invariant under this scaling.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .mesh import Mesh, polygon_of, _point_in_polygon

INV_2PI = 1.0 / (2.0 * np.pi)
GAUSS_ORDER = 16
NEAR_FACTOR = 2.0
GRADE_RATIO = 0.15
GRADE_LEVELS = 12
WORKERS_ENV = "DWCOUPLE_WORKERS"


def _gauss01(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


_GX, _GW = _gauss01(GAUSS_ORDER)


def _graded01(center: float, levels: int = GRADE_LEVELS, ratio: float = GRADE_RATIO):
    """Composite Gauss rule on [0, 1] geometrically graded toward ``center``."""
    pts, wts = [], []

    def side(a, b):
        # intervals between a (the singular end) and b
        length = b - a
        if abs(length) < 1e-300:
            return
        edges = [0.0] + [ratio ** k for k in range(levels - 1, -1, -1)]
        for lo, hi in zip(edges[:-1], edges[1:]):
            x0, x1 = a + lo * length, a + hi * length
            pts.append(x0 + (x1 - x0) * _GX)
            wts.append(abs(x1 - x0) * _GW)

    side(center, 0.0)
    side(center, 1.0)
    return np.concatenate(pts), np.concatenate(wts)


def workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


# ----------------------------------------------------------------------
# analytic panel integrals

def panel_integrals(a, tau, nu, length, x):
    """Integrals over straight panels for observation points ``x``.

    ``a``, ``tau``, ``nu``, ``length`` describe panels (shape ``(..., 2)`` and
    ``(...)``) and broadcast against ``x`` of shape ``(..., 2)``.  Returns
    ``(slp, dlp_a, dlp_b)``: the single layer of the constant density and the
    double layer of the two hat functions ``1 - s/L`` and ``s/L``.  Points on
    the panel's line get the principal value 0 for the double layer.
    """
    rx = x[..., 0] - a[..., 0]
    ry = x[..., 1] - a[..., 1]
    s0 = rx * tau[..., 0] + ry * tau[..., 1]
    d = rx * nu[..., 0] + ry * nu[..., 1]
    t1 = -s0
    t2 = length - s0
    d2 = d * d
    r1 = t1 * t1 + d2
    r2 = t2 * t2 + d2
    with np.errstate(divide="ignore", invalid="ignore"):
        l1 = np.where(r1 > 0, np.log(np.where(r1 > 0, r1, 1.0)), 0.0)
        l2 = np.where(r2 > 0, np.log(np.where(r2 > 0, r2, 1.0)), 0.0)
        nz = d != 0
        dsafe = np.where(nz, d, 1.0)
        atan_term = np.where(nz, d * (np.arctan(t2 / dsafe) - np.arctan(t1 / dsafe)), 0.0)
    big = t2 * l2 - t1 * l1 - 2.0 * (t2 - t1) + 2.0 * atan_term
    slp = -INV_2PI * 0.5 * big
    # subtended angle; exactly zero on the panel's own line
    theta = np.where(nz, np.arctan2(d * (t2 - t1), d2 + t1 * t2), 0.0)
    log_ratio = l2 - l1
    dlp_b = INV_2PI * (0.5 * d * log_ratio + s0 * theta) / length
    dlp = INV_2PI * theta
    return slp, dlp - dlp_b, dlp_b


# ----------------------------------------------------------------------

class BoundaryMesh:
    """Closed polygonal boundary of a mesh with P0/P1 indexing."""

    def __init__(self, points: np.ndarray, labels=None, mesh_nodes=None, scale: float | None = None):
        self.points = np.ascontiguousarray(points, dtype=float)
        n = len(self.points)
        self.labels = np.zeros(n, dtype=np.int64) if labels is None else np.asarray(labels, dtype=np.int64)
        self.mesh_nodes = np.arange(n) if mesh_nodes is None else np.asarray(mesh_nodes, dtype=np.int64)
        lengths = np.linalg.norm(np.roll(self.points, -1, axis=0) - self.points, axis=1)
        if np.any(lengths <= 0):
            raise ValueError("boundary mesh has a zero-length panel")
        if scale is None:
            # always normalize, so the discrete operators do not depend on the length unit
            scale = 0.5 / _diameter(self.points)
        self.scale = float(scale)
        self.center = self.points.mean(axis=0)

    @classmethod
    def from_mesh(cls, mesh: Mesh, scale: float | None = None) -> "BoundaryMesh":
        loop = polygon_of(mesh)
        lab = {(int(a), int(b)): int(l) for (a, b), l in zip(mesh.boundary_edges, mesh.boundary_labels)}
        labels = [lab[(int(loop[i]), int(loop[(i + 1) % len(loop)]))] for i in range(len(loop))]
        return cls(mesh.vertices[loop], labels, loop, scale)

    @property
    def n_panels(self) -> int:
        return len(self.points)

    @property
    def n_nodes(self) -> int:
        return len(self.points)

    def panel_nodes(self) -> np.ndarray:
        i = np.arange(self.n_panels)
        return np.stack([i, (i + 1) % self.n_nodes], axis=1)

    def geometry(self, scaled: bool = True):
        """Panel start points, unit tangents, outward normals and lengths."""
        pts = self.scaled_points if scaled else self.points
        a = pts
        b = np.roll(pts, -1, axis=0)
        d = b - a
        length = np.hypot(d[:, 0], d[:, 1])
        tau = d / length[:, None]
        nu = np.stack([tau[:, 1], -tau[:, 0]], axis=1)
        return a, tau, nu, length

    @cached_property
    def scaled_points(self) -> np.ndarray:
        return (self.points - self.center) * self.scale

    @property
    def lengths(self) -> np.ndarray:
        return self.geometry(scaled=False)[3]

    def mass_p0p1(self, scaled: bool = False) -> np.ndarray:
        """``<phi_i, psi_j>`` as an ``(n_panels, n_nodes)`` array."""
        length = self.geometry(scaled)[3]
        m = np.zeros((self.n_panels, self.n_nodes))
        pn = self.panel_nodes()
        idx = np.arange(self.n_panels)
        m[idx, pn[:, 0]] += 0.5 * length
        m[idx, pn[:, 1]] += 0.5 * length
        return m

    def mass_p1(self, scaled: bool = False) -> np.ndarray:
        """P1 boundary mass matrix."""
        length = self.geometry(scaled)[3]
        m = np.zeros((self.n_nodes, self.n_nodes))
        pn = self.panel_nodes()
        for (i, j), h in zip(pn, length):
            m[i, i] += h / 3.0
            m[j, j] += h / 3.0
            m[i, j] += h / 6.0
            m[j, i] += h / 6.0
        return m

    def stiffness_p1(self, scaled: bool = False) -> np.ndarray:
        """P1 boundary stiffness matrix of the tangential derivative."""
        d = self.derivative_matrix(scaled)
        length = self.geometry(scaled)[3]
        return d.T @ (length[:, None] * d)

    def derivative_matrix(self, scaled: bool = True) -> np.ndarray:
        """Arclength derivative P1 -> P0."""
        length = self.geometry(scaled)[3]
        dm = np.zeros((self.n_panels, self.n_nodes))
        pn = self.panel_nodes()
        idx = np.arange(self.n_panels)
        dm[idx, pn[:, 0]] = -1.0 / length
        dm[idx, pn[:, 1]] = 1.0 / length
        return dm

    def refined(self) -> "BoundaryMesh":
        """Every panel split at its midpoint; old node ``i`` becomes ``2i``."""
        mids = 0.5 * (self.points + np.roll(self.points, -1, axis=0))
        pts = np.empty((2 * self.n_nodes, 2))
        pts[0::2] = self.points
        pts[1::2] = mids
        return BoundaryMesh(pts, np.repeat(self.labels, 2), None, self.scale)

    def prolong_p1(self, values: np.ndarray) -> np.ndarray:
        out = np.empty(2 * self.n_nodes)
        out[0::2] = values
        out[1::2] = 0.5 * (values + np.roll(values, -1))
        return out

    def interpolate(self, func) -> np.ndarray:
        """Nodal P1 interpolant of ``func(x, y)`` (physical coordinates)."""
        return np.broadcast_to(np.asarray(func(self.points[:, 0], self.points[:, 1]), dtype=float),
                               (self.n_nodes,)).copy()

    def project_p0(self, func, n_gauss: int = 8) -> np.ndarray:
        """L2 projection of ``func(x, y)`` onto panel constants (physical)."""
        a, tau, _, length = self.geometry(scaled=False)
        gx, gw = _gauss01(n_gauss)
        x = a[:, None, :] + (gx[None, :, None] * length[:, None, None]) * tau[:, None, :]
        vals = np.broadcast_to(np.asarray(func(x[..., 0], x[..., 1]), dtype=float), x.shape[:2])
        return vals @ gw

    def contains(self, pts) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return np.array([_point_in_polygon(self.points, x, y) for x, y in pts])


def _diameter(points: np.ndarray) -> float:
    diff = points[:, None, :] - points[None, :, :]
    return float(np.sqrt(np.max(np.sum(diff * diff, axis=-1))))


@dataclass
class BoundaryOperators:
    """Dense Galerkin matrices on the scaled boundary.

    ``V``: P0 x P0, ``K``: P0 x P1, ``W``: P1 x P1, ``M``: P0 x P1.
    """

    bm: BoundaryMesh
    V: np.ndarray
    K: np.ndarray
    W: np.ndarray
    M: np.ndarray
    V_asymmetry: float = 0.0


# ----------------------------------------------------------------------
# assembly

def _near_pairs(bm: BoundaryMesh):
    a, tau, nu, length = bm.geometry()
    mid = a + 0.5 * tau * length[:, None]
    # lower bound on the panel-to-panel distance
    dist = (np.linalg.norm(mid[:, None, :] - mid[None, :, :], axis=-1)
            - 0.5 * (length[:, None] + length[None, :]))
    lmax = np.maximum(length[:, None], length[None, :])
    near = dist < NEAR_FACTOR * lmax
    np.fill_diagonal(near, False)
    return near


def _touch_param(bm: BoundaryMesh, outer: int, inner: int):
    """Parameter on panel ``outer`` of a vertex shared with ``inner`` (or None)."""
    n = bm.n_panels
    if inner == (outer + 1) % n:
        return 1.0
    if inner == (outer - 1) % n:
        return 0.0
    return None


def _closest_param(bm: BoundaryMesh, outer: int, inner: int) -> float:
    a, tau, _, length = bm.geometry()
    s = np.linspace(0.0, 1.0, 65)
    xo = a[outer] + (s * length[outer])[:, None] * tau[outer]
    xi = a[inner] + (s * length[inner])[:, None] * tau[inner]
    d = np.sum((xo[:, None, :] - xi[None, :, :]) ** 2, axis=-1)
    return float(s[np.argmin(d.min(axis=1))])


def _rows(bm: BoundaryMesh, outer_idx: np.ndarray):
    """Regular-quadrature V and K rows for a chunk of outer panels."""
    a, tau, nu, length = bm.geometry()
    x = a[outer_idx, None, :] + (_GX[None, :, None] * length[outer_idx, None, None]) * tau[outer_idx, None, :]
    w = _GW[None, :] * length[outer_idx, None]
    # (inner, outer, q)
    slp, da, db = panel_integrals(a[:, None, None, :], tau[:, None, None, :], nu[:, None, None, :],
                                  length[:, None, None], x[None, :, :, :])
    v = np.einsum("ioq,oq->oi", slp, w)
    ka = np.einsum("ioq,oq->oi", da, w)
    kb = np.einsum("ioq,oq->oi", db, w)
    return v, ka, kb


def _special(bm: BoundaryMesh, outer: int, inner: int):
    a, tau, nu, length = bm.geometry()
    c = _touch_param(bm, outer, inner)
    if c is None:
        c = _closest_param(bm, outer, inner)
    gx, gw = _graded01(c)
    x = a[outer] + (gx * length[outer])[:, None] * tau[outer]
    w = gw * length[outer]
    slp, da, db = panel_integrals(a[inner], tau[inner], nu[inner], length[inner], x)
    return slp @ w, da @ w, db @ w


def assemble(bm: BoundaryMesh) -> BoundaryOperators:
    """Assemble ``V``, ``K``, ``W`` and ``M`` on the scaled boundary."""
    n = bm.n_panels
    a, tau, nu, length = bm.geometry()
    v_raw = np.empty((n, n))  # [outer, inner]
    ka = np.empty((n, n))
    kb = np.empty((n, n))
    chunks = np.array_split(np.arange(n), max(1, min(n, 8 * workers())))

    def run(idx):
        if len(idx):
            v_raw[idx], ka[idx], kb[idx] = _rows(bm, idx)

    nw = workers()
    if nw > 1:
        with ThreadPoolExecutor(nw) as pool:
            list(pool.map(run, chunks))
    else:
        for idx in chunks:
            run(idx)

    near = _near_pairs(bm)
    for o, i in zip(*np.nonzero(near)):
        v_raw[o, i], ka[o, i], kb[o, i] = _special(bm, int(o), int(i))
    diag = np.arange(n)
    v_raw[diag, diag] = (3.0 - 2.0 * np.log(length)) * length ** 2 / (4.0 * np.pi)
    ka[diag, diag] = 0.0
    kb[diag, diag] = 0.0

    asym = float(np.max(np.abs(v_raw - v_raw.T)) / np.max(np.abs(v_raw)))
    V = 0.5 * (v_raw + v_raw.T)
    pn = bm.panel_nodes()
    K = np.zeros((n, bm.n_nodes))
    K[:, pn[:, 0]] += ka
    K[:, pn[:, 1]] += kb
    D = bm.derivative_matrix(scaled=True)
    W = D.T @ V @ D
    W = 0.5 * (W + W.T)
    M = bm.mass_p0p1(scaled=True)
    return BoundaryOperators(bm=bm, V=V, K=K, W=W, M=M, V_asymmetry=asym)


def assemble_single_layer(bm: BoundaryMesh) -> np.ndarray:
    return assemble(bm).V


def assemble_double_layer(bm: BoundaryMesh) -> np.ndarray:
    return assemble(bm).K


def assemble_hypersingular(bm: BoundaryMesh) -> np.ndarray:
    return assemble(bm).W


# ----------------------------------------------------------------------

def evaluate_exterior(bm: BoundaryMesh, dirichlet_trace, neumann_trace, points) -> np.ndarray:
    """Representation formula ``u = -V t + D g`` at exterior points.

    ``dirichlet_trace`` holds P1 nodal values ``g``, ``neumann_trace`` the P0
    panel values of ``t = du/dnu`` (outward normal of the domain), both in
    physical units.  The result is the exterior harmonic function with this
    Cauchy data that decays at infinity.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    g = np.asarray(dirichlet_trace, dtype=float)
    t = np.asarray(neumann_trace, dtype=float)
    a, tau, nu, length = bm.geometry(scaled=False)
    if np.any(bm.contains(pts)):
        raise ValueError("evaluation point inside the domain")
    b = a + tau * length[:, None]
    ab = b - a
    rel = pts[:, None, :] - a[None, :, :]
    s = np.clip(np.einsum("pij,ij->pi", rel, ab) / np.einsum("ij,ij->i", ab, ab), 0.0, 1.0)
    dist = np.linalg.norm(rel - s[..., None] * ab[None], axis=-1)
    if np.any(dist <= length[None, :]):
        raise ValueError("evaluation point within one panel length of the boundary")
    slp, da, db = panel_integrals(a[None], tau[None], nu[None], length[None], pts[:, None, :])
    pn = bm.panel_nodes()
    return -slp @ t + da @ g[pn[:, 0]] + db @ g[pn[:, 1]]


def dump_matrix(matrix: np.ndarray, path) -> None:
    """Write a matrix as text: a ``rows cols`` header then one row per line."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{matrix.shape[0]} {matrix.shape[1]}\n")
        for row in matrix:
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")


def load_matrix(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        r, c = (int(v) for v in fh.readline().split())
        data = np.array([[float(x) for x in line.split()] for line in fh], dtype=float)
    return data.reshape(r, c)
