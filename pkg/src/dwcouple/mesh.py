"""Conforming triangle meshes with labeled boundary parts.

Triangles are stored counter-clockwise as ``(a, b, c)`` where ``(a, b)`` is
the refinement edge and ``c`` the newest vertex.  Refinement is
newest-vertex bisection with the usual conforming closure.

Plain-text format (one record per line, ``#`` starts a comment)::

    vertices N
    x y                 # N lines, shortest round-trip float repr
    triangles M
    a b c               # M lines, (a, b) is the refinement edge
    boundary K
    a b LABEL           # K lines, LABEL is T (transmission) or S (Signorini)
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction
from functools import cached_property
from typing import Callable, Mapping, Sequence

import numpy as np
from shapely.geometry import LinearRing


class BoundaryLabel(IntEnum):
    TRANSMISSION = 0
    SIGNORINI = 1


_LABEL_CHAR = {BoundaryLabel.TRANSMISSION: "T", BoundaryLabel.SIGNORINI: "S"}
_CHAR_LABEL = {v: k for k, v in _LABEL_CHAR.items()}


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class EdgeGeometry:
    """Edge table of a mesh.

    ``triangles[:, 1] == -1`` on boundary edges.  Normals of interior edges
    point from ``triangles[:, 0]`` to ``triangles[:, 1]``; boundary normals
    point outward.
    """

    edges: np.ndarray
    length: np.ndarray
    normal: np.ndarray
    midpoint: np.ndarray
    triangles: np.ndarray

    @property
    def is_boundary(self) -> np.ndarray:
        return self.triangles[:, 1] < 0


class Mesh:
    """Immutable triangle mesh; :func:`bisect` returns a new instance."""

    def __init__(self, vertices, triangles, boundary_edges, boundary_labels,
                 vertex_parents=None, triangle_parent=None, generation=None):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        self.boundary_edges = np.ascontiguousarray(boundary_edges, dtype=np.int64).reshape(-1, 2)
        self.boundary_labels = np.ascontiguousarray(boundary_labels, dtype=np.int64)
        n = len(self.vertices)
        m = len(self.triangles)
        self.vertex_parents = (np.full((n, 2), -1, dtype=np.int64) if vertex_parents is None
                               else np.asarray(vertex_parents, dtype=np.int64))
        self.triangle_parent = (np.full(m, -1, dtype=np.int64) if triangle_parent is None
                                else np.asarray(triangle_parent, dtype=np.int64))
        self.generation = (np.zeros(m, dtype=np.int64) if generation is None
                           else np.asarray(generation, dtype=np.int64))
        for arr in (self.vertices, self.triangles, self.boundary_edges, self.boundary_labels):
            arr.setflags(write=False)

    @classmethod
    def from_arrays(cls, vertices, triangles, label: Callable | None = None,
                    longest_edge_first: bool = True) -> "Mesh":
        """Build a mesh from raw arrays.

        Triangles are reoriented counter-clockwise.  With
        ``longest_edge_first`` the longest edge becomes the refinement edge.
        ``label`` maps a boundary edge midpoint to a :class:`BoundaryLabel`;
        by default every boundary edge is a transmission edge.
        """
        vertices = np.asarray(vertices, dtype=float)
        tris = np.array(triangles, dtype=np.int64).reshape(-1, 3)
        p = vertices[tris]
        det = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
               - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
        tris[det < 0] = tris[det < 0][:, [1, 0, 2]]
        if longest_edge_first:
            for k, t in enumerate(tris):
                lens = [np.linalg.norm(vertices[t[i]] - vertices[t[(i + 1) % 3]]) for i in range(3)]
                i = int(np.argmax(lens))
                tris[k] = np.roll(t, -i)
        bedges = _boundary_edges_of(tris)
        if label is None:
            labels = np.zeros(len(bedges), dtype=np.int64)
        else:
            mids = 0.5 * (vertices[bedges[:, 0]] + vertices[bedges[:, 1]])
            labels = np.array([int(label(m)) for m in mids], dtype=np.int64)
        return cls(vertices, tris, bedges, labels)

    # ------------------------------------------------------------------
    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def _edge_data(self):
        t = self.triangles
        local = np.stack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]], axis=1)  # (M,3,2)
        flat = np.sort(local.reshape(-1, 2), axis=1)
        edges, inverse = np.unique(flat, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        tri_edges = inverse.reshape(-1, 3)
        tri_of = np.repeat(np.arange(len(t)), 3)
        order = np.lexsort((tri_of, inverse))
        edge_tris = np.full((len(edges), 2), -1, dtype=np.int64)
        counts = np.bincount(inverse, minlength=len(edges))
        if counts.max() > 2:
            raise MeshError("non-manifold edge shared by more than two triangles")
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        edge_tris[:, 0] = tri_of[order][starts]
        two = counts == 2
        edge_tris[two, 1] = tri_of[order][starts[two] + 1]
        return edges, tri_edges, edge_tris

    @property
    def edges(self) -> np.ndarray:
        return self._edge_data[0]

    @property
    def triangle_edges(self) -> np.ndarray:
        """Edge index of local edges ``(0,1)``, ``(1,2)``, ``(2,0)``."""
        return self._edge_data[1]

    @cached_property
    def areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        return 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                      - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))

    @cached_property
    def basis_gradients(self) -> np.ndarray:
        """Gradients of the three P1 hat functions, shape ``(M, 3, 2)``."""
        p = self.vertices[self.triangles]
        twice = 2.0 * self.areas
        g = np.empty((len(p), 3, 2))
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            g[:, i, 0] = (p[:, j, 1] - p[:, k, 1]) / twice
            g[:, i, 1] = (p[:, k, 0] - p[:, j, 0]) / twice
        return g

    @cached_property
    def diameters(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        lens = np.linalg.norm(p - np.roll(p, -1, axis=1), axis=2)
        return lens.max(axis=1)

    @cached_property
    def barycenters(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    @property
    def h(self) -> float:
        return float(self.diameters.max())

    def shape_regularity(self) -> float:
        """``max h_K / rho_K`` with ``rho_K`` the inscribed circle diameter."""
        p = self.vertices[self.triangles]
        perim = np.linalg.norm(p - np.roll(p, -1, axis=1), axis=2).sum(axis=1)
        rho = 4.0 * self.areas / perim
        return float(np.max(self.diameters / rho))

    def boundary_label_of_edges(self) -> np.ndarray:
        """Label per edge of :attr:`edges`, -1 on interior edges."""
        out = np.full(len(self.edges), -1, dtype=np.int64)
        key = _keys(np.sort(self.boundary_edges, axis=1), self.n_vertices)
        ekey = _keys(self.edges, self.n_vertices)
        idx = np.searchsorted(ekey, key)
        out[idx] = self.boundary_labels
        return out

    # ------------------------------------------------------------------
    def check(self, one_boundary_edge: bool = True) -> None:
        """Raise :class:`MeshError` when a mesh invariant is violated."""
        if np.any(self.areas <= 0):
            raise MeshError("triangle with non-positive orientation")
        edges, _, edge_tris = self._edge_data
        bnd = edge_tris[:, 1] < 0
        if bnd.sum() != len(self.boundary_edges):
            raise MeshError("boundary edge list does not match mesh topology")
        if np.any(self.boundary_label_of_edges()[bnd] < 0):
            raise MeshError("unlabeled boundary edge")
        if not np.any(self.boundary_labels == BoundaryLabel.TRANSMISSION):
            raise MeshError("transmission boundary is empty")
        if one_boundary_edge:
            per_tri = np.bincount(edge_tris[bnd, 0], minlength=self.n_triangles)
            if per_tri.max() > 1:
                raise MeshError("triangle with more than one boundary edge")
        # hanging nodes: a vertex lying in the interior of a boundary-free edge
        n_used = len(np.unique(self.triangles))
        euler = n_used - len(edges) + self.n_triangles
        if euler > 1:
            raise MeshError("mesh is not connected")

    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.edges) + self.n_triangles

    def edge_patches(self) -> EdgeGeometry:
        return edge_patches(self)

    # ------------------------------------------------------------------
    def to_text(self) -> str:
        lines = [f"vertices {self.n_vertices}"]
        lines += [f"{float(x)!r} {float(y)!r}" for x, y in self.vertices]
        lines.append(f"triangles {self.n_triangles}")
        lines += [f"{a} {b} {c}" for a, b, c in self.triangles]
        lines.append(f"boundary {len(self.boundary_edges)}")
        lines += [f"{a} {b} {_LABEL_CHAR[BoundaryLabel(l)]}"
                  for (a, b), l in zip(self.boundary_edges, self.boundary_labels)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Mesh":
        rows = []
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                rows.append(line.split())
        pos = 0

        def section(name):
            nonlocal pos
            if pos >= len(rows) or rows[pos][0] != name or len(rows[pos]) != 2:
                raise MeshError(f"expected '{name} <count>' in record {pos + 1}")
            count = int(rows[pos][1])
            body = rows[pos + 1: pos + 1 + count]
            if len(body) != count:
                raise MeshError(f"section '{name}' is truncated")
            pos += 1 + count
            return body

        verts = np.array([[float(x), float(y)] for x, y in section("vertices")], dtype=float)
        tris = np.array([[int(v) for v in r] for r in section("triangles")], dtype=np.int64)
        body = section("boundary")
        bedges = np.array([[int(r[0]), int(r[1])] for r in body], dtype=np.int64).reshape(-1, 2)
        try:
            labels = np.array([_CHAR_LABEL[r[2]] for r in body], dtype=np.int64)
        except KeyError as exc:
            raise MeshError(f"unknown boundary label {exc}") from None
        return cls(verts.reshape(-1, 2), tris.reshape(-1, 3), bedges, labels)

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())

    @classmethod
    def read(cls, path) -> "Mesh":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())


def _keys(pairs: np.ndarray, n: int) -> np.ndarray:
    pairs = np.asarray(pairs, dtype=np.int64)
    return pairs[:, 0] * (n + 1) + pairs[:, 1]


def _boundary_edges_of(tris: np.ndarray) -> np.ndarray:
    local = np.stack([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]], axis=1).reshape(-1, 2)
    srt = np.sort(local, axis=1)
    _, inverse, counts = np.unique(srt, axis=0, return_inverse=True, return_counts=True)
    return local[counts[inverse.reshape(-1)] == 1]


def edge_patches(mesh: Mesh) -> EdgeGeometry:
    edges, tri_edges, edge_tris = mesh._edge_data
    v = mesh.vertices
    t = mesh.triangles
    # orient each edge as it appears counter-clockwise in its first triangle
    first = edge_tris[:, 0]
    a = np.empty(len(edges), dtype=np.int64)
    b = np.empty(len(edges), dtype=np.int64)
    for i in range(3):
        sel = tri_edges[first, i] == np.arange(len(edges))
        a[sel] = t[first[sel], i]
        b[sel] = t[first[sel], (i + 1) % 3]
    d = v[b] - v[a]
    length = np.hypot(d[:, 0], d[:, 1])
    normal = np.stack([d[:, 1], -d[:, 0]], axis=1) / length[:, None]
    mid = 0.5 * (v[a] + v[b])
    return EdgeGeometry(edges=edges, length=length, normal=normal, midpoint=mid,
                        triangles=edge_tris)


# ----------------------------------------------------------------------
# refinement

def bisect(mesh: Mesh, marked) -> Mesh:
    """Newest-vertex bisection of the marked triangles plus conforming closure."""
    marked = np.unique(np.asarray(list(marked) if not isinstance(marked, np.ndarray) else marked,
                                  dtype=np.int64))
    if marked.size == 0:
        return mesh
    if marked.min() < 0 or marked.max() >= mesh.n_triangles:
        raise IndexError("marked triangle index out of range")
    edges, tri_edges, _ = mesh._edge_data
    refine = np.zeros(len(edges), dtype=bool)
    refine[tri_edges[marked, 0]] = True
    while True:
        has = refine[tri_edges].any(axis=1)
        new = has & ~refine[tri_edges[:, 0]]
        if not new.any():
            break
        refine[tri_edges[new, 0]] = True

    n = mesh.n_vertices
    split = np.flatnonzero(refine)
    mid_index = np.full(len(edges), -1, dtype=np.int64)
    mid_index[split] = n + np.arange(len(split))
    new_vertices = np.vstack([mesh.vertices,
                              0.5 * (mesh.vertices[edges[split, 0]] + mesh.vertices[edges[split, 1]])])
    parents = np.vstack([mesh.vertex_parents, edges[split]])
    n_all = len(new_vertices)
    ekey = _keys(edges, n_all)

    def midpoint_of(a, b):
        key = _keys(np.sort(np.stack([a, b], axis=1), axis=1), n_all)
        pos = np.searchsorted(ekey, key)
        pos = np.minimum(pos, len(ekey) - 1)
        hit = ekey[pos] == key
        out = np.full(len(a), -1, dtype=np.int64)
        out[hit] = mid_index[pos[hit]]
        return out

    tris = mesh.triangles.copy()
    origin = np.arange(mesh.n_triangles)
    gen = mesh.generation.copy()
    while True:
        m = midpoint_of(tris[:, 0], tris[:, 1])
        cut = m >= 0
        if not cut.any():
            break
        a, b, c = tris[cut, 0], tris[cut, 1], tris[cut, 2]
        mm = m[cut]
        left = np.stack([c, a, mm], axis=1)
        right = np.stack([b, c, mm], axis=1)
        # interleave children to keep ordering local and deterministic
        kids = np.empty((2 * len(a), 3), dtype=np.int64)
        kids[0::2] = left
        kids[1::2] = right
        keep = ~cut
        order_src = np.concatenate([np.flatnonzero(keep), np.repeat(np.flatnonzero(cut), 2)])
        new_tris = np.concatenate([tris[keep], kids])
        new_origin = np.concatenate([origin[keep], np.repeat(origin[cut], 2)])
        new_gen = np.concatenate([gen[keep], np.repeat(gen[cut] + 1, 2)])
        perm = np.argsort(order_src, kind="stable")
        tris, origin, gen = new_tris[perm], new_origin[perm], new_gen[perm]

    # boundary edges, in order, split where refined
    bnew, lnew = [], []
    bmid = midpoint_of(mesh.boundary_edges[:, 0], mesh.boundary_edges[:, 1])
    for (a, b), lab, m in zip(mesh.boundary_edges, mesh.boundary_labels, bmid):
        if m >= 0:
            bnew += [(a, m), (m, b)]
            lnew += [lab, lab]
        else:
            bnew.append((a, b))
            lnew.append(lab)
    return Mesh(new_vertices, tris, np.array(bnew), np.array(lnew), parents, origin, gen)


def refine_uniform(mesh: Mesh, rounds: int = 2) -> Mesh:
    """Bisect every triangle ``rounds`` times (two rounds halve ``h``)."""
    out = mesh
    origin = np.arange(mesh.n_triangles)
    for _ in range(rounds):
        out = bisect(out, np.arange(out.n_triangles))
        origin = origin[out.triangle_parent]
    return Mesh(out.vertices, out.triangles, out.boundary_edges, out.boundary_labels,
                out.vertex_parents, origin, out.generation)


def prolongate(mesh: Mesh, values: np.ndarray) -> np.ndarray:
    """Interpolate nodal values from the parent mesh of ``mesh``.

    ``values`` holds the parent's nodal values; new vertices get the mean of
    their two parents.  Works across several refinement rounds because parents
    always precede their children.
    """
    out = np.empty(mesh.n_vertices, dtype=float)
    n_old = len(values)
    out[:n_old] = values
    par = mesh.vertex_parents
    for i in range(n_old, mesh.n_vertices):
        out[i] = 0.5 * (out[par[i, 0]] + out[par[i, 1]])
    return out


# ----------------------------------------------------------------------
# geometry and generation

@dataclass(frozen=True)
class Polygon:
    """Simple polygon; side ``i`` runs from vertex ``i`` to vertex ``i+1``."""

    vertices: tuple

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)

    @property
    def n_sides(self) -> int:
        return len(self.vertices)

    def signed_area(self) -> float:
        p = self.array
        q = np.roll(p, -1, axis=0)
        return 0.5 * float(np.sum(p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]))

    def perimeter(self) -> float:
        p = self.array
        return float(np.sum(np.linalg.norm(np.roll(p, -1, axis=0) - p, axis=1)))


UNIT_SQUARE = Polygon(((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)))
L_SHAPE = Polygon(((-1.0, -1.0), (0.0, -1.0), (0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (-1.0, 1.0)))

NAMED_GEOMETRIES = {"unit_square": UNIT_SQUARE, "l_shape": L_SHAPE}


def _normalize_labels(poly: Polygon, labels) -> list:
    out = [BoundaryLabel.TRANSMISSION] * poly.n_sides
    if labels is None:
        return out
    items = labels.items() if isinstance(labels, Mapping) else enumerate(labels)
    for side, lab in items:
        side = int(side)
        if not 0 <= side < poly.n_sides:
            raise MeshError(f"label for nonexistent side {side}")
        if isinstance(lab, str):
            lab = _CHAR_LABEL[lab[0].upper()]
        out[side] = BoundaryLabel(lab)
    return out


def generate_initial_mesh(geometry, labels=None, h0: float = 0.5) -> Mesh:
    """Mesh a simple polygon with ``max h_K <= h0``.

    ``geometry`` is a :class:`Polygon`, a name in :data:`NAMED_GEOMETRIES` or
    a vertex sequence.  ``labels`` maps side indices to boundary labels
    (default: transmission everywhere).  Axis-parallel polygons on a common
    grid get a structured criss-cross mesh; other polygons are ear-clipped,
    split at the barycenters and bisected uniformly.
    """
    if isinstance(geometry, str):
        try:
            geometry = NAMED_GEOMETRIES[geometry]
        except KeyError:
            raise MeshError(f"unknown geometry '{geometry}'") from None
    if not isinstance(geometry, Polygon):
        geometry = Polygon(tuple(tuple(map(float, v)) for v in geometry))
    if h0 <= 0:
        raise MeshError("h0 must be positive")
    if geometry.n_sides < 3 or not LinearRing(geometry.array).is_simple:
        raise MeshError("polygon is not simple")
    side_labels = _normalize_labels(geometry, labels)
    if BoundaryLabel.TRANSMISSION not in side_labels:
        raise MeshError("transmission boundary is empty")
    if geometry.signed_area() < 0:
        n = geometry.n_sides
        geometry = Polygon(tuple(reversed(geometry.vertices)))
        # reversed side j joins old vertices n-1-j and n-2-j, i.e. old side n-2-j
        side_labels = [side_labels[(n - 2 - j) % n] for j in range(n)]

    grid = _grid_spacing(geometry)
    if grid is not None:
        mesh = _crisscross(geometry, grid, h0)
    else:
        mesh = _earclip_mesh(geometry, h0)
    labels_arr = _label_boundary(mesh, geometry, side_labels)
    mesh = Mesh(mesh.vertices, mesh.triangles, mesh.boundary_edges, labels_arr)
    mesh.check()
    return mesh


def _grid_spacing(poly: Polygon):
    p = poly.array
    q = np.roll(p, -1, axis=0)
    if not np.all((p[:, 0] == q[:, 0]) | (p[:, 1] == q[:, 1])):
        return None
    coords = np.concatenate([p[:, 0] - p[:, 0].min(), p[:, 1] - p[:, 1].min()])
    fr = [Fraction(float(c)).limit_denominator(10 ** 6) for c in coords]
    if any(abs(float(f) - c) > 1e-12 for f, c in zip(fr, coords)):
        return None
    den = math.lcm(*[f.denominator for f in fr])
    ints = [int(f * den) for f in fr]
    g = math.gcd(*ints)
    return Fraction(g, den)


def _crisscross(poly: Polygon, unit: Fraction, h0: float) -> Mesh:
    k = max(1, math.ceil(float(unit) / h0))
    s = float(unit) / k
    p = poly.array
    x0, y0 = p.min(axis=0)
    nx = int(round((p[:, 0].max() - x0) / s))
    ny = int(round((p[:, 1].max() - y0) / s))
    ring = _point_in_polygon
    verts: list = []
    index: dict = {}

    def vid(key, xy):
        if key not in index:
            index[key] = len(verts)
            verts.append(xy)
        return index[key]

    tris = []
    for j in range(ny):
        for i in range(nx):
            cx, cy = x0 + (i + 0.5) * s, y0 + (j + 0.5) * s
            if not ring(p, cx, cy):
                continue
            c = [vid(("g", i + di, j + dj), (x0 + (i + di) * s, y0 + (j + dj) * s))
                 for di, dj in ((0, 0), (1, 0), (1, 1), (0, 1))]
            m = vid(("c", i, j), (cx, cy))
            for q in range(4):
                tris.append((c[q], c[(q + 1) % 4], m))
    tris = np.array(tris, dtype=np.int64)
    bedges = _boundary_edges_of(tris)
    return Mesh(np.array(verts), tris, bedges, np.zeros(len(bedges)))


def _point_in_polygon(p: np.ndarray, x: float, y: float) -> bool:
    inside = False
    n = len(p)
    for i in range(n):
        (x1, y1), (x2, y2) = p[i], p[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if xc > x:
                inside = not inside
    return inside


def _earclip(p: np.ndarray) -> list:
    idx = list(range(len(p)))
    out = []

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    while len(idx) > 3:
        best = None
        for k in range(len(idx)):
            i0, i1, i2 = idx[k - 1], idx[k], idx[(k + 1) % len(idx)]
            a, b, c = p[i0], p[i1], p[i2]
            if cross(a, b, c) <= 1e-14:
                continue
            if any(cross(a, b, p[j]) >= 0 and cross(b, c, p[j]) >= 0 and cross(c, a, p[j]) >= 0
                   for j in idx if j not in (i0, i1, i2)):
                continue
            # prefer the ear with the best minimum angle
            lens = sorted([np.linalg.norm(b - a), np.linalg.norm(c - b), np.linalg.norm(a - c)])
            quality = cross(a, b, c) / lens[2] ** 2
            if best is None or quality > best[0]:
                best = (quality, k)
        if best is None:
            raise MeshError("ear clipping failed; polygon degenerate")
        k = best[1]
        out.append((idx[k - 1], idx[k], idx[(k + 1) % len(idx)]))
        del idx[k]
    out.append(tuple(idx))
    return out


def _earclip_mesh(poly: Polygon, h0: float) -> Mesh:
    p = poly.array
    ears = _earclip(p)
    verts = [tuple(v) for v in p]
    tris = []
    for a, b, c in ears:
        g = len(verts)
        verts.append(tuple((p[a] + p[b] + p[c]) / 3.0))
        tris += [(a, b, g), (b, c, g), (c, a, g)]
    tris = np.array(tris, dtype=np.int64)
    bedges = _boundary_edges_of(tris)
    mesh = Mesh(np.array(verts), tris, bedges, np.zeros(len(bedges)))
    while mesh.h > h0:
        mesh = bisect(mesh, np.arange(mesh.n_triangles))
    return mesh


def _label_boundary(mesh: Mesh, poly: Polygon, side_labels) -> np.ndarray:
    p = poly.array
    q = np.roll(p, -1, axis=0)
    v = mesh.vertices
    mids = 0.5 * (v[mesh.boundary_edges[:, 0]] + v[mesh.boundary_edges[:, 1]])
    labels = np.empty(len(mids), dtype=np.int64)
    for k, m in enumerate(mids):
        d = q - p
        t = np.clip(np.einsum("ij,ij->i", m - p, d) / np.einsum("ij,ij->i", d, d), 0.0, 1.0)
        dist = np.linalg.norm(p + t[:, None] * d - m, axis=1)
        labels[k] = side_labels[int(np.argmin(dist))]
    return labels


def polygon_of(mesh: Mesh) -> np.ndarray:
    """Boundary vertex indices of a simply connected mesh in traversal order."""
    nxt = {int(a): int(b) for a, b in mesh.boundary_edges}
    start = int(mesh.boundary_edges[0, 0])
    loop = [start]
    cur = nxt[start]
    while cur != start:
        loop.append(cur)
        cur = nxt[cur]
        if len(loop) > len(nxt):
            raise MeshError("boundary is not a single closed curve")
    if len(loop) != len(nxt):
        raise MeshError("boundary has several components")
    return np.array(loop, dtype=np.int64)
