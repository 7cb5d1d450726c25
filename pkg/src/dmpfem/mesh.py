"""Interval and quadrilateral meshes, bilinear element maps, DOF numbering and refinement.

Quadrilateral vertices are stored counter-clockwise, matching the master
element corners ``(-1,-1), (1,-1), (1,1), (-1,1)``. Local edge ``e`` runs from
vertex ``e`` to vertex ``(e + 1) % 4``. In 1D, local "edge" 0 is the left end
point and 1 the right one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .basis import gll_nodes, tensor_points
from .errors import ComputationError, InvalidArgumentError, MeshError
from .quadrature import gauss_rule

DIRICHLET = "dirichlet"
NEUMANN = "neumann"

# 64-bit LCG used for jitter, fixed so other implementations can reproduce meshes
LCG_MULTIPLIER = 6364136223846793005
LCG_INCREMENT = 1442695040888963407
_MASK64 = (1 << 64) - 1


class BoundaryEdge(NamedTuple):
    element: int
    local: int
    kind: str = DIRICHLET
    region: str = "outer"


@dataclass(frozen=True, eq=False)
class Mesh:
    dim: int
    vertices: np.ndarray
    elements: np.ndarray
    boundary: tuple[BoundaryEdge, ...]
    meta: dict = field(default_factory=dict)
    parent: "Mesh | None" = None

    def __post_init__(self):
        self.vertices.setflags(write=False)
        self.elements.setflags(write=False)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def describe(self) -> dict:
        return {**self.meta, "n_elements": self.n_elements, "n_vertices": self.n_vertices}

    def with_boundary_kind(self, kind: str, region: str | None = None, predicate=None) -> "Mesh":
        """Copy of the mesh with selected boundary edges re-tagged.

        ``predicate`` receives the two end points of an edge (in 1D, one point).
        """
        edges = []
        for b in self.boundary:
            hit = region is None or b.region == region
            if hit and predicate is not None:
                hit = bool(predicate(*edge_endpoints(self, b)))
            edges.append(b._replace(kind=kind) if hit else b)
        return Mesh(self.dim, self.vertices.copy(), self.elements.copy(), tuple(edges),
                    dict(self.meta), self.parent)


def _corner_nodes_2d(m: int) -> list[int]:
    return [0, m, m + (m + 1) * m, (m + 1) * m]


def local_edge_nodes(dim: int, order: int, local: int) -> list[int]:
    """Local node indices on a local edge, in counter-clockwise traversal order."""
    m = order
    if dim == 1:
        return [0] if local == 0 else [m]
    if local == 0:
        return [j for j in range(m + 1)]
    if local == 1:
        return [m + k * (m + 1) for k in range(m + 1)]
    if local == 2:
        return [j + m * (m + 1) for j in range(m, -1, -1)]
    if local == 3:
        return [k * (m + 1) for k in range(m, -1, -1)]
    raise InvalidArgumentError(f"invalid local edge {local}")


def edge_endpoints(mesh: Mesh, b: BoundaryEdge) -> tuple[np.ndarray, ...]:
    verts = mesh.elements[b.element]
    if mesh.dim == 1:
        return (mesh.vertices[verts[b.local]],)
    return mesh.vertices[verts[b.local]], mesh.vertices[verts[(b.local + 1) % 4]]


class ElementMap:
    """Affine (1D) or bilinear (2D) map from the master element to one physical element."""

    def __init__(self, corners: np.ndarray, index: int = -1):
        self.corners = np.asarray(corners, dtype=float)
        self.index = index
        self.dim = self.corners.shape[1]

    def _shape(self, xi: np.ndarray):
        if self.dim == 1:
            s = xi[:, 0]
            n = np.stack([(1 - s) / 2, (1 + s) / 2], axis=-1)
            dn = np.broadcast_to(np.array([[-0.5], [0.5]]), (len(s), 2, 1))
            return n, dn
        s, t = xi[:, 0], xi[:, 1]
        n = 0.25 * np.stack([(1 - s) * (1 - t), (1 + s) * (1 - t), (1 + s) * (1 + t), (1 - s) * (1 + t)], axis=-1)
        ds = 0.25 * np.stack([-(1 - t), (1 - t), (1 + t), -(1 + t)], axis=-1)
        dt = 0.25 * np.stack([-(1 - s), -(1 + s), (1 + s), (1 - s)], axis=-1)
        return n, np.stack([ds, dt], axis=-1)

    def x(self, xi) -> np.ndarray:
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        n, _ = self._shape(xi)
        return n @ self.corners

    def jacobian(self, xi) -> np.ndarray:
        """``J[q, i, j] = dx_i / dxi_j`` at each point."""
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        _, dn = self._shape(xi)
        return np.einsum("ai,qaj->qij", self.corners, dn)

    def det(self, xi) -> np.ndarray:
        return np.linalg.det(self.jacobian(xi))

    def inv_t(self, xi) -> np.ndarray:
        return np.linalg.inv(self.jacobian(xi)).transpose(0, 2, 1)

    def geometry(self, xi) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Physical points, det J and J^{-T} in one pass; faults on inverted geometry."""
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        jac = self.jacobian(xi)
        det = np.linalg.det(jac)
        if np.any(det <= 0.0):
            q = int(np.argmin(det))
            raise MeshError(
                f"element {self.index}: non-positive det J = {det[q]:.3e} at xi = {xi[q].tolist()}"
            )
        return self.x(xi), det, np.linalg.inv(jac).transpose(0, 2, 1)


def element_map(mesh: Mesh, e: int) -> ElementMap:
    if not 0 <= e < mesh.n_elements:
        raise InvalidArgumentError(f"element index {e} out of range")
    return ElementMap(mesh.vertices[mesh.elements[e]], e)


def _numbering(mesh: Mesh, ref_1d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Global node ids per element and node coordinates for a C0 nodal layout.

    Vertices keep their ids, then edge-interior nodes (ordered from the lower
    to the higher vertex id of each edge), then element-interior nodes.
    """
    m = len(ref_1d) - 1
    ne = mesh.n_elements
    if mesh.dim == 1:
        ids = np.arange(ne)[:, None] * m + np.arange(m + 1)[None, :]
        coords = np.empty((ne * m + 1, 1))
        for e in range(ne):
            coords[ids[e]] = element_map(mesh, e).x(ref_1d[:, None])
        # end points exactly at the vertices
        coords[ids[:, 0]] = mesh.vertices[mesh.elements[:, 0]]
        coords[ids[:, -1]] = mesh.vertices[mesh.elements[:, 1]]
        return ids, coords

    n_loc = (m + 1) ** 2
    ref = tensor_points(ref_1d, 2)
    ids = np.full((ne, n_loc), -1, dtype=np.int64)
    coords = [v for v in mesh.vertices]
    edge_ids: dict[tuple[int, int], list[int]] = {}
    corners = _corner_nodes_2d(m)
    for e, verts in enumerate(mesh.elements):
        ids[e, corners] = verts
        phys = element_map(mesh, e).x(ref)
        for le in range(4):
            a, b = int(verts[le]), int(verts[(le + 1) % 4])
            loc = local_edge_nodes(2, m, le)[1:-1]
            key = (min(a, b), max(a, b))
            if key not in edge_ids:
                ordered = loc if a < b else loc[::-1]
                new = list(range(len(coords), len(coords) + len(ordered)))
                coords.extend(phys[ordered])
                edge_ids[key] = new
            glob = edge_ids[key] if a < b else edge_ids[key][::-1]
            ids[e, loc] = glob
        interior = [j + k * (m + 1) for k in range(1, m) for j in range(1, m)]
        ids[e, interior] = np.arange(len(coords), len(coords) + len(interior))
        coords.extend(phys[interior])
    return ids, np.array(coords).reshape(-1, 2)


@dataclass(frozen=True, eq=False)
class DofMap:
    """Per-element global node numbers for order-``p`` GLL nodes."""

    order: int
    element_dofs: np.ndarray
    coords: np.ndarray
    boundary_dofs: dict

    @property
    def n_dofs(self) -> int:
        return len(self.coords)

    @cached_property
    def dirichlet_dofs(self) -> dict[str, np.ndarray]:
        """Dirichlet node ids grouped by region; a node is listed once, first region wins."""
        seen: set[int] = set()
        out: dict[str, list[int]] = {}
        for (kind, region), dofs in self.boundary_dofs.items():
            if kind != DIRICHLET:
                continue
            fresh = [d for d in dofs if d not in seen]
            seen.update(fresh)
            out.setdefault(region, []).extend(fresh)
        return {r: np.array(sorted(v), dtype=np.int64) for r, v in out.items()}


def build_dofmap(mesh: Mesh, p: int) -> DofMap:
    if p < 1:
        raise InvalidArgumentError(f"order must be >= 1, got {p}")
    ids, coords = _numbering(mesh, gll_nodes(p).node_array)
    bnd: dict[tuple[str, str], dict[int, None]] = {}
    for b in mesh.boundary:
        loc = local_edge_nodes(mesh.dim, p, b.local)
        # dict keys keep first-seen order and drop the corner nodes shared by two edges
        bnd.setdefault((b.kind, b.region), {}).update(dict.fromkeys(int(d) for d in ids[b.element, loc]))
    ordered = dict(sorted(bnd.items(), key=lambda kv: (kv[0][0] != DIRICHLET, kv[0][1])))
    return DofMap(p, ids, coords, {k: np.array(list(v), dtype=np.int64) for k, v in ordered.items()})


# ---------------------------------------------------------------------------
# builders


def build_interval_mesh(a: float, b: float, ne: int) -> Mesh:
    if not a < b:
        raise InvalidArgumentError(f"interval needs a < b, got [{a}, {b}]")
    if ne < 1:
        raise InvalidArgumentError(f"need at least one element, got {ne}")
    verts = a + (b - a) * np.arange(ne + 1) / ne
    verts[-1] = b
    elems = np.stack([np.arange(ne), np.arange(1, ne + 1)], axis=-1)
    boundary = (BoundaryEdge(0, 0), BoundaryEdge(ne - 1, 1))
    return Mesh(1, verts[:, None], elems, boundary, {"kind": "interval", "a": a, "b": b, "ne": ne})


def _grid_mesh(xs: np.ndarray, ys: np.ndarray, keep) -> tuple[np.ndarray, np.ndarray, tuple]:
    nx, ny = len(xs) - 1, len(ys) - 1
    cells = [(i, j) for j in range(ny) for i in range(nx) if keep(i, j)]
    used = sorted({(i + di, j + dj) for i, j in cells for di in (0, 1) for dj in (0, 1)},
                  key=lambda ij: (ij[1], ij[0]))
    vid = {ij: n for n, ij in enumerate(used)}
    verts = np.array([[xs[i], ys[j]] for i, j in used])
    elems = np.array([[vid[(i, j)], vid[(i + 1, j)], vid[(i + 1, j + 1)], vid[(i, j + 1)]] for i, j in cells],
                     dtype=np.int64)
    return verts, elems, tuple(cells)


def _boundary_from_topology(elements: np.ndarray, region_of) -> tuple[BoundaryEdge, ...]:
    count: dict[tuple[int, int], int] = {}
    for verts in elements:
        for le in range(4):
            a, b = int(verts[le]), int(verts[(le + 1) % 4])
            key = (min(a, b), max(a, b))
            count[key] = count.get(key, 0) + 1
    edges = []
    for e, verts in enumerate(elements):
        for le in range(4):
            a, b = int(verts[le]), int(verts[(le + 1) % 4])
            if count[(min(a, b), max(a, b))] == 1:
                edges.append(BoundaryEdge(e, le, DIRICHLET, region_of(a, b)))
    return tuple(edges)


def build_rect_mesh(x0: float, y0: float, x1: float, y1: float, nx: int, ny: int) -> Mesh:
    if not (x0 < x1 and y0 < y1):
        raise InvalidArgumentError("degenerate rectangle extents")
    if nx < 1 or ny < 1:
        raise InvalidArgumentError("nx and ny must be >= 1")
    xs = x0 + (x1 - x0) * np.arange(nx + 1) / nx
    ys = y0 + (y1 - y0) * np.arange(ny + 1) / ny
    xs[-1], ys[-1] = x1, y1
    verts, elems, _ = _grid_mesh(xs, ys, lambda i, j: True)
    boundary = _boundary_from_topology(elems, lambda a, b: "outer")
    meta = {"kind": "rect", "x0": x0, "y0": y0, "x1": x1, "y1": y1, "nx": nx, "ny": ny}
    return Mesh(2, verts, elems, boundary, meta)


def build_hole_mesh(n: int) -> Mesh:
    """Unit square minus the open square (4/9, 5/9)^2, with ``9 n`` cells per side."""
    if n < 1:
        raise InvalidArgumentError(f"hole mesh needs n >= 1, got {n}")
    m = 9 * n
    xs = np.arange(m + 1) / m
    lo, hi = 4 * n, 5 * n
    verts, elems, _ = _grid_mesh(xs, xs, lambda i, j: not (lo <= i < hi and lo <= j < hi))

    def region(a, b):
        pa, pb = verts[a], verts[b]
        on_outer = any(
            (pa[k] == v and pb[k] == v) for k in (0, 1) for v in (0.0, 1.0)
        )
        return "outer" if on_outer else "inner"

    boundary = _boundary_from_topology(elems, region)
    return Mesh(2, verts, elems, boundary, {"kind": "hole", "n": n})


# ---------------------------------------------------------------------------
# jitter and refinement


def lcg_uniform(seed: int, count: int) -> np.ndarray:
    """``count`` draws in [0, 1) from the 64-bit LCG, top 53 bits of each state."""
    state = seed & _MASK64
    out = np.empty(count)
    for i in range(count):
        state = (LCG_MULTIPLIER * state + LCG_INCREMENT) & _MASK64
        out[i] = (state >> 11) / float(1 << 53)
    return out


def boundary_vertices(mesh: Mesh) -> set[int]:
    out: set[int] = set()
    for b in mesh.boundary:
        verts = mesh.elements[b.element]
        out.add(int(verts[b.local]))
        if mesh.dim == 2:
            out.add(int(verts[(b.local + 1) % 4]))
    return out


def min_jacobian(mesh: Mesh, ngp: int = 3) -> float:
    rule = gauss_rule(ngp)
    pts, _ = rule.tensor(mesh.dim)
    corners = tensor_points(np.array([-1.0, 1.0]), mesh.dim)
    xi = np.vstack([pts, corners])
    return float(min(element_map(mesh, e).det(xi).min() for e in range(mesh.n_elements)))


def jitter_mesh(mesh: Mesh, amplitude: float, seed: int) -> Mesh:
    """Displace interior vertices by up to ``amplitude`` times the local edge length."""
    if not 0.0 <= amplitude < 0.5:
        raise InvalidArgumentError(f"jitter amplitude must be in [0, 0.5), got {amplitude}")
    base = mesh.parent if mesh.meta.get("jitter") else mesh
    if amplitude == 0.0:
        return base
    fixed = boundary_vertices(base)
    h = np.full(base.n_vertices, np.inf)
    nv = base.elements.shape[1]
    for verts in base.elements:
        for k in range(nv if base.dim == 2 else 1):
            a, b = verts[k], verts[(k + 1) % nv]
            length = float(np.linalg.norm(base.vertices[a] - base.vertices[b]))
            h[a] = min(h[a], length)
            h[b] = min(h[b], length)
    movable = [v for v in range(base.n_vertices) if v not in fixed]
    draws = lcg_uniform(seed, base.dim * len(movable)).reshape(len(movable), base.dim)
    amp = amplitude
    for _ in range(6):
        verts = base.vertices.copy()
        for row, v in enumerate(movable):
            verts[v] += (2.0 * draws[row] - 1.0) * amp * h[v]
        meta = {**base.meta, "jitter": {"amplitude": amplitude, "seed": seed, "effective": amp}}
        out = Mesh(base.dim, verts, base.elements.copy(), base.boundary, meta, base)
        if min_jacobian(out) > 0.0:
            return out
        amp *= 0.5
    raise ComputationError(
        f"jitter could not keep Jacobians positive after 5 halvings (amplitude {amplitude})"
    )


def refine(mesh: Mesh, factor: int) -> Mesh:
    """Split each element ``factor`` ways per direction; jittered meshes are re-jittered."""
    if factor < 1:
        raise InvalidArgumentError(f"refinement factor must be >= 1, got {factor}")
    if factor == 1:
        return mesh
    jit = mesh.meta.get("jitter")
    if jit:
        return jitter_mesh(refine(mesh.parent, factor), jit["amplitude"], jit["seed"])
    f = factor
    ids, coords = _numbering(mesh, np.linspace(-1.0, 1.0, f + 1))
    if mesh.dim == 1:
        elems = np.array([[ids[e, a], ids[e, a + 1]] for e in range(mesh.n_elements) for a in range(f)])
        boundary = []
        for b in mesh.boundary:
            sub = b.element * f + (0 if b.local == 0 else f - 1)
            boundary.append(b._replace(element=sub))
    else:
        elems = []
        for e in range(mesh.n_elements):
            for bb in range(f):
                for a in range(f):
                    n0 = a + bb * (f + 1)
                    elems.append([ids[e, n0], ids[e, n0 + 1], ids[e, n0 + f + 2], ids[e, n0 + f + 1]])
        elems = np.array(elems, dtype=np.int64)
        boundary = []
        for b in mesh.boundary:
            for s in range(f):
                a, bb = {0: (s, 0), 1: (f - 1, s), 2: (f - 1 - s, f - 1), 3: (0, f - 1 - s)}[b.local]
                boundary.append(b._replace(element=b.element * f * f + a + bb * f))
    meta = dict(mesh.meta)
    meta["refined"] = meta.get("refined", 1) * f
    return Mesh(mesh.dim, coords, np.asarray(elems, dtype=np.int64), tuple(boundary), meta)


# ---------------------------------------------------------------------------
# text format: "dim ne nv", nv vertex lines, ne element lines, then boundary lines


def mesh_to_text(mesh: Mesh) -> str:
    """Text form: header ``dim ne nv``, vertex lines, element lines, boundary lines."""
    lines = [f"{mesh.dim} {mesh.n_elements} {mesh.n_vertices}"]
    lines += [" ".join(repr(float(c)) for c in v) for v in mesh.vertices]
    lines += [" ".join(str(int(i)) for i in el) for el in mesh.elements]
    lines += [f"{b.element} {b.local} {b.kind} {b.region}" for b in mesh.boundary]
    return "\n".join(lines) + "\n"


def mesh_from_text(text: str, source: str = "<text>") -> Mesh:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    try:
        dim, ne, nv = (int(v) for v in rows[0])
        verts = np.array([[float(c) for c in r] for r in rows[1 : 1 + nv]]).reshape(nv, dim)
        elems = np.array([[int(i) for i in r] for r in rows[1 + nv : 1 + nv + ne]], dtype=np.int64)
        boundary = tuple(
            BoundaryEdge(int(r[0]), int(r[1]), r[2], r[3] if len(r) > 3 else "outer")
            for r in rows[1 + nv + ne :]
        )
    except (ValueError, IndexError) as exc:
        raise InvalidArgumentError(f"malformed mesh file {source}: {exc}") from exc
    if elems.shape != (ne, 2 if dim == 1 else 4):
        raise InvalidArgumentError(f"malformed mesh file {source}: bad element block")
    return Mesh(dim, verts, elems, boundary, {"kind": "file", "path": source})


def write_mesh(mesh: Mesh, path) -> None:
    Path(path).write_text(mesh_to_text(mesh))


def read_mesh(path) -> Mesh:
    return mesh_from_text(Path(path).read_text(), str(path))


def element_size(mesh: Mesh) -> np.ndarray:
    """Characteristic size per element (sqrt of area in 2D, length in 1D)."""
    rule = gauss_rule(2)
    pts, wts = rule.tensor(mesh.dim)
    meas = np.array([float(element_map(mesh, e).det(pts) @ wts) for e in range(mesh.n_elements)])
    return meas if mesh.dim == 1 else np.sqrt(meas)


def domain_measure(mesh: Mesh) -> float:
    rule = gauss_rule(2)
    pts, wts = rule.tensor(mesh.dim)
    return math.fsum(float(element_map(mesh, e).det(pts) @ wts) for e in range(mesh.n_elements))
