"""Element and global systems for the Galerkin and least-squares formulations.

The least-squares element matrices are built from the two residual operators
(``alpha c + div q`` and ``q + D grad c``) evaluated at quadrature points, so
``K = sum_q w_q (beta^2 R1^T R1 + R2^T A^2 R2)``. The closed-form block
("Voigt") kernels are kept as an optimized path and are validated against it;
the residual-operator path is authoritative.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .basis import SpectralBasis, gll_nodes, tabulate_1d, tensor_tabulate
from .errors import DegenerateCoefficientError, InternalError, InvalidArgumentError
from .mesh import DIRICHLET, NEUMANN, BoundaryEdge, DofMap, ElementMap, Mesh, build_dofmap, element_map
from .problem import BoundaryData, CoefficientField, d_inv_sqrt
from .quadrature import QuadratureRule, check_full_integration, gauss_rule

log = logging.getLogger(__name__)

KINDS = ("galerkin", "ls1", "ls2")
VOIGT_TOL = 1e-10
_CHUNK = 64
# sub-cells per axis for the load integral on non-rectangular elements cut by a forcing jump
LOAD_SUBCELLS = 8


@dataclass(frozen=True)
class Formulation:
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"unknown formulation '{self.kind}'")

    @property
    def least_squares(self) -> bool:
        return self.kind != "galerkin"

    def n_fields(self, dim: int) -> int:
        return 1 + dim if self.least_squares else 1

    def weights(self, alpha: np.ndarray, d: np.ndarray, points: np.ndarray | None = None):
        """Pointwise ``A^2`` tensors and ``beta^2`` scalars of the least-squares functional."""
        npts, dim = d.shape[0], d.shape[-1]
        if self.kind == "ls1":
            return np.broadcast_to(np.eye(dim), (npts, dim, dim)), np.ones(npts)
        if self.kind != "ls2":
            raise InvalidArgumentError("Galerkin formulation has no least-squares weights")
        try:
            a = d_inv_sqrt(d)
        except DegenerateCoefficientError:
            lam = np.linalg.eigvalsh(d)[:, 0]
            q = int(np.argmin(lam))
            where = None if points is None else points[q].tolist()
            raise DegenerateCoefficientError(
                f"LS2 weight undefined: D is singular (min eigenvalue {lam[q]:.3e}) at x = {where}", where
            ) from None
        beta2 = np.ones(npts)
        pos = alpha != 0.0
        beta2[pos] = 1.0 / alpha[pos]
        return a @ a, beta2


def as_formulation(form) -> Formulation:
    if isinstance(form, Formulation):
        return form
    name = str(form).lower()
    aliases = {"single-field": "galerkin", "single_field": "galerkin", "galerkin": "galerkin",
               "ls1": "ls1", "ls2": "ls2"}
    if name not in aliases:
        raise InvalidArgumentError(f"unknown formulation '{form}'")
    return Formulation(aliases[name])


@dataclass(frozen=True, eq=False)
class ElementSystem:
    matrix: np.ndarray
    vector: np.ndarray
    fields: tuple[str, ...]


@lru_cache(maxsize=64)
def _tabulation(p: int, ngp: int, dim: int):
    basis = gll_nodes(p).with_dim(dim)
    rule = gauss_rule(ngp)
    pts, wts = rule.tensor(dim)
    values, dref = tensor_tabulate(basis, [rule.point_array] * dim)
    for arr in (values, dref, pts, wts):
        arr.setflags(write=False)
    return values, dref, pts, wts


@dataclass(frozen=True, eq=False)
class ElementData:
    """Quadrature-point data of one element: physical points, weights, basis values and gradients."""

    x: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    grads: np.ndarray


def element_data(emap: ElementMap, basis: SpectralBasis, rule: QuadratureRule) -> ElementData:
    check_full_integration(basis.order, rule)
    values, dref, pts, wts = _tabulation(basis.order, rule.count, emap.dim)
    x, det, inv_t = emap.geometry(pts)
    grads = np.einsum("qab,qnb->qna", inv_t, dref)
    return ElementData(x, wts * det, values, grads)


def _axis_aligned(corners: np.ndarray) -> bool:
    if corners.shape[1] == 1:
        return True
    x0, y0 = corners[0]
    x1, y1 = corners[2]
    ref = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    return bool(np.allclose(corners, ref, rtol=0.0, atol=1e-14 * max(1.0, np.abs(ref).max())))


def _composite_1d(cuts: np.ndarray, rule: QuadratureRule) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = cuts[:-1, None], cuts[1:, None]
    pts = 0.5 * (lo + hi) + 0.5 * (hi - lo) * rule.point_array[None, :]
    wts = 0.5 * (hi - lo) * rule.weight_array[None, :]
    return pts.ravel(), wts.ravel()


def load_data(emap: ElementMap, coeff: CoefficientField, basis: SpectralBasis,
              rule: QuadratureRule, ed: ElementData | None = None) -> ElementData:
    """Quadrature data for the load integral.

    Where the forcing jumps inside the element the rule is applied piecewise: on
    axis-aligned elements the pieces are cut exactly at the jump lines, elsewhere
    the element is split into ``LOAD_SUBCELLS`` sub-cells per axis.
    """
    if ed is None:
        ed = element_data(emap, basis, rule)
    breaks = coeff.forcing_breaks
    if breaks is None:
        return ed
    corners = emap.corners
    lo, hi = corners.min(axis=0), corners.max(axis=0)
    cut = False
    axes = []
    aligned = _axis_aligned(corners)
    for a in range(emap.dim):
        inside = [b for b in breaks[a] if lo[a] < b < hi[a]]
        cut = cut or bool(inside)
        if aligned:
            xi = [2.0 * (b - lo[a]) / (hi[a] - lo[a]) - 1.0 for b in inside]
            axes.append(np.unique(np.concatenate([[-1.0, 1.0], xi])))
        else:
            axes.append(np.linspace(-1.0, 1.0, LOAD_SUBCELLS + 1))
    if not cut:
        return ed
    per_axis = [_composite_1d(c, rule) for c in axes]
    pts_1d = [p for p, _ in per_axis]
    values, dref = tensor_tabulate(basis.with_dim(emap.dim), pts_1d)
    grids = np.meshgrid(*pts_1d, indexing="ij")
    xi = np.stack([g.ravel(order="F") for g in grids], axis=-1)
    wgrid = np.meshgrid(*[w for _, w in per_axis], indexing="ij")
    wts = np.prod([g.ravel(order="F") for g in wgrid], axis=0)
    x, det, inv_t = emap.geometry(xi)
    grads = np.einsum("qab,qnb->qna", inv_t, dref)
    return ElementData(x, wts * det, values, grads)


def _fields(dim: int, least_squares: bool) -> tuple[str, ...]:
    if not least_squares:
        return ("c",)
    return ("c",) + (("q",) if dim == 1 else ("qx", "qy", "qz")[:dim])


def element_galerkin(emap: ElementMap, coeff: CoefficientField, basis: SpectralBasis,
                     rule: QuadratureRule) -> ElementSystem:
    ed = element_data(emap, basis, rule)
    alpha, d = coeff.alpha(ed.x), coeff.diffusivity(ed.x)
    n, g, w = ed.values, ed.grads, ed.weights
    dg = np.einsum("qab,qnb->qna", d, g)
    nl = n.shape[1]
    gw = (g * w[:, None, None]).transpose(1, 0, 2).reshape(nl, -1)
    k = (n * (w * alpha)[:, None]).T @ n + gw @ dg.transpose(1, 0, 2).reshape(nl, -1).T
    k = 0.5 * (k + k.T)
    ld = load_data(emap, coeff, basis, rule, ed)
    return ElementSystem(k, ld.values.T @ (ld.weights * coeff.forcing(ld.x)), ("c",))


def _ls_operators(ed: ElementData, alpha: np.ndarray, d: np.ndarray):
    n, g = ed.values, ed.grads
    nq, nl, dim = g.shape
    r1 = np.concatenate([alpha[:, None] * n] + [g[:, :, a] for a in range(dim)], axis=1)
    dg = np.einsum("qab,qnb->qna", d, g)
    r2 = np.zeros((nq, dim, (1 + dim) * nl))
    for a in range(dim):
        r2[:, a, :nl] = dg[:, :, a]
        r2[:, a, (1 + a) * nl : (2 + a) * nl] = n
    return r1, r2


def element_ls(emap: ElementMap, coeff: CoefficientField, basis: SpectralBasis, rule: QuadratureRule,
               form) -> ElementSystem:
    form = as_formulation(form)
    if not form.least_squares:
        raise InvalidArgumentError("element_ls needs an LS1 or LS2 formulation")
    ed = element_data(emap, basis, rule)
    alpha, d = coeff.alpha(ed.x), coeff.diffusivity(ed.x)
    a2, beta2 = form.weights(alpha, d, ed.x)
    r1, r2 = _ls_operators(ed, alpha, d)
    wb = ed.weights * beta2
    k = (r1 * wb[:, None]).T @ r1
    ar2 = np.einsum("qab,qbk->qak", a2, r2)
    m = r2.shape[-1]
    k += (r2 * ed.weights[:, None, None]).reshape(-1, m).T @ ar2.reshape(-1, m)
    k = 0.5 * (k + k.T)
    ld = load_data(emap, coeff, basis, rule, ed)
    if ld is not ed:
        alpha, d = coeff.alpha(ld.x), coeff.diffusivity(ld.x)
        _, beta2 = form.weights(alpha, d, ld.x)
        r1, _ = _ls_operators(ld, alpha, d)
    return ElementSystem(k, r1.T @ (ld.weights * beta2 * coeff.forcing(ld.x)), _fields(emap.dim, True))


def _voigt_products(ed: ElementData):
    n, gx, gy, w = ed.values, ed.grads[:, :, 0], ed.grads[:, :, 1], ed.weights
    shapes = {"0": n, "1": gx, "2": gy}

    def s(pair: str, coef=1.0):
        a, b = shapes[pair[0]], shapes[pair[1]]
        return (a * (w * coef)[:, None]).T @ b

    return s


def _voigt_force(emap: ElementMap, coeff: CoefficientField, basis: SpectralBasis,
                 rule: QuadratureRule, ed: ElementData):
    ed = load_data(emap, coeff, basis, rule, ed)
    alpha, f = coeff.alpha(ed.x), coeff.forcing(ed.x)
    n, g, w = ed.values, ed.grads, ed.weights
    return np.concatenate([n.T @ (w * alpha * f), g[:, :, 0].T @ (w * f), g[:, :, 1].T @ (w * f)])


def _blocks(k11, k12, k13, k22, k23, k33):
    return np.block([[k11, k12, k13], [k12.T, k22, k23], [k13.T, k23.T, k33]])


def element_ls1_voigt(emap: ElementMap, coeff: CoefficientField, basis: SpectralBasis,
                      rule: QuadratureRule) -> ElementSystem:
    """LS1 element matrix from the closed-form block expressions (2D only)."""
    if emap.dim != 2:
        raise InvalidArgumentError("closed-form block kernels are 2D only")
    ed = element_data(emap, basis, rule)
    alpha, d = coeff.alpha(ed.x), coeff.diffusivity(ed.x)
    dxx, dxy, dyy = d[:, 0, 0], d[:, 0, 1], d[:, 1, 1]
    dt = dxy * (dxx + dyy)
    s = _voigt_products(ed)
    k11 = s("00", alpha**2) + s("11", dxy**2 + dxx**2) + s("22", dxy**2 + dyy**2) + s("12", dt) + s("21", dt)
    k12 = s("01", alpha) + s("10", dxx) + s("20", dxy)
    k13 = s("02", alpha) + s("10", dxy) + s("20", dyy)
    k22 = s("00") + s("11")
    k23 = s("12")
    k33 = s("00") + s("22")
    k = _blocks(k11, k12, k13, k22, k23, k33)
    return ElementSystem(0.5 * (k + k.T), _voigt_force(emap, coeff, basis, rule, ed), ("c", "qx", "qy"))


def _inverse_entries(d: np.ndarray, x: np.ndarray):
    det = d[:, 0, 0] * d[:, 1, 1] - d[:, 0, 1] ** 2
    if np.any(det <= 0.0):
        q = int(np.argmin(det))
        raise DegenerateCoefficientError(f"D is singular at x = {x[q].tolist()}", x[q].tolist())
    return d[:, 1, 1] / det, -d[:, 0, 1] / det, d[:, 0, 0] / det


def element_ls2_voigt(emap: ElementMap, coeff: CoefficientField, basis: SpectralBasis,
                      rule: QuadratureRule) -> ElementSystem:
    """LS2 closed-form blocks; ``D^{-1}_{xy}`` is the (x, y) entry of the inverse tensor.

    The block expressions carry no ``beta^2`` factor, so they match the
    residual-operator path only where ``alpha = 0``.
    """
    if emap.dim != 2:
        raise InvalidArgumentError("closed-form block kernels are 2D only")
    ed = element_data(emap, basis, rule)
    alpha, d = coeff.alpha(ed.x), coeff.diffusivity(ed.x)
    ixx, ixy, iyy = _inverse_entries(d, ed.x)
    s = _voigt_products(ed)
    k11 = s("00", alpha**2) + s("11", d[:, 0, 0]) + s("22", d[:, 1, 1]) + s("12", d[:, 0, 1]) + s("21", d[:, 0, 1])
    k12 = s("01", alpha) + s("10")
    k13 = s("02", alpha) + s("20")
    k22 = s("11") + s("00", ixx)
    k23 = s("12") + s("00", ixy)
    k33 = s("22") + s("00", iyy)
    k = _blocks(k11, k12, k13, k22, k23, k33)
    return ElementSystem(0.5 * (k + k.T), _voigt_force(emap, coeff, basis, rule, ed), ("c", "qx", "qy"))


def voigt_discrepancy(emap: ElementMap, coeff: CoefficientField, basis: SpectralBasis,
                      rule: QuadratureRule, kind: str, tol: float = VOIGT_TOL) -> float:
    """Max entrywise matrix gap between the closed-form and residual-operator kernels.

    Gaps at or above ``tol`` are logged; the residual-operator result stays authoritative.
    """
    fast = (element_ls1_voigt if kind == "ls1" else element_ls2_voigt)(emap, coeff, basis, rule)
    ref = element_ls(emap, coeff, basis, rule, kind)
    gap = float(np.max(np.abs(fast.matrix - ref.matrix)))
    if gap >= tol:
        log.warning("closed-form %s kernel differs from residual-operator kernel by %.3e "
                    "on element %d; using the residual-operator result", kind, gap, emap.index)
    return gap


# ---------------------------------------------------------------------------
# boundary quadrature


def boundary_quadrature(mesh: Mesh, edge: BoundaryEdge, basis: SpectralBasis, rule: QuadratureRule):
    """Points, full element basis values, outward normals and line weights on one boundary edge."""
    emap = element_map(mesh, edge.element)
    b = basis.with_dim(mesh.dim)
    if mesh.dim == 1:
        xi = np.array([[-1.0 if edge.local == 0 else 1.0]])
        vals, _ = tabulate_1d(b, xi[:, 0])
        normal = np.array([[-1.0 if edge.local == 0 else 1.0]])
        return emap.x(xi), vals, normal, np.ones(1)
    g = rule.point_array
    fixed = {0: (None, -1.0), 1: (1.0, None), 2: (None, 1.0), 3: (-1.0, None)}[edge.local]
    axes = [np.array([fixed[0]]) if fixed[0] is not None else g,
            np.array([fixed[1]]) if fixed[1] is not None else g]
    vals, _ = tensor_tabulate(b, axes)
    xi = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 2, order="F")
    jac = emap.jacobian(xi)
    along = 0 if edge.local in (0, 2) else 1
    sign = 1.0 if edge.local in (0, 1) else -1.0
    t = sign * jac[:, :, along]
    length = np.linalg.norm(t, axis=1)
    normal = np.stack([t[:, 1], -t[:, 0]], -1) / length[:, None]
    return emap.x(xi), vals, normal, rule.weight_array * length


# ---------------------------------------------------------------------------
# global systems


@dataclass(frozen=True, eq=False)
class AssembledSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    dofmap: DofMap
    kind: str
    dim: int
    constrained: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    constrained_values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def n_fields(self) -> int:
        return 1 if self.kind == "galerkin" else 1 + self.dim

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def replace(self, **kw) -> "AssembledSystem":
        data = {k: getattr(self, k) for k in ("matrix", "rhs", "dofmap", "kind", "dim",
                                             "constrained", "constrained_values")}
        data.update(kw)
        return AssembledSystem(**data)


def global_indices(dofmap: DofMap, e: int, n_fields: int) -> np.ndarray:
    nodes = dofmap.element_dofs[e]
    return np.concatenate([nodes + f * dofmap.n_dofs for f in range(n_fields)])


def _element_system(emap, coeff, basis, rule, form: Formulation) -> ElementSystem:
    if form.least_squares:
        return element_ls(emap, coeff, basis, rule, form)
    return element_galerkin(emap, coeff, basis, rule)


def assemble_global(mesh: Mesh, coeff: CoefficientField, basis: SpectralBasis, form,
                    rule: QuadratureRule, dofmap: DofMap | None = None) -> AssembledSystem:
    """Scatter-add element systems in element order into a CSR matrix.

    For least-squares formulations the ``(w.n)(q.n)`` term of Neumann edges is
    included here; Neumann loads are added by :func:`neumann_load`.
    """
    form = as_formulation(form)
    basis = basis.with_dim(mesh.dim)
    dofmap = dofmap or build_dofmap(mesh, basis.order)
    if dofmap.order != basis.order or len(dofmap.element_dofs) != mesh.n_elements:
        raise InternalError("DOF map does not match mesh/basis")
    nf = form.n_fields(mesh.dim)
    size = nf * dofmap.n_dofs
    rhs = np.zeros(size)
    matrix = sp.csr_matrix((size, size))
    rows, cols, vals = [], [], []

    def flush():
        nonlocal matrix, rows, cols, vals
        if rows:
            r, c, v = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
            matrix = matrix + sp.coo_matrix((v, (r, c)), shape=(size, size)).tocsr()
            rows, cols, vals = [], [], []

    for e in range(mesh.n_elements):
        es = _element_system(element_map(mesh, e), coeff, basis, rule, form)
        idx = global_indices(dofmap, e, nf)
        if es.matrix.shape != (len(idx), len(idx)):
            raise InternalError(f"element {e}: system size {es.matrix.shape} vs {len(idx)} DOFs")
        rows.append(np.repeat(idx, len(idx)))
        cols.append(np.tile(idx, len(idx)))
        vals.append(es.matrix.ravel())
        np.add.at(rhs, idx, es.vector)
        if (e + 1) % _CHUNK == 0:
            flush()
    if form.least_squares:
        for edge in mesh.boundary:
            if edge.kind != NEUMANN:
                continue
            _, vals_b, normal, wts = boundary_quadrature(mesh, edge, basis, rule)
            nl = vals_b.shape[1]
            idx = global_indices(dofmap, edge.element, nf)
            # rows of (q.n) with respect to the element DOFs
            qn = np.zeros((len(wts), nf * nl))
            for a in range(mesh.dim):
                qn[:, (1 + a) * nl : (2 + a) * nl] = vals_b * normal[:, a : a + 1]
            kb = (qn * wts[:, None]).T @ qn
            rows.append(np.repeat(idx, len(idx)))
            cols.append(np.tile(idx, len(idx)))
            vals.append(kb.ravel())
    flush()
    matrix.sum_duplicates()
    matrix.eliminate_zeros()
    matrix.sort_indices()
    return AssembledSystem(matrix, rhs, dofmap, form.kind, mesh.dim)


def neumann_load(system: AssembledSystem, mesh: Mesh, boundary: BoundaryData, basis: SpectralBasis,
                 rule: QuadratureRule) -> AssembledSystem:
    """Add prescribed-flux loads: ``+int w t`` (Galerkin) or ``-int (w.n) t`` (least squares)."""
    edges = [b for b in mesh.boundary if b.kind == NEUMANN]
    if not edges:
        return system
    if boundary.neumann is None:
        raise InvalidArgumentError("mesh has Neumann edges but no flux data was given")
    basis = basis.with_dim(mesh.dim)
    rhs = system.rhs.copy()
    for edge in edges:
        x, vals_b, normal, wts = boundary_quadrature(mesh, edge, basis, rule)
        t = boundary.neumann(x)
        nodes = system.dofmap.element_dofs[edge.element]
        if system.kind == "galerkin":
            np.add.at(rhs, nodes, vals_b.T @ (wts * t))
        else:
            n_dofs = system.dofmap.n_dofs
            for a in range(mesh.dim):
                np.add.at(rhs, nodes + (1 + a) * n_dofs, -(vals_b * normal[:, a : a + 1]).T @ (wts * t))
    return system.replace(rhs=rhs)


def dirichlet_values(dofmap: DofMap, boundary: BoundaryData) -> tuple[np.ndarray, np.ndarray]:
    idx, vals = [], []
    for region, nodes in dofmap.dirichlet_dofs.items():
        idx.append(nodes)
        vals.append(np.asarray(boundary.dirichlet(dofmap.coords[nodes], region), dtype=float))
    if not idx:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    idx, vals = np.concatenate(idx), np.concatenate(vals)
    order = np.argsort(idx, kind="stable")
    return idx[order], vals[order]


def apply_dirichlet(system: AssembledSystem, boundary: BoundaryData,
                    constrained: tuple[np.ndarray, np.ndarray] | None = None) -> AssembledSystem:
    """Symmetric elimination of prescribed concentration DOFs; flux DOFs are never constrained."""
    idx, vals = constrained if constrained is not None else dirichlet_values(system.dofmap, boundary)
    idx = np.asarray(idx, dtype=np.int64)
    n = system.size
    if idx.size and (idx.min() < 0 or idx.max() >= system.dofmap.n_dofs):
        raise InternalError("constrained DOF outside the concentration block")
    fixed = np.zeros(n)
    fixed[idx] = vals
    rhs = system.rhs - system.matrix @ fixed
    free = np.ones(n)
    free[idx] = 0.0
    p_free = sp.diags(free)
    matrix = (p_free @ system.matrix @ p_free + sp.diags(1.0 - free)).tocsr()
    matrix.eliminate_zeros()
    matrix.sort_indices()
    rhs = rhs * free
    rhs[idx] = vals
    return system.replace(matrix=matrix, rhs=rhs, constrained=idx, constrained_values=np.asarray(vals))


def build_system(mesh: Mesh, problem, basis: SpectralBasis, form, rule: QuadratureRule) -> AssembledSystem:
    """Assemble, add Neumann loads and impose Dirichlet data for a problem."""
    form = as_formulation(form)
    system = assemble_global(mesh, problem.coefficients, basis, form, rule)
    system = neumann_load(system, mesh, problem.boundary, basis, rule)
    return apply_dirichlet(system, problem.boundary)


def write_matrix(system: AssembledSystem, path, p: int | None = None) -> None:
    """Coordinate dump: a JSON header line, then ``row col value`` lines (0-based)."""
    coo = system.matrix.tocoo()
    header = {"dimension": int(system.size), "formulation": system.kind,
              "p": int(p if p is not None else system.dofmap.order), "nnz": int(coo.nnz)}
    lines = [json.dumps(header, sort_keys=True)]
    order = np.lexsort((coo.col, coo.row))
    lines += [f"{coo.row[i]} {coo.col[i]} {float(coo.data[i])!r}" for i in order]
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix(path) -> tuple[dict, sp.csr_matrix]:
    lines = Path(path).read_text().splitlines()
    header = json.loads(lines[0])
    n = header["dimension"]
    trip = [ln.split() for ln in lines[1:] if ln.strip()]
    r = np.array([int(t[0]) for t in trip], dtype=np.int64)
    c = np.array([int(t[1]) for t in trip], dtype=np.int64)
    v = np.array([float(t[2]) for t in trip])
    return header, sp.csr_matrix((v, (r, c)), shape=(n, n))


__all__ = [
    "AssembledSystem", "ElementSystem", "Formulation", "apply_dirichlet", "assemble_global",
    "as_formulation", "boundary_quadrature", "build_system", "element_galerkin", "element_ls",
    "element_ls1_voigt", "element_ls2_voigt", "neumann_load", "voigt_discrepancy", "write_matrix",
    "read_matrix", "DIRICHLET",
]
