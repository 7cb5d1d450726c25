"""Discrete solutions: evaluation, extrema scans, maximum-principle audits, norms and sweeps."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import assembly
from .basis import gll_nodes, tabulate_1d, tensor_points
from .errors import DmpFemError, InvalidArgumentError
from .mesh import DofMap, Mesh, element_map, refine
from .problem import ProblemSpec
from .quadrature import default_ngp, gauss_rule
from .solver import SolveReport, solve_spd

log = logging.getLogger(__name__)

NEGATIVE_TOL = 1e-13
VERDICT_TOL = 1e-12
DEFAULT_DENSITY = 16


@dataclass(frozen=True, eq=False)
class FieldSolution:
    mesh: Mesh
    problem: ProblemSpec
    order: int
    kind: str
    dofmap: DofMap
    concentration: np.ndarray
    flux: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.mesh.dim

    @classmethod
    def from_vector(cls, mesh, problem, order, kind, dofmap, x) -> "FieldSolution":
        n = dofmap.n_dofs
        flux = None
        if kind != "galerkin":
            flux = x[n:].reshape(mesh.dim, n).T.copy()
        return cls(mesh, problem, order, kind, dofmap, np.array(x[:n]), flux)

    def with_dofs(self, concentration, flux=None) -> "FieldSolution":
        return FieldSolution(self.mesh, self.problem, self.order, self.kind, self.dofmap,
                             np.asarray(concentration, dtype=float),
                             None if flux is None else np.asarray(flux, dtype=float))

    def dof_vector(self) -> np.ndarray:
        if self.flux is None:
            return self.concentration.copy()
        return np.concatenate([self.concentration, self.flux.T.ravel()])


def pick_ngp(problem: ProblemSpec, kind: str, p: int, override: int | None = None) -> int:
    if override is not None:
        return int(override)
    return default_ngp(p, problem.coefficients.constant, kind)


def solve_problem(problem: ProblemSpec, kind, p: int, mesh: Mesh | None = None,
                  ngp: int | None = None, method: str = "auto") -> tuple[FieldSolution, SolveReport]:
    """Assemble, constrain and solve one problem; returns the field and the solver report."""
    form = assembly.as_formulation(kind)
    mesh = mesh if mesh is not None else problem.build_mesh()
    basis = gll_nodes(p).with_dim(mesh.dim)
    rule = gauss_rule(pick_ngp(problem, form.kind, p, ngp))
    system = assembly.build_system(mesh, problem, basis, form, rule)
    x, report = solve_spd(system, method)
    return FieldSolution.from_vector(mesh, problem, p, form.kind, system.dofmap, x), report


# ---------------------------------------------------------------------------
# evaluation


def _map_points(mesh: Mesh, xi: np.ndarray) -> np.ndarray:
    """Physical coordinates ``(ne, npts, dim)`` of reference points in every element."""
    corners = mesh.vertices[mesh.elements]
    if mesh.dim == 1:
        s = xi[:, 0]
        shape = np.stack([(1 - s) / 2, (1 + s) / 2], -1)
    else:
        s, t = xi[:, 0], xi[:, 1]
        shape = 0.25 * np.stack([(1 - s) * (1 - t), (1 + s) * (1 - t), (1 + s) * (1 + t), (1 - s) * (1 + t)], -1)
    return np.einsum("pa,ead->epd", shape, corners)


def _tabulate_points(order: int, xi: np.ndarray) -> np.ndarray:
    basis = gll_nodes(order)
    dim = xi.shape[1]
    factors = [tabulate_1d(basis, xi[:, a])[0] for a in range(dim)]
    out = factors[0]
    for f in factors[1:]:
        out = np.einsum("pk,pj->pkj", f, out).reshape(len(xi), -1)
    return out


def _contract(coeffs: np.ndarray, table: np.ndarray) -> np.ndarray:
    # row-wise product and sum, so a point's value does not depend on which
    # other points are evaluated with it (BLAS blocking would)
    return np.stack([(c[None, :] * table).sum(axis=-1) for c in coeffs])


def evaluate_points(sol: FieldSolution, xi: np.ndarray):
    """Values at the same reference points in every element.

    Returns physical points ``(ne, npts, dim)``, concentration ``(ne, npts)`` and
    flux ``(ne, npts, dim)`` (``None`` for Galerkin).
    """
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    table = _tabulate_points(sol.order, xi)
    dofs = sol.dofmap.element_dofs
    conc = _contract(sol.concentration[dofs], table)
    flux = None
    if sol.flux is not None:
        flux = np.stack([_contract(sol.flux[dofs, a], table) for a in range(sol.dim)], -1)
    return _map_points(sol.mesh, xi), conc, flux


def evaluate(sol: FieldSolution, element: int, local):
    """``sum_i c_i psi_i(xi)`` in one element; LS solutions also return the flux vector."""
    if not 0 <= element < sol.mesh.n_elements:
        raise InvalidArgumentError(f"element index {element} out of range")
    xi = np.atleast_2d(np.asarray(local, dtype=float)).reshape(1, sol.dim)
    table = _tabulate_points(sol.order, xi)
    dofs = sol.dofmap.element_dofs[element]
    value = float(_contract(sol.concentration[dofs][None, :], table)[0, 0])
    if sol.flux is None:
        return value
    return value, _contract(sol.flux[dofs].T, table)[:, 0]


def scan_reference_points(order: int, density: int, dim: int) -> np.ndarray:
    """``density`` GLL points per direction plus the element's own nodes."""
    grid = tensor_points(gll_nodes(density - 1).node_array, dim)
    nodes = tensor_points(gll_nodes(order).node_array, dim)
    return np.vstack([grid, nodes])


# ---------------------------------------------------------------------------
# extrema and audits


@dataclass
class DmpReport:
    min_value: float
    min_location: list[float]
    max_value: float
    max_location: list[float]
    boundary_min: float
    boundary_max: float
    negative_fraction: float
    eval_density: int
    n_points: int
    problem: str = ""
    problem_params: dict = field(default_factory=dict)
    formulation: str = ""
    order: int = 0
    verdicts: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "DmpReport":
        return cls(**data)


def _boundary_values(sol: FieldSolution, density: int) -> np.ndarray:
    line = np.concatenate([gll_nodes(density - 1).node_array, gll_nodes(sol.order).node_array])
    out = []
    for b in sol.mesh.boundary:
        if sol.dim == 1:
            xi = np.array([[-1.0 if b.local == 0 else 1.0]])
        else:
            const = {0: (None, -1.0), 1: (1.0, None), 2: (None, 1.0), 3: (-1.0, None)}[b.local]
            xi = np.stack([line if const[0] is None else np.full_like(line, const[0]),
                           line if const[1] is None else np.full_like(line, const[1])], -1)
        table = _tabulate_points(sol.order, xi)
        out.append(table @ sol.concentration[sol.dofmap.element_dofs[b.element]])
    return np.concatenate(out) if out else np.zeros(0)


def scan_extrema(sol: FieldSolution, density: int = DEFAULT_DENSITY) -> DmpReport:
    """Extrema over a dense per-element GLL grid plus element nodes, and the audit verdicts."""
    if density < sol.order + 1:
        raise InvalidArgumentError(f"scan density {density} must be >= p + 1 = {sol.order + 1}")
    xi = scan_reference_points(sol.order, density, sol.dim)
    x, conc, _ = evaluate_points(sol, xi)
    flat, pts = conc.ravel(), x.reshape(-1, sol.dim)
    i_min, i_max = int(np.argmin(flat)), int(np.argmax(flat))
    bvals = _boundary_values(sol, density)
    report = DmpReport(
        min_value=float(flat[i_min]), min_location=[float(v) for v in pts[i_min]],
        max_value=float(flat[i_max]), max_location=[float(v) for v in pts[i_max]],
        boundary_min=float(bvals.min()) if bvals.size else float(flat[i_min]),
        boundary_max=float(bvals.max()) if bvals.size else float(flat[i_max]),
        negative_fraction=float(np.mean(flat < -NEGATIVE_TOL)),
        eval_density=int(density), n_points=int(flat.size),
        problem=sol.problem.name, problem_params=dict(sol.problem.params),
        formulation=sol.kind, order=int(sol.order),
    )
    report.verdicts = audit_dmp(report, sol.problem)
    return report


def audit_dmp(report: DmpReport, problem: ProblemSpec) -> dict:
    """Maximum-principle and non-negativity verdicts; ``None`` marks not applicable.

    With ``f >= 0`` the principles bound the minimum from below (by the boundary
    minimum without decay, by ``min(boundary min, 0)`` with decay); ``f <= 0``
    mirrors that on the maximum and ``f = 0`` checks both sides.
    """
    coeff = problem.coefficients
    sign = coeff.forcing_sign
    verdicts = {"nonneg_ok": None, "mp_diffusion_ok": None, "mp_decay_ok": None}
    if sign is None:
        return verdicts
    tol = VERDICT_TOL
    lower = sign >= 0
    upper = sign <= 0
    if coeff.decay_free:
        ok = True
        if lower:
            ok &= report.min_value >= report.boundary_min - tol
        if upper:
            ok &= report.max_value <= report.boundary_max + tol
        verdicts["mp_diffusion_ok"] = bool(ok)
    ok = True
    if lower:
        ok &= report.min_value >= min(report.boundary_min, 0.0) - tol
    if upper:
        ok &= report.max_value <= max(report.boundary_max, 0.0) + tol
    verdicts["mp_decay_ok"] = bool(ok)
    if lower and problem.dirichlet_nonneg:
        verdicts["nonneg_ok"] = bool(report.min_value >= -tol)
    return verdicts


# ---------------------------------------------------------------------------
# norms and functionals


def _fields_at(sol: FieldSolution, ed, dofs):
    c = ed.values @ sol.concentration[dofs]
    grad = np.einsum("qna,n->qa", ed.grads, sol.concentration[dofs])
    q = divq = None
    if sol.flux is not None:
        q = ed.values @ sol.flux[dofs]
        divq = np.einsum("qna,na->q", ed.grads, sol.flux[dofs])
    return c, grad, q, divq


def _quadrature_fields(sol: FieldSolution, ngp: int, with_load: bool = False):
    """Physical points, weights, values, gradients and fluxes at quadrature points of all elements.

    With ``with_load`` each item also carries the load-integral data of the element
    (split at forcing jumps, as in assembly) and the fields evaluated there.
    """
    basis = gll_nodes(sol.order).with_dim(sol.dim)
    rule = gauss_rule(ngp)
    coeff = sol.problem.coefficients
    for e in range(sol.mesh.n_elements):
        emap = element_map(sol.mesh, e)
        ed = assembly.element_data(emap, basis, rule)
        dofs = sol.dofmap.element_dofs[e]
        item = (ed, *_fields_at(sol, ed, dofs))
        if with_load:
            ld = assembly.load_data(emap, coeff, basis, rule, ed)
            item = item + ((ld, *_fields_at(sol, ld, dofs)),)
        yield item


def error_norms(sol: FieldSolution, analytic=None, density: int = DEFAULT_DENSITY) -> tuple[float, float]:
    """L2 error by Gauss quadrature with ``p + 3`` points and L-infinity over the scan grid."""
    analytic = analytic or sol.problem.analytic
    if analytic is None:
        raise InvalidArgumentError(f"problem '{sol.problem.name}' has no analytic solution")
    total = 0.0
    for ed, c, *_ in _quadrature_fields(sol, sol.order + 3):
        total += float(ed.weights @ (c - analytic(ed.x)) ** 2)
    xi = scan_reference_points(sol.order, max(density, sol.order + 1), sol.dim)
    x, conc, _ = evaluate_points(sol, xi)
    exact = analytic(x.reshape(-1, sol.dim)).reshape(conc.shape)
    return math.sqrt(total), float(np.max(np.abs(conc - exact)))


def galerkin_energy(sol: FieldSolution, ngp: int | None = None) -> float:
    """``1/2 int (alpha c^2 + grad c . D grad c) - int c f - int_N c t`` by quadrature."""
    coeff, bdata = sol.problem.coefficients, sol.problem.boundary
    ngp = ngp or sol.order + 2
    total = 0.0
    for ed, c, grad, _, _, load in _quadrature_fields(sol, ngp, with_load=True):
        alpha, d = coeff.alpha(ed.x), coeff.diffusivity(ed.x)
        dens = 0.5 * (alpha * c * c + np.einsum("qa,qab,qb->q", grad, d, grad))
        ld, cl = load[0], load[1]
        total += float(ed.weights @ dens) - float(ld.weights @ (cl * coeff.forcing(ld.x)))
    basis = gll_nodes(sol.order)
    rule = gauss_rule(ngp)
    for b in sol.mesh.boundary:
        if b.kind != "neumann":
            continue
        x, vals, _, wts = assembly.boundary_quadrature(sol.mesh, b, basis, rule)
        c = vals @ sol.concentration[sol.dofmap.element_dofs[b.element]]
        total -= float(wts @ (c * bdata.neumann(x)))
    return total


def ls_functional_value(sol: FieldSolution, problem: ProblemSpec | None = None, form=None,
                        ngp: int | None = None) -> float:
    """Weighted least-squares functional of a (c, q) pair, boundary flux mismatch included."""
    if sol.flux is None:
        raise InvalidArgumentError("least-squares functional needs a solution with a flux field")
    problem = problem or sol.problem
    form = assembly.as_formulation(form or sol.kind)
    coeff = problem.coefficients
    ngp = ngp or sol.order + 2
    total = 0.0
    # the residual (alpha c + div q - f) is expanded so every term holding f is
    # integrated with the same load rule as the assembled right-hand side
    for ed, c, grad, q, divq, load in _quadrature_fields(sol, ngp, with_load=True):
        alpha, d = coeff.alpha(ed.x), coeff.diffusivity(ed.x)
        a2, beta2 = form.weights(alpha, d, ed.x)
        r1 = alpha * c + divq
        r2 = q + np.einsum("qab,qb->qa", d, grad)
        dens = 0.5 * beta2 * r1 * r1 + 0.5 * np.einsum("qa,qab,qb->q", r2, a2, r2)
        total += float(ed.weights @ dens)
        ld, cl, _, _, divql = load
        al, f = coeff.alpha(ld.x), coeff.forcing(ld.x)
        _, b2l = form.weights(al, coeff.diffusivity(ld.x), ld.x)
        total += float(ld.weights @ (b2l * f * (0.5 * f - (al * cl + divql))))
    basis = gll_nodes(sol.order)
    rule = gauss_rule(ngp)
    for b in sol.mesh.boundary:
        if b.kind != "neumann":
            continue
        x, vals, normal, wts = assembly.boundary_quadrature(sol.mesh, b, basis, rule)
        qb = vals @ sol.flux[sol.dofmap.element_dofs[b.element]]
        mismatch = np.sum(qb * normal, axis=1) + problem.boundary.neumann(x)
        total += 0.5 * float(wts @ mismatch**2)
    return total


def free_dofs(sol: FieldSolution) -> np.ndarray:
    """Indices into ``dof_vector()`` that are not fixed by Dirichlet data."""
    fixed = np.zeros(len(sol.dof_vector()), dtype=bool)
    for nodes in sol.dofmap.dirichlet_dofs.values():
        fixed[nodes] = True
    return np.flatnonzero(~fixed)


def perturbed(sol: FieldSolution, delta: np.ndarray) -> FieldSolution:
    x = sol.dof_vector() + delta
    return FieldSolution.from_vector(sol.mesh, sol.problem, sol.order, sol.kind, sol.dofmap, x)


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class SweepRow:
    level: int
    formulation: str
    min_concentration: float
    min_x: float
    min_y: float


@dataclass
class SweepTable:
    mode: str
    rows: list[SweepRow] = field(default_factory=list)
    complete: bool = True
    error: str = ""

    COLUMNS = ("level", "formulation", "min_concentration", "min_x", "min_y")

    def minima(self) -> dict[int, float]:
        return {r.level: r.min_concentration for r in self.rows}


def sweep(problem: ProblemSpec, formulation, mode: str, levels, config: dict | None = None) -> SweepTable:
    """Minimum concentration per refinement level.

    ``mode="p"``: fixed base mesh, ``p = level``. ``mode="h"``: fixed order
    ``config["p"]`` (default 1) on ``refine(base, level)``. Config keys:
    ``mesh`` (builder overrides), ``p``, ``ngp``, ``density``, ``jobs``, ``base_mesh``.
    """
    if mode not in ("p", "h"):
        raise InvalidArgumentError(f"sweep mode must be 'p' or 'h', got {mode!r}")
    levels = [int(v) for v in levels]
    if not levels:
        raise InvalidArgumentError("sweep needs at least one level")
    cfg = dict(config or {})
    form = assembly.as_formulation(formulation)
    base = cfg.get("base_mesh") or problem.build_mesh(**cfg.get("mesh", {}))
    density = int(cfg.get("density", DEFAULT_DENSITY))

    def run(level: int) -> SweepRow:
        if mode == "p":
            p, mesh = level, base
        else:
            p, mesh = int(cfg.get("p", 1)), refine(base, level)
        sol, _ = solve_problem(problem, form, p, mesh, cfg.get("ngp"))
        rep = scan_extrema(sol, max(density, p + 1))
        loc = rep.min_location + [0.0] * (2 - len(rep.min_location))
        return SweepRow(level, form.kind, rep.min_value, loc[0], loc[1])

    table = SweepTable(mode)
    jobs = max(1, int(cfg.get("jobs", 1)))
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = [(lvl, pool.submit(run, lvl)) for lvl in levels]
        for lvl, fut in sorted(futures, key=lambda t: t[0]):
            try:
                table.rows.append(fut.result())
            except DmpFemError as exc:
                log.error("sweep aborted at level %d: %s", lvl, exc)
                table.complete = False
                table.error = f"level {lvl}: {exc}"
                break
    return table
