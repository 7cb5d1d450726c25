"""Visualization meshes and file artifacts (legacy VTK, CSV, JSON).

High-order fields are sampled onto a dense low-order mesh: 100 uniformly spaced
points per 1D element, and in 2D the 16 x 16 GLL grid of an order-15 element
split into 15 x 15 bilinear cells. All writers are deterministic: floats are
printed in a round-trip form, so equal inputs give byte-identical files.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import DmpReport, FieldSolution, SweepRow, SweepTable, evaluate_points
from .basis import gll_nodes, tensor_points
from .errors import DmpFemError, InvalidArgumentError
from .mesh import build_dofmap, mesh_from_text, mesh_to_text

VIZ_POINTS_1D = 100
VIZ_ORDER_2D = 15
VIOLATION_TOL = 1e-13
VTK_LINE, VTK_QUAD = 3, 9


class ExportError(DmpFemError, OSError):
    """A file could not be written or read."""


@dataclass(frozen=True, eq=False)
class VizMesh:
    dim: int
    points: np.ndarray
    concentration: np.ndarray
    cells: np.ndarray
    cell_type: int
    violation: np.ndarray
    flux: np.ndarray | None = None

    @property
    def n_points(self) -> int:
        return len(self.points)

    @property
    def n_cells(self) -> int:
        return len(self.cells)


def viz_reference_points(dim: int) -> np.ndarray:
    """Reference sample points of one element, first axis fastest."""
    if dim == 1:
        return np.linspace(-1.0, 1.0, VIZ_POINTS_1D)[:, None]
    return tensor_points(gll_nodes(VIZ_ORDER_2D).node_array, 2)


def _local_cells(dim: int) -> np.ndarray:
    if dim == 1:
        i = np.arange(VIZ_POINTS_1D - 1)
        return np.stack([i, i + 1], axis=1)
    m = VIZ_ORDER_2D + 1
    i, j = np.meshgrid(np.arange(m - 1), np.arange(m - 1), indexing="ij")
    i, j = i.ravel(order="F"), j.ravel(order="F")
    base = i + m * j
    return np.stack([base, base + 1, base + 1 + m, base + m], axis=1)


def build_viz(sol: FieldSolution) -> VizMesh:
    """Densified low-order sampling of a solution, with a per-point violation mask."""
    if sol.dim not in (1, 2):
        raise InvalidArgumentError("visualization meshes are built for 1D and 2D solutions only")
    xi = viz_reference_points(sol.dim)
    x, conc, flux = evaluate_points(sol, xi)
    ne, npts = conc.shape
    local = _local_cells(sol.dim)
    cells = (local[None, :, :] + npts * np.arange(ne)[:, None, None]).reshape(-1, local.shape[1])
    values = conc.reshape(-1)
    return VizMesh(
        sol.dim, x.reshape(-1, sol.dim), values, cells.astype(np.int64),
        VTK_LINE if sol.dim == 1 else VTK_QUAD, values < -VIOLATION_TOL,
        None if flux is None else flux.reshape(-1, sol.dim),
    )


def _num(v: float) -> str:
    return format(float(v), ".17g")


def _write_text(path, text: str) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc}") from exc
    return path


def _read_text(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ExportError(f"cannot read {path}: {exc}") from exc


def vtk_text(viz: VizMesh, title: str = "dmpfem") -> str:
    pad = np.zeros((viz.n_points, 3))
    pad[:, : viz.dim] = viz.points
    out = ["# vtk DataFile Version 3.0", f"{title} dim={viz.dim}", "ASCII", "DATASET UNSTRUCTURED_GRID",
           f"POINTS {viz.n_points} double"]
    out += [" ".join(_num(c) for c in p) for p in pad]
    k = viz.cells.shape[1] if viz.n_cells else 0
    out.append(f"CELLS {viz.n_cells} {viz.n_cells * (k + 1)}")
    out += [f"{k} " + " ".join(str(int(i)) for i in c) for c in viz.cells]
    out.append(f"CELL_TYPES {viz.n_cells}")
    out += [str(viz.cell_type)] * viz.n_cells
    out.append(f"POINT_DATA {viz.n_points}")
    out += ["SCALARS concentration double 1", "LOOKUP_TABLE default"]
    out += [_num(v) for v in viz.concentration]
    out += ["SCALARS violation int 1", "LOOKUP_TABLE default"]
    out += ["1" if v else "0" for v in viz.violation]
    if viz.flux is not None:
        fpad = np.zeros((viz.n_points, 3))
        fpad[:, : viz.dim] = viz.flux
        out.append("VECTORS flux double")
        out += [" ".join(_num(c) for c in f) for f in fpad]
    return "\n".join(out) + "\n"


def write_vtk(viz: VizMesh, path, title: str = "dmpfem") -> Path:
    """Legacy ASCII VTK unstructured grid with concentration, violation and (LS) flux."""
    return _write_text(path, vtk_text(viz, title))


def read_vtk(path) -> VizMesh:
    """Parse a file written by :func:`write_vtk` back into a :class:`VizMesh`."""
    lines = _read_text(path).splitlines()
    try:
        dim = int(lines[1].rsplit("dim=", 1)[1])
        pos = 4
        npts = int(lines[pos].split()[1])
        pts = np.array([[float(c) for c in ln.split()] for ln in lines[pos + 1 : pos + 1 + npts]]).reshape(npts, 3)
        pos += 1 + npts
        ncells = int(lines[pos].split()[1])
        cells = np.array([[int(i) for i in ln.split()[1:]] for ln in lines[pos + 1 : pos + 1 + ncells]], dtype=np.int64)
        pos += 1 + ncells
        types = [int(t) for t in lines[pos + 1 : pos + 1 + ncells]]
        pos += 1 + ncells + 1
        arrays: dict[str, list[str]] = {}
        while pos < len(lines):
            head = lines[pos].split()
            if head[0] == "SCALARS":
                arrays[head[1]] = lines[pos + 2 : pos + 2 + npts]
                pos += 2 + npts
            elif head[0] == "VECTORS":
                arrays[head[1]] = lines[pos + 1 : pos + 1 + npts]
                pos += 1 + npts
            else:
                raise ValueError(f"unexpected line {lines[pos]!r}")
    except (IndexError, ValueError) as exc:
        raise InvalidArgumentError(f"malformed VTK file {path}: {exc}") from exc
    default_type = VTK_LINE if dim == 1 else VTK_QUAD
    flux = None
    if "flux" in arrays:
        flux = np.array([[float(c) for c in ln.split()] for ln in arrays["flux"]]).reshape(npts, 3)[:, :dim]
    return VizMesh(
        dim, pts[:, :dim], np.array([float(v) for v in arrays["concentration"]]),
        cells.reshape(ncells, -1) if ncells else np.zeros((0, 2 if dim == 1 else 4), dtype=np.int64),
        types[0] if types else default_type,
        np.array([v.strip() == "1" for v in arrays["violation"]], dtype=bool), flux,
    )


# ---------------------------------------------------------------------------
# CSV

REPORT_COLUMNS = (
    "problem", "formulation", "order", "min_value", "min_location", "max_value", "max_location",
    "boundary_min", "boundary_max", "negative_fraction", "eval_density", "n_points",
    "nonneg_ok", "mp_diffusion_ok", "mp_decay_ok", "problem_params",
)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _verdict_str(v) -> str:
    return "" if v is None else ("true" if v else "false")


def _verdict_val(s: str):
    return None if s == "" else s == "true"


def write_csv(table, path) -> Path:
    """CSV for a :class:`SweepTable` (one row per level) or a :class:`DmpReport` (one row)."""
    if isinstance(table, SweepTable):
        rows = [[r.level, r.formulation, repr(float(r.min_concentration)), repr(float(r.min_x)), repr(float(r.min_y))]
                for r in table.rows]
        return _write_text(path, _csv_text(SweepTable.COLUMNS, rows))
    if isinstance(table, DmpReport):
        v = table.verdicts
        row = [table.problem, table.formulation, table.order, repr(table.min_value),
               " ".join(repr(c) for c in table.min_location), repr(table.max_value),
               " ".join(repr(c) for c in table.max_location), repr(table.boundary_min),
               repr(table.boundary_max), repr(table.negative_fraction), table.eval_density, table.n_points,
               _verdict_str(v.get("nonneg_ok")), _verdict_str(v.get("mp_diffusion_ok")),
               _verdict_str(v.get("mp_decay_ok")), json.dumps(table.problem_params, sort_keys=True)]
        return _write_text(path, _csv_text(REPORT_COLUMNS, [row]))
    raise InvalidArgumentError(f"cannot write {type(table).__name__} as CSV")


def read_csv(path, mode: str = "p"):
    """Inverse of :func:`write_csv`; the header decides which type comes back."""
    rows = list(csv.reader(io.StringIO(_read_text(path))))
    if not rows:
        raise InvalidArgumentError(f"empty CSV file {path}")
    header, body = tuple(rows[0]), rows[1:]
    if header == SweepTable.COLUMNS:
        return SweepTable(mode, [SweepRow(int(r[0]), r[1], float(r[2]), float(r[3]), float(r[4])) for r in body])
    if header == REPORT_COLUMNS and len(body) == 1:
        r = dict(zip(header, body[0]))
        verdicts = {k: _verdict_val(r[k]) for k in ("nonneg_ok", "mp_diffusion_ok", "mp_decay_ok")}
        return DmpReport(
            min_value=float(r["min_value"]), min_location=[float(c) for c in r["min_location"].split()],
            max_value=float(r["max_value"]), max_location=[float(c) for c in r["max_location"].split()],
            boundary_min=float(r["boundary_min"]), boundary_max=float(r["boundary_max"]),
            negative_fraction=float(r["negative_fraction"]), eval_density=int(r["eval_density"]),
            n_points=int(r["n_points"]), problem=r["problem"], problem_params=json.loads(r["problem_params"]),
            formulation=r["formulation"], order=int(r["order"]), verdicts=verdicts,
        )
    raise InvalidArgumentError(f"unrecognized CSV header in {path}: {header}")


# ---------------------------------------------------------------------------
# JSON: solution dumps and run reports


def json_text(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def write_json(data, path) -> Path:
    return _write_text(path, json_text(data))


def read_json(path) -> dict:
    try:
        return json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise InvalidArgumentError(f"malformed JSON file {path}: {exc}") from exc


def solution_dict(sol: FieldSolution, problem_ref: dict) -> dict:
    """Self-contained dump: problem reference, mesh text and DOF values (floats round-trip exactly)."""
    return {
        "format": "dmpfem-solution-1",
        "problem_ref": problem_ref,
        "formulation": sol.kind,
        "order": int(sol.order),
        "mesh": mesh_to_text(sol.mesh),
        "concentration": [float(v) for v in sol.concentration],
        "flux": None if sol.flux is None else [[float(c) for c in row] for row in sol.flux],
    }


def solution_from_dict(data: dict, problem) -> FieldSolution:
    """Rebuild a field from :func:`solution_dict` output; ``problem`` is the resolved ProblemSpec."""
    if data.get("format") != "dmpfem-solution-1":
        raise InvalidArgumentError("not a solution dump (missing format tag)")
    mesh = mesh_from_text(data["mesh"], "<solution dump>")
    dofmap = build_dofmap(mesh, int(data["order"]))
    conc = np.array(data["concentration"], dtype=float)
    if conc.shape != (dofmap.n_dofs,):
        raise InvalidArgumentError(f"solution dump has {conc.size} values, mesh needs {dofmap.n_dofs}")
    flux = None if data.get("flux") is None else np.array(data["flux"], dtype=float).reshape(-1, mesh.dim)
    return FieldSolution(mesh, problem, int(data["order"]), data["formulation"], dofmap, conc, flux)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def run_report(config: dict, mesh_descriptor: dict, solve_report, dmp_report: DmpReport | None,
               files: list[Path], root: Path | None = None) -> dict:
    """JSON run report; wall time is left out so a replay reproduces the file byte for byte."""
    manifest = []
    for f in sorted(files, key=lambda p: Path(p).name):
        name = str(Path(f).relative_to(root)) if root is not None else str(f)
        manifest.append({"file": name, "sha256": sha256_file(f)})
    return {
        "problem": config.get("problem"),
        "formulation": config.get("formulation"),
        "p": config.get("p"),
        "mesh": mesh_descriptor,
        "solve": None if solve_report is None else solve_report.to_dict(include_time=False),
        "dmp": None if dmp_report is None else dmp_report.to_dict(),
        "run_config": config,
        "files": manifest,
    }
