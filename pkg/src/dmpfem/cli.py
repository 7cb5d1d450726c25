"""Command-line entry point: ``dmpfem <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 computation fault (or a nonnegativity
violation when ``--expect-nonneg`` is given). Maximum-principle violations on
their own are findings, not errors, and leave the exit code at 0.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, assembly, export
from .basis import gll_nodes, legendre, tabulate_1d
from .errors import DmpFemError, InvalidArgumentError
from .mesh import element_map
from .problem import PROBLEM_DESCRIPTIONS, PROBLEM_IDS, canonical_problem, resolve_problem
from .quadrature import gauss_rule

log = logging.getLogger("dmpfem")

EXIT_OK, EXIT_USAGE, EXIT_FAULT = 0, 1, 2
FORMULATION_CHOICES = ("single-field", "galerkin", "ls1", "ls2")
MESH_FLAGS = {"nx": "nx", "ny": "ny", "ne": "ne", "hole_n": "n", "jitter": "jitter", "seed": "seed"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


@dataclass
class RunConfig:
    """Everything that determines a run's outputs; serialized into every report."""

    command: str
    problem: dict
    formulation: str
    p: int | None = None
    mesh: dict = field(default_factory=dict)
    ngp: int | None = None
    mode: str | None = None
    levels: list[int] | None = None
    density: int = analysis.DEFAULT_DENSITY
    jobs: int = 1

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise InvalidArgumentError(f"unknown run config keys {sorted(unknown)}")
        return cls(**data)

    def label(self) -> str:
        name = self.problem.get("id") or Path(self.problem.get("config", "custom")).stem
        tail = f"p{self.p}" if self.command == "solve" else f"{self.mode}sweep"
        return f"{name}-{self.formulation}-{tail}"


def parse_levels(text: str) -> list[int]:
    """``"1..10"`` (inclusive range) or a comma list such as ``"1,2,4"``."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            levels = list(range(int(lo), int(hi) + 1))
        else:
            levels = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad levels '{text}'; use 'a..b' or 'a,b,c'") from None
    if not levels or min(levels) < 1:
        raise argparse.ArgumentTypeError(f"levels must be positive integers, got '{text}'")
    return levels


def _add_problem_args(sp: argparse.ArgumentParser, with_p: bool = True) -> None:
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--problem", choices=PROBLEM_IDS, help="canonical problem id")
    src.add_argument("--config", help="JSON problem description (custom constant-coefficient problem)")
    sp.add_argument("--formulation", choices=FORMULATION_CHOICES, default="single-field")
    if with_p:
        sp.add_argument("--p", type=int, required=True, help="polynomial order")
    sp.add_argument("--ngp", type=int, help="Gauss points per direction (default p+1 or p+2)")
    sp.add_argument("--nx", type=int)
    sp.add_argument("--ny", type=int)
    sp.add_argument("--ne", type=int, help="number of 1D elements")
    sp.add_argument("--hole-n", type=int, dest="hole_n", help="hole mesh subdivision")
    sp.add_argument("--jitter", type=float, help="vertex jitter amplitude (lepotier)")
    sp.add_argument("--seed", type=int, help="jitter seed (lepotier)")
    sp.add_argument("--k1", type=float, help="hole problem principal diffusivity k1")
    sp.add_argument("--k2", type=float, help="hole problem principal diffusivity k2")
    sp.add_argument("--alpha", type=float, help="decay1d decay coefficient")
    sp.add_argument("--density", type=int, default=analysis.DEFAULT_DENSITY, help="scan points per direction")
    sp.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dmpfem", description="Maximum-principle audits of spectral/hp Galerkin and least-squares solvers.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("list-problems", help="list the canonical problems")

    sp = sub.add_parser("solve", help="assemble, solve, audit and export one run")
    _add_problem_args(sp)
    sp.add_argument("--expect-nonneg", action="store_true", help="exit 2 if the field goes negative")

    sw = sub.add_parser("sweep", help="minimum concentration under p- or h-refinement")
    _add_problem_args(sw, with_p=False)
    sw.add_argument("--mode", choices=("p", "h"), default="p")
    sw.add_argument("--levels", type=parse_levels, default=parse_levels("1..10"))
    sw.add_argument("--p", type=int, default=1, help="order for h-mode sweeps")
    sw.add_argument("--jobs", type=int, default=1)

    au = sub.add_parser("audit", help="re-audit a stored solution dump")
    au.add_argument("dump", help="solution.json written by 'solve'")
    au.add_argument("--density", type=int, default=analysis.DEFAULT_DENSITY)
    au.add_argument("--expect-nonneg", action="store_true")

    rp = sub.add_parser("replay", help="rerun the RunConfig stored in a report.json")
    rp.add_argument("report")
    rp.add_argument("--out", help="output directory")

    sub.add_parser("verify", help="run the built-in invariant checks")
    return parser


def config_from_args(args) -> RunConfig:
    if args.config:
        ref = {"config": str(Path(args.config).resolve())}
    else:
        params = {}
        if args.k1 is not None or args.k2 is not None:
            params = {"k1": args.k1 if args.k1 is not None else 1.0, "k2": args.k2 if args.k2 is not None else 100.0}
        if args.alpha is not None:
            params["alpha"] = args.alpha
        ref = {"id": args.problem, "params": params}
    mesh = {key: getattr(args, flag) for flag, key in MESH_FLAGS.items() if getattr(args, flag) is not None}
    form = assembly.as_formulation(args.formulation).kind
    if args.command == "solve":
        return RunConfig("solve", ref, form, args.p, mesh, args.ngp, density=args.density)
    return RunConfig("sweep", ref, form, args.p, mesh, args.ngp, args.mode, list(args.levels), args.density, args.jobs)


def output_dir(cfg: RunConfig, override: str | None) -> Path:
    if override:
        return Path(override)
    root = Path(os.environ.get("DMPFEM_OUT", "out"))
    return root / cfg.label()


def run_solve(cfg: RunConfig, out: Path) -> tuple[dict, analysis.DmpReport]:
    problem = resolve_problem(cfg.problem)
    mesh = problem.build_mesh(**cfg.mesh) if cfg.mesh else problem.build_mesh()
    sol, solve_rep = analysis.solve_problem(problem, cfg.formulation, cfg.p, mesh, cfg.ngp)
    dmp = analysis.scan_extrema(sol, max(cfg.density, cfg.p + 1))
    files = [
        export.write_vtk(export.build_viz(sol), out / "solution.vtk", title=cfg.label()),
        export.write_csv(dmp, out / "dmp.csv"),
        export.write_json(export.solution_dict(sol, cfg.problem), out / "solution.json"),
    ]
    report = export.run_report(cfg.to_dict(), mesh.describe(), solve_rep, dmp, files, out)
    export.write_json(report, out / "report.json")
    return report, dmp


def run_sweep(cfg: RunConfig, out: Path) -> tuple[dict, analysis.SweepTable]:
    problem = resolve_problem(cfg.problem)
    table = analysis.sweep(problem, cfg.formulation, cfg.mode, cfg.levels,
                           {"mesh": cfg.mesh, "p": cfg.p, "ngp": cfg.ngp, "density": cfg.density, "jobs": cfg.jobs})
    files = [export.write_csv(table, out / "sweep.csv")]
    report = export.run_report(cfg.to_dict(), problem.build_mesh(**cfg.mesh).describe(), None, None, files, out)
    report["sweep"] = {"mode": table.mode, "complete": table.complete, "error": table.error}
    export.write_json(report, out / "report.json")
    return report, table


def _nonneg_failed(dmp: analysis.DmpReport) -> bool:
    return dmp.min_value < -analysis.VERDICT_TOL


def cmd_list(_args) -> int:
    for pid in PROBLEM_IDS:
        print(f"{pid:12s} {PROBLEM_DESCRIPTIONS[pid]}")
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg = config_from_args(args)
    out = output_dir(cfg, args.out)
    _, dmp = run_solve(cfg, out)
    v = dmp.verdicts
    print(f"min {dmp.min_value:.6e} at {dmp.min_location}  max {dmp.max_value:.6e}")
    print("verdicts: " + ", ".join(f"{k}={v[k]}" for k in sorted(v)))
    print(f"outputs in {out}")
    if args.expect_nonneg and _nonneg_failed(dmp):
        print(f"nonnegativity violated: min {dmp.min_value:.3e}", file=sys.stderr)
        return EXIT_FAULT
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = config_from_args(args)
    out = output_dir(cfg, args.out)
    _, table = run_sweep(cfg, out)
    for r in table.rows:
        print(f"{r.level:3d} {r.formulation:9s} {r.min_concentration: .6e}")
    print(f"outputs in {out}")
    if not table.complete:
        print(f"sweep incomplete: {table.error}", file=sys.stderr)
        return EXIT_FAULT
    return EXIT_OK


def cmd_audit(args) -> int:
    data = export.read_json(args.dump)
    problem = resolve_problem(data["problem_ref"])
    sol = export.solution_from_dict(data, problem)
    dmp = analysis.scan_extrema(sol, max(args.density, sol.order + 1))
    print(export.json_text(dmp.to_dict()), end="")
    if args.expect_nonneg and _nonneg_failed(dmp):
        return EXIT_FAULT
    return EXIT_OK


def cmd_replay(args) -> int:
    report = export.read_json(args.report)
    cfg = RunConfig.from_dict(report["run_config"])
    out = Path(args.out) if args.out else Path(args.report).parent
    if cfg.command == "solve":
        run_solve(cfg, out)
    else:
        run_sweep(cfg, out)
    print(f"replayed into {out}")
    return EXIT_OK


def run_invariants() -> list[tuple[str, bool, str]]:
    """Quick self-checks of the numerical core; each item is (name, ok, detail)."""
    results = []
    worst = 0.0
    for p in range(1, 11):
        b = gll_nodes(p)
        inner = b.node_array[1:-1]
        if inner.size:
            worst = max(worst, float(np.max(np.abs(legendre(p, inner).derivative))))
    results.append(("GLL nodes are roots of L'_p (p <= 10)", worst < 1e-12, f"max |L'_p| = {worst:.2e}"))

    rng = np.random.default_rng(0)
    gap = 0.0
    for p in range(1, 11):
        vals, ders = tabulate_1d(gll_nodes(p), rng.uniform(-1, 1, 100))
        gap = max(gap, float(np.max(np.abs(vals.sum(1) - 1))), float(np.max(np.abs(ders.sum(1)))))
    results.append(("partition of unity and derivative sums", gap < 1e-12, f"max gap {gap:.2e}"))

    err = 0.0
    for ngp in range(1, 13):
        rule = gauss_rule(ngp)
        for k in range(2 * ngp):
            exact = 0.0 if k % 2 else 2.0 / (k + 1)
            err = max(err, abs(float(rule.weight_array @ rule.point_array**k) - exact))
    results.append(("Gauss exactness to degree 2n-1 (n <= 12)", err < 1e-12, f"max error {err:.2e}"))

    problem = canonical_problem("hole", k1=1.0, k2=100.0)
    mesh = problem.build_mesh(n=1)
    basis = gll_nodes(3).with_dim(2)
    gap1 = 0.0
    for e in range(3):
        emap = element_map(mesh, e)
        scale = float(np.max(np.abs(assembly.element_ls(emap, problem.coefficients, basis, gauss_rule(4), "ls1").matrix)))
        gap1 = max(gap1, assembly.voigt_discrepancy(emap, problem.coefficients, basis, gauss_rule(4), "ls1") / scale)
    results.append(("closed-form LS1 blocks match residual-operator path", gap1 < 1e-13,
                    f"max gap relative to max entry {gap1:.2e}"))

    be = canonical_problem("burman_ern")
    small = be.build_mesh(nx=4, ny=2)
    s1, _ = analysis.solve_problem(be, "ls1", 3, small)
    s2, _ = analysis.solve_problem(be, "ls2", 3, small)
    d = float(np.max(np.abs(s1.dof_vector() - s2.dof_vector())))
    results.append(("LS1 equals LS2 for D = I, alpha = 0", d < 1e-10, f"max DOF gap {d:.2e}"))

    dec = canonical_problem("decay1d")
    sol, rep = analysis.solve_problem(dec, "galerkin", 10)
    results.append(("decay1d p=10 solve residual", rep.relative_residual <= 1e-10, f"{rep.relative_residual:.2e}"))
    dmp = analysis.scan_extrema(sol)
    again = analysis.audit_dmp(analysis.DmpReport.from_dict(dmp.to_dict()), dec)
    results.append(("audit verdicts are a pure function of the report", again == dmp.verdicts, str(again)))
    return results


def cmd_verify(_args) -> int:
    failed = 0
    for name, ok, detail in run_invariants():
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}  ({detail})")
    return EXIT_OK if failed == 0 else EXIT_FAULT


COMMANDS = {"list-problems": cmd_list, "solve": cmd_solve, "sweep": cmd_sweep, "audit": cmd_audit,
            "replay": cmd_replay, "verify": cmd_verify}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except InvalidArgumentError as exc:
        print(f"dmpfem: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DmpFemError as exc:
        print(f"dmpfem: computation fault: {exc}", file=sys.stderr)
        return EXIT_FAULT


if __name__ == "__main__":
    sys.exit(main())
