"""Coefficient fields, boundary data and the catalog of benchmark problems.

Coefficient callables are vectorized: they take an ``(npts, dim)`` array of
physical points and return ``(npts,)`` scalars or ``(npts, dim, dim)`` tensors.
"""
from __future__ import annotations

import inspect
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import mesh as meshlib
from .errors import DegenerateCoefficientError, InvalidArgumentError

EIG_FLOOR = 1e-14
LEPOTIER_EPS = 1e-3
HOLE_THETA = math.pi / 6
HOLE_PARAMS = ((1.0, 100.0), (1.0, 10000.0))

PROBLEM_IDS = ("decay1d", "forced1d", "burman_ern", "lepotier", "hole")


@dataclass(frozen=True, eq=False)
class CoefficientField:
    dim: int
    alpha: Callable[[np.ndarray], np.ndarray]
    diffusivity: Callable[[np.ndarray], np.ndarray]
    forcing: Callable[[np.ndarray], np.ndarray]
    alpha_max: float
    ellipticity: tuple[float, float]
    constant: bool = False
    forcing_sign: int | None = 1
    # physical coordinates, one tuple per axis, where the forcing jumps; the load
    # integral is split there so a discontinuity never sits inside a Gauss rule
    forcing_breaks: tuple[tuple[float, ...], ...] | None = None

    @property
    def alpha_bound(self) -> float:
        """Strict upper bound on the decay coefficient."""
        return float(np.nextafter(self.alpha_max, np.inf))

    @property
    def decay_free(self) -> bool:
        return self.alpha_max == 0.0


@dataclass(frozen=True, eq=False)
class BoundaryData:
    dirichlet: Callable[[np.ndarray, str], np.ndarray]
    neumann: Callable[[np.ndarray], np.ndarray] | None = None


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    name: str
    coefficients: CoefficientField
    boundary: BoundaryData
    mesh_builder: Callable[..., meshlib.Mesh]
    analytic: Callable[[np.ndarray], np.ndarray] | None = None
    params: dict = field(default_factory=dict)
    dirichlet_nonneg: bool = True
    sample_box: tuple = ()

    def build_mesh(self, **overrides) -> meshlib.Mesh:
        accepted = set(inspect.signature(self.mesh_builder).parameters)
        unknown = set(overrides) - accepted
        if unknown:
            raise InvalidArgumentError(
                f"mesh option(s) {sorted(unknown)} not used by problem '{self.name}' "
                f"(accepted: {sorted(accepted) or 'none'})"
            )
        return self.mesh_builder(**overrides)

    def sample_points(self, n: int, rng: np.random.Generator) -> np.ndarray:
        lo, hi = np.array(self.sample_box[0], dtype=float), np.array(self.sample_box[1], dtype=float)
        return lo + (hi - lo) * rng.random((n, len(lo)))


def constant_field(value: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda x: np.full(len(x), float(value))


def constant_tensor(matrix) -> Callable[[np.ndarray], np.ndarray]:
    m = np.array(matrix, dtype=float)
    return lambda x: np.broadcast_to(m, (len(x), *m.shape)).copy()


def box_indicator(box, value: float = 1.0) -> Callable[[np.ndarray], np.ndarray]:
    """Closed-box indicator ``value * 1[x in box]``; ``box`` is one (lo, hi) pair per axis."""
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)

    def f(x):
        inside = np.all((x >= lo) & (x <= hi), axis=1)
        return np.where(inside, float(value), 0.0)

    return f


def box_breaks(box) -> tuple[tuple[float, ...], ...]:
    """Jump coordinates of a box indicator, one ``(lo, hi)`` tuple per axis."""
    return tuple((float(lo), float(hi)) for lo, hi in box)


def analytic_decay1d(alpha: float, x):
    """Exact solution of ``alpha c - c'' = 0`` on (0, 1) with ``c(0) = c(1) = 1``.

    Written with decaying exponentials only so large ``alpha`` cannot overflow.
    """
    if alpha <= 0:
        raise InvalidArgumentError(f"decay coefficient must be > 0, got {alpha}")
    s = math.sqrt(alpha)
    x = np.asarray(x, dtype=float)
    return (np.exp(-s * (1.0 - x)) + np.exp(-s * x)) / (1.0 + math.exp(-s))


def analytic_forced1d(x):
    x = np.asarray(x, dtype=float)
    e20 = math.exp(-20.0)
    return -2.0 * np.exp(-10.0 * (x + 1.0)) - (1.0 - e20) * x + (1.0 + e20)


def lepotier_diffusivity(x, y, eps: float = LEPOTIER_EPS) -> np.ndarray:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    dxx = y * y + eps * x * x
    dyy = x * x + eps * y * y
    dxy = -(1.0 - eps) * x * y
    return np.stack([np.stack([dxx, dxy], -1), np.stack([dxy, dyy], -1)], -2)


def rotated_diffusivity(k1: float, k2: float, theta: float = HOLE_THETA) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, s], [-s, c]])
    return rot @ np.diag([k1, k2]) @ rot.T


def _sym2_eig(d: np.ndarray):
    a, b, c = d[..., 0, 0], d[..., 0, 1], d[..., 1, 1]
    mean = 0.5 * (a + c)
    rad = np.hypot(0.5 * (a - c), b)
    phi = 0.5 * np.arctan2(2.0 * b, a - c)
    return mean + rad, mean - rad, np.cos(phi), np.sin(phi)


def d_inv_sqrt(d) -> np.ndarray:
    """``D^{-1/2}`` of symmetric positive-definite 1x1 or 2x2 tensors (batched on leading axes)."""
    d = np.asarray(d, dtype=float)
    if d.shape[-1] == 1:
        if np.any(d[..., 0, 0] <= EIG_FLOOR):
            raise DegenerateCoefficientError("diffusivity is not positive")
        return 1.0 / np.sqrt(d)
    if d.shape[-2:] != (2, 2):
        raise InvalidArgumentError(f"expected 2x2 tensors, got shape {d.shape}")
    lam1, lam2, cs, sn = _sym2_eig(d)
    if np.any(lam2 <= EIG_FLOOR):
        raise DegenerateCoefficientError(
            f"diffusivity eigenvalue {float(np.min(lam2)):.3e} below {EIG_FLOOR:g}"
        )
    r1, r2 = 1.0 / np.sqrt(lam1), 1.0 / np.sqrt(lam2)
    # eigenvectors (cs, sn) for lam1 and (-sn, cs) for lam2
    m00 = r1 * cs * cs + r2 * sn * sn
    m11 = r1 * sn * sn + r2 * cs * cs
    m01 = (r1 - r2) * cs * sn
    return np.stack([np.stack([m00, m01], -1), np.stack([m01, m11], -1)], -2)


def _dirichlet_by_region(values: dict[str, float], default: float = 0.0):
    def g(x, region):
        return np.full(len(x), float(values.get(region, default)))

    return g


def _decay1d(alpha: float = 1000.0) -> ProblemSpec:
    coeff = CoefficientField(
        1, constant_field(alpha), constant_tensor([[1.0]]), constant_field(0.0),
        alpha_max=alpha, ellipticity=(1.0, 1.0), constant=True, forcing_sign=0,
    )
    return ProblemSpec(
        "decay1d", coeff, BoundaryData(_dirichlet_by_region({"outer": 1.0})),
        lambda ne=4: meshlib.build_interval_mesh(0.0, 1.0, ne),
        analytic=lambda x: analytic_decay1d(alpha, np.asarray(x)[..., 0]),
        params={"alpha": alpha}, sample_box=((0.0,), (1.0,)),
    )


def _forced1d() -> ProblemSpec:
    coeff = CoefficientField(
        1, constant_field(0.0), constant_tensor([[1.0]]),
        lambda x: 200.0 * np.exp(-10.0 * (x[:, 0] + 1.0)),
        alpha_max=0.0, ellipticity=(1.0, 1.0), constant=True, forcing_sign=1,
    )
    return ProblemSpec(
        "forced1d", coeff, BoundaryData(_dirichlet_by_region({})),
        lambda ne=1: meshlib.build_interval_mesh(-1.0, 1.0, ne),
        analytic=lambda x: analytic_forced1d(np.asarray(x)[..., 0]),
        sample_box=((-1.0,), (1.0,)),
    )


def _burman_ern() -> ProblemSpec:
    coeff = CoefficientField(
        2, constant_field(0.0), constant_tensor(np.eye(2)),
        box_indicator([(0.0, 0.5), (0.0, 0.075)]),
        alpha_max=0.0, ellipticity=(1.0, 1.0), constant=True, forcing_sign=1,
        forcing_breaks=box_breaks([(0.0, 0.5), (0.0, 0.075)]),
    )
    return ProblemSpec(
        "burman_ern", coeff, BoundaryData(_dirichlet_by_region({})),
        lambda nx=20, ny=6: meshlib.build_rect_mesh(0.0, 0.0, 1.0, 0.3, nx, ny),
        sample_box=((0.0, 0.0), (1.0, 0.3)),
    )


def _lepotier_mesh(nx=8, ny=8, jitter=0.0, seed=42):
    m = meshlib.build_rect_mesh(0.0, 0.0, 0.5, 0.5, nx, ny)
    return meshlib.jitter_mesh(m, jitter, seed) if jitter > 0 else m


def _lepotier(eps: float = LEPOTIER_EPS) -> ProblemSpec:
    coeff = CoefficientField(
        2, constant_field(0.0), lambda x: lepotier_diffusivity(x[:, 0], x[:, 1], eps),
        box_indicator([(0.125, 0.375), (0.125, 0.375)]),
        alpha_max=0.0,
        # eigenvalues are r^2 and eps r^2 with r = |x|; corner ball of radius 1e-6 excluded
        ellipticity=(eps * 1e-12, 0.5), constant=False, forcing_sign=1,
        forcing_breaks=box_breaks([(0.125, 0.375), (0.125, 0.375)]),
    )
    return ProblemSpec(
        "lepotier", coeff, BoundaryData(_dirichlet_by_region({})), _lepotier_mesh,
        params={"eps": eps}, sample_box=((0.0, 0.0), (0.5, 0.5)),
    )


def _hole(k1: float = 1.0, k2: float = 100.0) -> ProblemSpec:
    if (float(k1), float(k2)) not in HOLE_PARAMS:
        raise InvalidArgumentError(f"hole problem supports (k1, k2) in {HOLE_PARAMS}, got ({k1}, {k2})")
    d = rotated_diffusivity(k1, k2)
    coeff = CoefficientField(
        2, constant_field(0.0), constant_tensor(d), constant_field(0.0),
        alpha_max=0.0, ellipticity=(min(k1, k2), max(k1, k2)), constant=True, forcing_sign=0,
    )
    return ProblemSpec(
        "hole", coeff, BoundaryData(_dirichlet_by_region({"outer": 0.0, "inner": 2.0})),
        lambda n=2: meshlib.build_hole_mesh(n),
        params={"k1": float(k1), "k2": float(k2), "theta": HOLE_THETA},
        sample_box=((0.0, 0.0), (1.0, 1.0)),
    )


def canonical_problem(problem_id: str, **params) -> ProblemSpec:
    builders = {
        "decay1d": _decay1d, "forced1d": _forced1d, "burman_ern": _burman_ern,
        "lepotier": _lepotier, "hole": _hole,
    }
    if problem_id not in builders:
        raise InvalidArgumentError(f"unknown problem '{problem_id}'; choose from {', '.join(PROBLEM_IDS)}")
    try:
        return builders[problem_id](**params)
    except TypeError as exc:
        raise InvalidArgumentError(f"bad parameters for {problem_id}: {exc}") from exc


def in_hole(x: np.ndarray) -> np.ndarray:
    return np.all((x > 4 / 9) & (x < 5 / 9), axis=-1)


PROBLEM_DESCRIPTIONS = {
    "decay1d": "1D decay, alpha=1000, D=1, f=0, c=1 at x=0 and x=1 (4 elements)",
    "forced1d": "1D pure diffusion on (-1,1), f=200 exp(-10(x+1)), c=0 at both ends (1 element)",
    "burman_ern": "2D isotropic diffusion on (0,1)x(0,0.3), f=1 on [0,0.5]x[0,0.075]",
    "lepotier": "2D heterogeneous anisotropic diffusion on (0,0.5)^2, eps=1e-3",
    "hole": "2D rotated anisotropic diffusion, unit square with a hole; params k1=1, k2 in {100, 10000}",
}


# ---------------------------------------------------------------------------
# custom problems from a JSON text config


def _polynomial(terms, dim):
    terms = [(float(t[0]), [int(e) for e in t[1:]]) for t in terms]
    for _, powers in terms:
        if len(powers) != dim:
            raise InvalidArgumentError("polynomial term needs one exponent per coordinate")

    def f(x):
        out = np.zeros(len(x))
        for coef, powers in terms:
            out += coef * np.prod(x ** np.array(powers), axis=1)
        return out

    return f


def load_problem_config(path) -> ProblemSpec:
    """Build a constant-coefficient problem from a JSON file.

    Keys: ``name``, ``alpha`` (float), ``diffusivity`` (dim x dim list),
    ``forcing`` (``{"type": "polynomial", "terms": [[coef, px, (py)], ...]}`` or
    ``{"type": "indicator", "box": [[lo, hi], ...], "value": v}``), ``dirichlet``
    (region -> constant), ``mesh`` (builder kwargs: ``interval`` a/b/ne or
    ``rect`` x0/y0/x1/y1/nx/ny).
    """
    cfg = json.loads(Path(path).read_text())
    try:
        d = np.array(cfg["diffusivity"], dtype=float)
        dim = d.shape[0]
        alpha = float(cfg.get("alpha", 0.0))
        forcing = cfg.get("forcing", {"type": "polynomial", "terms": []})
        if forcing["type"] == "polynomial":
            f = _polynomial(forcing["terms"], dim)
            breaks = None
            coefs = [t[0] for t in forcing["terms"]]
            sign = 0 if not coefs else (1 if all(c >= 0 for c in coefs) and all(
                all(e % 2 == 0 for e in t[1:]) for t in forcing["terms"]) else None)
        elif forcing["type"] == "indicator":
            value = float(forcing.get("value", 1.0))
            f = box_indicator(forcing["box"], value)
            breaks = box_breaks(forcing["box"])
            sign = 0 if value == 0 else (1 if value > 0 else -1)
        else:
            raise InvalidArgumentError(f"unknown forcing type {forcing['type']}")
        eig = np.linalg.eigvalsh(d)
        if eig[0] <= 0 or not np.allclose(d, d.T):
            raise InvalidArgumentError("diffusivity must be symmetric positive definite")
        mcfg = dict(cfg.get("mesh", {}))
        if dim == 1:
            a, b, ne = mcfg.get("a", 0.0), mcfg.get("b", 1.0), mcfg.get("ne", 4)
            builder = lambda ne=ne: meshlib.build_interval_mesh(a, b, ne)
            box = ((a,), (b,))
        else:
            r = {"x0": 0.0, "y0": 0.0, "x1": 1.0, "y1": 1.0, "nx": 8, "ny": 8, **mcfg}
            builder = lambda nx=r["nx"], ny=r["ny"]: meshlib.build_rect_mesh(r["x0"], r["y0"], r["x1"], r["y1"], nx, ny)
            box = ((r["x0"], r["y0"]), (r["x1"], r["y1"]))
        dvals = {k: float(v) for k, v in cfg.get("dirichlet", {}).items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"bad problem config {path}: {exc}") from exc
    coeff = CoefficientField(dim, constant_field(alpha), constant_tensor(d), f, alpha_max=alpha,
                             ellipticity=(float(eig[0]), float(eig[-1])), constant=True, forcing_sign=sign,
                             forcing_breaks=breaks)
    return ProblemSpec(cfg.get("name", Path(path).stem), coeff, BoundaryData(_dirichlet_by_region(dvals)),
                       builder, params={"config": str(path)},
                       dirichlet_nonneg=all(v >= 0 for v in dvals.values()), sample_box=box)


def resolve_problem(ref: dict) -> ProblemSpec:
    """Problem from a serializable reference: ``{"id": ..., "params": {...}}`` or ``{"config": path}``."""
    if "config" in ref:
        return load_problem_config(ref["config"])
    if "id" not in ref:
        raise InvalidArgumentError(f"problem reference needs 'id' or 'config', got {sorted(ref)}")
    return canonical_problem(ref["id"], **dict(ref.get("params", {})))
