"""Gauss-Legendre rules on [-1, 1] and tensor-product integration on the master element."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .basis import legendre, tensor_points
from .errors import ComputationError, InvalidArgumentError

MAX_NGP = 32
NEWTON_TOL = 1e-15


@dataclass(frozen=True)
class QuadratureRule:
    count: int
    points: tuple[float, ...]
    weights: tuple[float, ...]

    @property
    def point_array(self) -> np.ndarray:
        return np.array(self.points)

    @property
    def weight_array(self) -> np.ndarray:
        return np.array(self.weights)

    def tensor(self, dim: int) -> tuple[np.ndarray, np.ndarray]:
        """Points ``(count**dim, dim)`` and weights of the tensor rule, first axis fastest."""
        pts = tensor_points(self.point_array, dim)
        w = self.weight_array
        wts = w
        for _ in range(dim - 1):
            wts = np.outer(w, wts).ravel()
        return pts, wts


@lru_cache(maxsize=64)
def gauss_rule(ngp: int) -> QuadratureRule:
    """Classical ``ngp``-point Gauss-Legendre rule, exact for degree ``2 * ngp - 1``."""
    if not 1 <= ngp <= MAX_NGP:
        raise InvalidArgumentError(f"ngp must be in [1, {MAX_NGP}], got {ngp}")
    k = np.arange(1, ngp + 1)
    x = -np.cos(np.pi * (k - 0.25) / (ngp + 0.5))
    for _ in range(100):
        lp, dlp = legendre(ngp, x)
        step = lp / dlp
        x = x - step
        if np.max(np.abs(step)) < NEWTON_TOL:
            break
    else:
        raise ComputationError(f"Gauss-Legendre Newton failed for ngp={ngp}")
    x = np.sort(x)
    x = 0.5 * (x - x[::-1])
    if ngp % 2 == 1:
        x[ngp // 2] = 0.0
    dlp = legendre(ngp, x)[1]
    w = 2.0 / ((1.0 - x * x) * dlp * dlp)
    w = 0.5 * (w + w[::-1])
    return QuadratureRule(ngp, tuple(float(v) for v in x), tuple(float(v) for v in w))


def integrate_ref(f, ngp: int, dim: int = 1) -> float:
    """Integrate ``f`` over ``[-1, 1]^dim``; ``f`` receives one ``dim``-vector at a time."""
    if dim not in (1, 2, 3):
        raise InvalidArgumentError(f"dim must be 1, 2 or 3, got {dim}")
    pts, wts = gauss_rule(ngp).tensor(dim)
    return float(sum(w * f(pt) for pt, w in zip(pts, wts)))


def default_ngp(p: int, constant_coefficients: bool, kind: str = "galerkin") -> int:
    """Points per direction used by assembly when the caller gives no override.

    ``p + 1`` is enough for constant-coefficient Galerkin on affine elements;
    everything else gets one extra point to keep variable coefficients fully
    integrated.
    """
    if constant_coefficients and kind == "galerkin":
        return p + 1
    return p + 2


def check_full_integration(p: int, rule: QuadratureRule) -> None:
    """Central guard: no assembly call may under-integrate."""
    if rule.count < p + 1:
        raise InvalidArgumentError(
            f"quadrature with {rule.count} points under-integrates order {p} (need >= {p + 1})"
        )
