"""Legendre polynomials, Gauss-Lobatto-Legendre nodes and spectral Lagrange bases.

Local node ordering in 2D/3D is ascending in each coordinate with the first
coordinate running fastest::

    i = j + k * (p + 1) + l * (p + 1) ** 2        (0-based)

which is the usual 1-based ``i = j + (k - 1)(p + 1)`` map shifted by one.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import NamedTuple

import numpy as np

from .errors import ComputationError, InvalidArgumentError

GLL_TOL = 1e-14
GLL_MAX_ITER = 100
NODE_SNAP = 4 * np.finfo(float).eps


class LegendreEval(NamedTuple):
    value: np.ndarray | float
    derivative: np.ndarray | float


class BasisEval(NamedTuple):
    values: np.ndarray
    gradients: np.ndarray


def legendre(p: int, xi):
    """Evaluate ``L_p`` and ``L_p'`` with the three-term recurrence.

    Works elementwise on arrays. The derivative uses
    ``L'_{k+1} = L'_{k-1} + (2k + 1) L_k`` which has no trouble at the endpoints.
    """
    if p < 0:
        raise InvalidArgumentError(f"Legendre order must be >= 0, got {p}")
    x = np.asarray(xi, dtype=float)
    l_prev, l_cur = np.ones_like(x), x.copy()
    d_prev, d_cur = np.zeros_like(x), np.ones_like(x)
    if p == 0:
        value, deriv = l_prev, d_prev
    else:
        for k in range(1, p):
            l_next = ((2 * k + 1) * x * l_cur - k * l_prev) / (k + 1)
            d_next = d_prev + (2 * k + 1) * l_cur
            l_prev, l_cur = l_cur, l_next
            d_prev, d_cur = d_cur, d_next
        value, deriv = l_cur, d_cur
    if value.ndim == 0:
        return LegendreEval(float(value), float(deriv))
    return LegendreEval(value, deriv)


def _gll_interior(p: int) -> np.ndarray:
    # Newton on g = (1 - x^2) L'_p, using g' = -p (p + 1) L_p.
    x = -np.cos(np.pi * np.arange(1, p) / p)
    for _ in range(GLL_MAX_ITER):
        lp, dlp = legendre(p, x)
        step = (1.0 - x * x) * dlp / (p * (p + 1) * lp)
        x = x + step
        if np.max(np.abs(step), initial=0.0) < GLL_TOL:
            break
    else:
        residual = np.max(np.abs((1.0 - x * x) * legendre(p, x)[1]), initial=0.0)
        raise ComputationError(
            f"GLL Newton iteration did not converge for p={p} (residual {residual:.3e})"
        )
    return x


@dataclass(frozen=True)
class SpectralBasis:
    """GLL nodal basis of order ``order`` on the master element ``[-1, 1]^dim``."""

    order: int
    nodes: tuple[float, ...]
    dim: int = 1

    @property
    def p(self) -> int:
        return self.order

    @property
    def n1d(self) -> int:
        return self.order + 1

    @property
    def n_local(self) -> int:
        return self.n1d**self.dim

    @cached_property
    def node_array(self) -> np.ndarray:
        return np.array(self.nodes)

    @cached_property
    def bary_weights(self) -> np.ndarray:
        x = self.node_array
        diff = x[:, None] - x[None, :]
        np.fill_diagonal(diff, 1.0)
        return 1.0 / np.prod(diff, axis=1)

    @cached_property
    def diff_matrix(self) -> np.ndarray:
        """``D[m, j] = phi_j'(xi_m)`` using the negative-sum trick on the diagonal."""
        x, w = self.node_array, self.bary_weights
        diff = x[:, None] - x[None, :]
        np.fill_diagonal(diff, 1.0)
        d = (w[None, :] / w[:, None]) / diff
        np.fill_diagonal(d, 0.0)
        np.fill_diagonal(d, -d.sum(axis=1))
        return d

    def with_dim(self, dim: int) -> "SpectralBasis":
        return SpectralBasis(self.order, self.nodes, dim)


@lru_cache(maxsize=64)
def gll_nodes(p: int) -> SpectralBasis:
    """Return the order-``p`` GLL basis: ``{-1, +1}`` plus the roots of ``L_p'``."""
    if p < 1:
        raise InvalidArgumentError(f"GLL order must be >= 1, got {p}")
    x = np.concatenate(([-1.0], _gll_interior(p), [1.0]))
    x = np.sort(x)
    # enforce exact symmetry
    x = 0.5 * (x - x[::-1])
    if p % 2 == 0:
        x[p // 2] = 0.0
    return SpectralBasis(p, tuple(float(v) for v in x), 1)


def tabulate_1d(basis: SpectralBasis, xi) -> tuple[np.ndarray, np.ndarray]:
    """Values and derivatives of all 1D interpolants at the points ``xi``.

    Returns two ``(npts, p + 1)`` arrays. Uses the barycentric form; a point
    that coincides with a node gets the exact Kronecker row. Derivatives are
    the nodal derivatives interpolated back, which is exact because ``phi_j'``
    has degree ``p - 1``.
    """
    pts = np.atleast_1d(np.asarray(xi, dtype=float))
    x, w = basis.node_array, basis.bary_weights
    diff = pts[:, None] - x[None, :]
    # points within a few ulps of a node take the node's exact row; closer
    # than that, w / diff can overflow while the true value is already delta_ij
    hit = np.abs(diff) <= NODE_SNAP
    hit &= np.abs(diff) == np.abs(diff).min(axis=1, keepdims=True)
    on_node = hit.any(axis=1)
    safe = np.where(hit, 1.0, diff)
    terms = w[None, :] / safe
    values = terms / terms.sum(axis=1, keepdims=True)
    values[on_node] = hit[on_node].astype(float)
    derivs = values @ basis.diff_matrix
    return values, derivs


def lagrange_1d(basis: SpectralBasis, xi: float) -> BasisEval:
    values, derivs = tabulate_1d(basis, [xi])
    return BasisEval(values[0], derivs[0][:, None])


def tensor_tabulate(
    basis: SpectralBasis, points_per_axis: list[np.ndarray]
) -> tuple[np.ndarray, np.ndarray]:
    """Tabulate the tensor basis on a tensor grid of points.

    ``points_per_axis`` holds one 1D point array per coordinate. Grid points are
    ordered with the first axis fastest, like the local nodes. Returns values
    ``(npts, n)`` and reference gradients ``(npts, n, dim)``.
    """
    dim = len(points_per_axis)
    tabs = [tabulate_1d(basis, pts) for pts in points_per_axis]
    values = _kron_rows([t[0] for t in tabs])
    grads = []
    for d in range(dim):
        factors = [t[1] if a == d else t[0] for a, t in enumerate(tabs)]
        grads.append(_kron_rows(factors))
    return values, np.stack(grads, axis=-1)


def _kron_rows(factors: list[np.ndarray]) -> np.ndarray:
    # factors[a] has shape (npts_a, n1d); result[(q_0 + q_1*n_0 ...), (j_0 + j_1*(p+1) ...)]
    out = factors[0]
    for f in factors[1:]:
        out = np.einsum("bk,aj->bakj", f, out).reshape(
            f.shape[0] * out.shape[0], f.shape[1] * out.shape[1]
        )
    return out


def tensor_basis(basis: SpectralBasis, dim: int, point) -> BasisEval:
    """Evaluate the 2D/3D tensor-product interpolants at a single point."""
    if dim not in (2, 3):
        raise InvalidArgumentError(f"tensor basis dimension must be 2 or 3, got {dim}")
    pt = np.asarray(point, dtype=float)
    if pt.shape != (dim,):
        raise InvalidArgumentError(f"point must have {dim} coordinates")
    values, grads = tensor_tabulate(basis, [pt[a : a + 1] for a in range(dim)])
    return BasisEval(values[0], grads[0])


def tensor_points(pts_1d: np.ndarray, dim: int) -> np.ndarray:
    """Coordinates of the tensor grid built from ``pts_1d``, first axis fastest."""
    grids = np.meshgrid(*([pts_1d] * dim), indexing="ij")
    return np.stack([g.ravel(order="F") for g in grids], axis=-1)
