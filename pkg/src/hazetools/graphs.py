"""Pixel-graph Laplacian and refinement system assembly.

The refinement energy is

    E(t) = sum_x W(x) (t(x) - t_init(x))^2
         + lambda * sum_{(x,y) adjacent} (t(x) - t(y))^2 / max(||I(x)-I(y)||^2, floor)

over the 4-connected pixel grid. Its smoothness half is a weighted graph
Laplacian L; minimizing E unconstrained gives the linear system
(diag(W) + lambda L) t = W * t_init, and restricting t - b >= 0 gives a
non-negative QP in x = t - b.
"""

from __future__ import annotations

import dataclasses

import numpy as np
import scipy.sparse as sp

from .image import ImageRgb, ScalarMap

__all__ = [
    "DEFAULT_COLOR_FLOOR",
    "SparseQuadratic",
    "build_laplacian",
    "assemble_wdc_system",
    "assemble_cwdc_qp",
    "smoothness_energy",
    "refinement_energy",
]

DEFAULT_COLOR_FLOOR = 1e-4


@dataclasses.dataclass
class SparseQuadratic:
    """Quadratic form 0.5 x'Qx + c'x with sparse symmetric PD matrix Q."""

    q: sp.csr_matrix
    c: np.ndarray

    def objective(self, x: np.ndarray) -> float:
        return float(0.5 * x @ (self.q @ x) + self.c @ x)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return self.q @ x + self.c

    @property
    def size(self) -> int:
        return self.c.size


def build_laplacian(image: ImageRgb, color_floor: float = DEFAULT_COLOR_FLOOR) -> sp.csr_matrix:
    """Graph Laplacian over 4-connected pixels with color-difference edge weights.

    Edge weight a(x, y) = 1 / max(||I(x) - I(y)||^2, color_floor); L = D - A.
    Diagonal entries are defined as the negated off-diagonal row sums, so row
    sums vanish to machine precision. A single-pixel image yields the 1x1 zero
    matrix.
    """
    if color_floor <= 0.0:
        raise ValueError("color_floor must be positive")
    h, w = image.height, image.width
    n = h * w
    idx = np.arange(n).reshape(h, w)
    data = image.data

    rows_list = []
    cols_list = []
    vals_list = []
    if w > 1:
        dh = ((data[:, 1:, :] - data[:, :-1, :]) ** 2).sum(axis=2)
        ah = 1.0 / np.maximum(dh, color_floor)
        i = idx[:, :-1].ravel()
        j = idx[:, 1:].ravel()
        a = ah.ravel()
        rows_list += [i, j]
        cols_list += [j, i]
        vals_list += [a, a]
    if h > 1:
        dv = ((data[1:, :, :] - data[:-1, :, :]) ** 2).sum(axis=2)
        av = 1.0 / np.maximum(dv, color_floor)
        i = idx[:-1, :].ravel()
        j = idx[1:, :].ravel()
        a = av.ravel()
        rows_list += [i, j]
        cols_list += [j, i]
        vals_list += [a, a]

    if not rows_list:
        return sp.csr_matrix((n, n), dtype=np.float64)

    rows = np.concatenate(rows_list)
    cols = np.concatenate(cols_list)
    vals = np.concatenate(vals_list)
    adjacency = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    degree = np.asarray(adjacency.sum(axis=1)).ravel()
    lap = sp.diags(degree) - adjacency
    return lap.tocsr()


def assemble_wdc_system(
    weights: ScalarMap,
    t_init: ScalarMap,
    laplacian: sp.csr_matrix,
    lambda_: float,
) -> tuple[sp.csr_matrix, np.ndarray]:
    """Normal equations of the unconstrained refinement: (diag(W) + lambda L, W * t_init)."""
    w = weights.data.ravel()
    if w.size != laplacian.shape[0]:
        raise ValueError("weights and Laplacian dimensions disagree")
    mat = (sp.diags(w) + lambda_ * laplacian).tocsr()
    rhs = w * t_init.data.ravel()
    return mat, rhs


def assemble_cwdc_qp(
    weights: ScalarMap,
    t_init: ScalarMap,
    bound: ScalarMap,
    laplacian: sp.csr_matrix,
    lambda_: float,
) -> SparseQuadratic:
    """Bound-constrained refinement as a QP in x = t - b, feasible set x >= 0.

    Q = 2 diag(W) + 2 lambda L and c = 2 W (b - t_init) + 2 lambda L b; with
    these, 0.5 x'Qx + c'x equals the refinement energy at t = x + b up to a
    constant that does not depend on x.
    """
    w = weights.data.ravel()
    b = bound.data.ravel()
    ti = t_init.data.ravel()
    if w.size != laplacian.shape[0]:
        raise ValueError("weights and Laplacian dimensions disagree")
    q = (2.0 * sp.diags(w) + 2.0 * lambda_ * laplacian).tocsr()
    c = 2.0 * w * (b - ti) + 2.0 * lambda_ * (laplacian @ b)
    return SparseQuadratic(q=q, c=c)


def smoothness_energy(t: np.ndarray, laplacian: sp.csr_matrix) -> float:
    """t' L t, which equals the weighted sum of squared neighbor differences."""
    v = np.asarray(t, dtype=np.float64).ravel()
    return float(v @ (laplacian @ v))


def refinement_energy(
    t: np.ndarray,
    weights: ScalarMap,
    t_init: ScalarMap,
    laplacian: sp.csr_matrix,
    lambda_: float,
) -> float:
    """Full energy E(t); reference implementation used by tests and diagnostics."""
    v = np.asarray(t, dtype=np.float64).ravel()
    w = weights.data.ravel()
    ti = t_init.data.ravel()
    data_term = float(np.sum(w * (v - ti) ** 2))
    return data_term + lambda_ * smoothness_energy(v, laplacian)
