"""Affine geometry of d-simplices.

Everything here works on single cells (``Simplex``/``BaryFrame``) and, for the
mesh-level kernels, on stacked arrays of cells (``batch_frames``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np


class DegenerateSimplexError(ValueError):
    """Raised when a cell's edge matrix is (numerically) singular."""

    def __init__(self, message, cell=None):
        super().__init__(message)
        self.cell = cell


@dataclass(frozen=True)
class Simplex:
    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1] + 1:
            raise ValueError(f"expected (d+1, d) vertex array, got shape {v.shape}")
        if v.shape[1] < 2:
            raise ValueError("only d >= 2 is supported")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    def edge(self, i: int, j: int) -> np.ndarray:
        """Edge vector from vertex ``i`` to vertex ``j``."""
        return self.vertices[j] - self.vertices[i]


@dataclass(frozen=True)
class BaryFrame:
    """Barycentric data of a simplex: gradients of lambda_i and the measure."""

    simplex: Simplex
    grads: np.ndarray
    measure: float
    signed_det: float = field(repr=False)

    @property
    def dim(self) -> int:
        return self.simplex.dim

    @property
    def vertices(self) -> np.ndarray:
        return self.simplex.vertices

    def edge(self, i: int, j: int) -> np.ndarray:
        return self.simplex.edge(i, j)

    def edges(self) -> np.ndarray:
        """All edge vectors, ``E[i, j] = a_j - a_i``."""
        v = self.vertices
        return v[None, :, :] - v[:, None, :]

    def barycentric(self, x) -> np.ndarray:
        """Barycentric coordinates of physical point(s) ``x``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        lam = (x - self.vertices[0]) @ self.grads.T
        lam[:, 0] += 1.0
        return lam

    def to_physical(self, lam) -> np.ndarray:
        return np.asarray(lam, dtype=float) @ self.vertices

    def metric(self) -> np.ndarray:
        """Gram matrix ``grad(lambda_i) . grad(lambda_j)``."""
        return self.grads @ self.grads.T


@dataclass(frozen=True)
class Face:
    index: int
    vertices: np.ndarray
    area: float
    normal: np.ndarray

    @property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)


def _edge_matrix(vertices):
    return (vertices[..., 1:, :] - vertices[..., :1, :]).swapaxes(-1, -2)


def bary_frame(simplex, *, threshold: float = 1e-14, cell=None) -> BaryFrame:
    """Compute the barycentric gradients and measure of ``simplex``.

    The determinant test is relative: ``|det| < threshold * scale**d`` with
    ``scale`` the longest edge rejects the cell.
    """
    if not isinstance(simplex, Simplex):
        simplex = Simplex(simplex)
    d = simplex.dim
    B = _edge_matrix(simplex.vertices)
    det = float(np.linalg.det(B))
    scale = _longest_edge(simplex.vertices)
    if abs(det) < threshold * scale**d:
        where = f" (cell {cell})" if cell is not None else ""
        raise DegenerateSimplexError(f"degenerate simplex{where}: det={det:.3e}", cell)
    # rows of inv(B) are grad(lambda_1..d); lambda_0 = 1 - sum of the rest
    Binv = np.linalg.inv(B)
    grads = np.vstack([-Binv.sum(axis=0), Binv])
    grads.setflags(write=False)
    return BaryFrame(simplex, grads, abs(det) / factorial(d), det)


def _longest_edge(v):
    diff = v[None, :, :] - v[:, None, :]
    return float(np.sqrt((diff**2).sum(-1)).max())


def face(frame: BaryFrame, i: int) -> Face:
    """The facet opposite vertex ``i`` (0-based) with its outward unit normal."""
    d = frame.dim
    if not 0 <= i <= d:
        raise IndexError(f"vertex index {i} out of range for a {d}-simplex")
    g = frame.grads[i]
    gnorm = np.linalg.norm(g)
    # |grad lambda_i| = |F_i| / (d |K|)
    area = gnorm * d * frame.measure
    verts = np.delete(frame.vertices, i, axis=0)
    return Face(i, verts, float(area), -g / gnorm)


def integrate_bary_monomial(frame, exponents) -> float:
    """Exact integral of prod(lambda_i ** alpha_i) over the simplex.

    ``frame`` may also be a bare ``(dim, measure)`` pair.
    """
    alpha = np.asarray(exponents, dtype=int)
    if np.any(alpha < 0):
        raise ValueError("exponents must be non-negative")
    if isinstance(frame, BaryFrame):
        d, measure = frame.dim, frame.measure
    else:
        d, measure = frame
    if alpha.size != d + 1:
        raise ValueError(f"need {d + 1} exponents, got {alpha.size}")
    return measure * monomial_factor(tuple(alpha), d)


def monomial_factor(alpha, d: int) -> float:
    """``d! prod(alpha_i!) / (|alpha| + d)!``, the integral over a unit-measure cell."""
    num = factorial(d)
    for a in alpha:
        num *= factorial(a)
    return num / factorial(sum(alpha) + d)


# --- stacked cells -----------------------------------------------------------

@dataclass(frozen=True)
class FrameBatch:
    """Barycentric data of many cells at once."""

    vertices: np.ndarray   # (nc, d+1, d)
    grads: np.ndarray      # (nc, d+1, d)
    measure: np.ndarray    # (nc,)
    signed_det: np.ndarray

    @property
    def dim(self) -> int:
        return self.vertices.shape[-1]

    def __len__(self):
        return self.vertices.shape[0]

    def metric(self) -> np.ndarray:
        return np.einsum("cik,cjk->cij", self.grads, self.grads)

    def edges(self) -> np.ndarray:
        v = self.vertices
        return v[:, None, :, :] - v[:, :, None, :]

    def frame(self, c: int) -> BaryFrame:
        return BaryFrame(Simplex(self.vertices[c]), self.grads[c], float(self.measure[c]),
                         float(self.signed_det[c]))


def batch_frames(vertices, *, threshold: float = 1e-14) -> FrameBatch:
    vertices = np.asarray(vertices, dtype=float)
    d = vertices.shape[-1]
    B = _edge_matrix(vertices)
    det = np.linalg.det(B)
    diff = vertices[:, None, :, :] - vertices[:, :, None, :]
    scale = np.sqrt((diff**2).sum(-1)).reshape(len(vertices), -1).max(axis=1)
    bad = np.flatnonzero(np.abs(det) < threshold * scale**d)
    if bad.size:
        raise DegenerateSimplexError(
            f"degenerate simplex (cell {bad[0]}): det={det[bad[0]]:.3e}", int(bad[0]))
    Binv = np.linalg.inv(B)
    grads = np.concatenate([-Binv.sum(axis=1, keepdims=True), Binv], axis=1)
    return FrameBatch(vertices, grads, np.abs(det) / factorial(d), det)
