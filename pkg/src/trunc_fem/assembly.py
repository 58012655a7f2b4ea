"""Global numbering, sparse assembly and clamped-boundary elimination."""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .element import (LocalDofLayout, _check_eps_mode, element_matrices, shape_coefficients,
                      shape_values_batch)
from .mesh import SimplicialMesh
from .quadrature import rule_for_degree

CHUNK = 16384


class NoFreeDofsError(ValueError):
    pass


@dataclass(frozen=True)
class DofMap:
    """Vertex ``v`` owns global DOFs ``v*(d+1)`` (value) and ``v*(d+1)+1+k`` (d/dx_k).

    All DOFs of boundary vertices are constrained; the rest are renumbered
    contiguously in global order.
    """

    dim: int
    nverts: int
    constrained: np.ndarray   # (ndofs,) bool
    free_index: np.ndarray    # (ndofs,) free number or -1
    free_dofs: np.ndarray     # (nfree,) global numbers

    @property
    def block(self) -> int:
        return self.dim + 1

    @property
    def ndofs(self) -> int:
        return self.block * self.nverts

    @property
    def nfree(self) -> int:
        return len(self.free_dofs)

    @property
    def nconstrained(self) -> int:
        return int(self.constrained.sum())

    def cell_dofs(self, cells) -> np.ndarray:
        """Global DOF numbers per cell in local layout order, ``(nc, (d+1)**2)``."""
        off = LocalDofLayout(self.dim).global_offsets()
        return cells[:, off[:, 0]] * self.block + off[:, 1]

    def expand(self, free_values) -> np.ndarray:
        """Full DOF vector with zeros at constrained DOFs."""
        full = np.zeros(self.ndofs)
        full[self.free_dofs] = free_values
        return full


def build_dof_map(mesh: SimplicialMesh) -> DofMap:
    block = mesh.dim + 1
    constrained = np.repeat(mesh.boundary_vertex, block)
    free_dofs = np.flatnonzero(~constrained)
    free_index = np.full(constrained.size, -1, dtype=np.int64)
    free_index[free_dofs] = np.arange(free_dofs.size)
    return DofMap(mesh.dim, mesh.nverts, constrained, free_index, free_dofs)


@dataclass(frozen=True)
class SparseSpdSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    eps: float
    mode: str
    dofmap: DofMap

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def _chunks(n, size=CHUNK):
    for start in range(0, n, size):
        yield slice(start, min(n, start + size))


def assemble(mesh: SimplicialMesh, dofmap: DofMap, eps: float, f=None, mode: str = "trunc",
             load_degree: int = 8) -> SparseSpdSystem:
    """Assemble ``b_h`` (or the full broken form) and ``(f, phi)`` on the free DOFs.

    ``f`` maps an ``(n, d)`` array of points to ``n`` values; ``None`` means zero.
    """
    _check_eps_mode(eps, mode)
    if load_degree < 4:
        raise ValueError("load rule degree must be at least 4")
    if dofmap.nfree == 0:
        raise NoFreeDofsError("mesh has no interior vertex, so there are no free DOFs")
    d = mesh.dim
    rule = rule_for_degree(d, load_degree)
    nfree = dofmap.nfree
    triplets = []
    rhs = np.zeros(nfree)
    for sl in _chunks(mesh.ncells):
        batch = mesh.frames(sl)
        A = element_matrices(batch, eps, mode)
        A = 0.5 * (A + A.swapaxes(-1, -2))
        fidx = dofmap.free_index[dofmap.cell_dofs(mesh.cells[sl])]
        rows = np.broadcast_to(fidx[:, :, None], A.shape)
        cols = np.broadcast_to(fidx[:, None, :], A.shape)
        keep = (rows >= 0) & (cols >= 0)
        # sum duplicates per chunk; exact zeros stay stored so the pattern is symmetric
        part = sp.coo_matrix((A[keep], (rows[keep], cols[keep])), shape=(nfree, nfree)).tocsr()
        part = part.tocoo()
        triplets.append((part.row, part.col, part.data))
        if f is not None:
            C = shape_coefficients(d, batch.edges())
            phi = shape_values_batch(batch, rule.points, coeffs=C)        # (c, r, q)
            x = np.einsum("qi,cik->cqk", rule.points, batch.vertices)
            fx = np.asarray(f(x.reshape(-1, d)), dtype=float).reshape(x.shape[:2])
            if not np.all(np.isfinite(fx)):
                raise FloatingPointError("forcing evaluated to a non-finite value")
            scale = batch.measure * factorial(d)
            b = np.einsum("crq,cq,q,c->cr", phi, fx, rule.weights, scale)
            ok = fidx >= 0
            rhs += np.bincount(fidx[ok], weights=b[ok], minlength=nfree)
    rows, cols, vals = (np.concatenate(t) for t in zip(*triplets))
    matrix = sp.coo_matrix((vals, (rows, cols)), shape=(nfree, nfree)).tocsr()
    matrix.sort_indices()
    return SparseSpdSystem(matrix.tocsr(), rhs, float(eps), mode, dofmap)


def interpolate(mesh: SimplicialMesh, dofmap: DofMap, value_fn, grad_fn) -> np.ndarray:
    """Nodal interpolant into the clamped space (boundary DOFs set to zero)."""
    full = np.empty(dofmap.ndofs)
    blk = dofmap.block
    full[0::blk] = value_fn(mesh.vertices)
    full[np.arange(dofmap.ndofs).reshape(-1, blk)[:, 1:]] = grad_fn(mesh.vertices)
    full[dofmap.constrained] = 0.0
    return full


def write_matrix(system: SparseSpdSystem, path) -> None:
    """Coordinate text dump, one zero-based ``i j value`` line per stored entry."""
    coo = system.matrix.tocoo()
    with Path(path).open("w") as fh:
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{int(i)} {int(j)} {float(v)!r}\n")
