"""Structured simplicial meshes of the unit box and a plain-text mesh format."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from itertools import permutations
from math import factorial
from pathlib import Path

import numpy as np

from .simplex import batch_frames


@dataclass(frozen=True)
class SimplicialMesh:
    vertices: np.ndarray        # (nv, d)
    cells: np.ndarray           # (nc, d+1) vertex indices
    boundary_vertex: np.ndarray  # (nv,) bool
    N: int | None = None

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def h(self) -> float | None:
        return None if self.N is None else 1.0 / self.N

    @property
    def nverts(self) -> int:
        return len(self.vertices)

    @property
    def ncells(self) -> int:
        return len(self.cells)

    def cell_vertices(self, cells=None) -> np.ndarray:
        idx = self.cells if cells is None else self.cells[cells]
        return self.vertices[idx]

    def frames(self, cells=None):
        return batch_frames(self.cell_vertices(cells))

    def signed_volumes(self) -> np.ndarray:
        v = self.cell_vertices()
        B = (v[:, 1:, :] - v[:, :1, :]).swapaxes(-1, -2)
        return np.linalg.det(B) / factorial(self.dim)


def _box_boundary(vertices, tol=1e-12):
    return np.any((np.abs(vertices) <= tol) | (np.abs(vertices - 1.0) <= tol), axis=1)


def unit_box_mesh(dim: int, N: int) -> SimplicialMesh:
    """Kuhn (Freudenthal) triangulation of the unit box with ``N`` cells per side.

    Each sub-cube is split into ``d!`` simplices ``x0 -> x0 + e_p0 -> ... -> x0 + 1``,
    one per permutation ``p``; all of them share the main diagonal, and the
    split is translation invariant, so neighbouring cubes match face to face.
    """
    if N < 1:
        raise ValueError("N must be a positive integer")
    axes = [np.arange(N + 1)] * dim
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    vertices = grid / N
    strides = np.array([(N + 1) ** (dim - 1 - k) for k in range(dim)])

    corners = np.stack(np.meshgrid(*([np.arange(N)] * dim), indexing="ij"), axis=-1)
    corners = corners.reshape(-1, dim)
    base = corners @ strides
    local = []
    for perm in permutations(range(dim)):
        path = [0]
        off = 0
        for k in perm:
            off += strides[k]
            path.append(off)
        # orientation of this path simplex = sign of the permutation
        if _parity(perm):
            path[0], path[1] = path[1], path[0]
        local.append(path)
    local = np.array(local)
    cells = (base[:, None, None] + local[None, :, :]).reshape(-1, dim + 1)
    return SimplicialMesh(vertices, cells, _box_boundary(vertices), N)


def _parity(perm) -> int:
    perm = list(perm)
    odd = 0
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            odd ^= 1
    return odd


def unit_square_mesh(N: int) -> SimplicialMesh:
    """``2 N^2`` right triangles, every square cut along the same diagonal."""
    return unit_box_mesh(2, N)


def unit_cube_mesh_kuhn(N: int) -> SimplicialMesh:
    """``6 N^3`` tetrahedra, six per sub-cube around the main diagonal."""
    return unit_box_mesh(3, N)


# corners of the unit cube are numbered 4x + 2y + z
_CORNER_SPLIT = np.array([
    [0, 1, 2, 4],   # cut off corner (0,0,0)
    [1, 2, 3, 4],
    [1, 3, 4, 5],
    [2, 3, 4, 6],
    [3, 4, 5, 6],   # the four middle tets share the edge (0,1,1)-(1,0,0)
    [3, 5, 6, 7],   # cut off corner (1,1,1)
])


def unit_cube_mesh_corner(N: int) -> SimplicialMesh:
    """``6 N^3`` tetrahedra: per sub-cube two opposite corner tets plus four
    tets around the diagonal joining the two remaining opposite corners.

    Opposite cube faces carry parallel diagonals, so translated copies are
    conforming.
    """
    if N < 1:
        raise ValueError("N must be a positive integer")
    grid = np.stack(np.meshgrid(*([np.arange(N + 1)] * 3), indexing="ij"), axis=-1)
    vertices = grid.reshape(-1, 3) / N
    strides = np.array([(N + 1) ** 2, N + 1, 1])
    bits = np.array([[c >> 2 & 1, c >> 1 & 1, c & 1] for c in range(8)])
    corners = np.stack(np.meshgrid(*([np.arange(N)] * 3), indexing="ij"), axis=-1)
    base = corners.reshape(-1, 3) @ strides
    local = (bits @ strides)[_CORNER_SPLIT]
    cells = (base[:, None, None] + local[None]).reshape(-1, 4)
    return orient(SimplicialMesh(vertices, cells, _box_boundary(vertices), N))


CUBE_SPLITS = {"corner": unit_cube_mesh_corner, "kuhn": unit_cube_mesh_kuhn}


def box_mesh(dim: int, N: int, split: str = "corner") -> SimplicialMesh:
    """Study mesh: ``split`` picks the 6-tet cube split in 3D; 2D always uses one diagonal."""
    if dim == 2:
        return unit_square_mesh(N)
    if dim == 3:
        try:
            return CUBE_SPLITS[split](N)
        except KeyError:
            raise ValueError(f"unknown cube split {split!r}; choose from {sorted(CUBE_SPLITS)}") from None
    return unit_box_mesh(dim, N)


def mesh_stats(mesh: SimplicialMesh) -> dict:
    v = mesh.cell_vertices()
    diff = v[:, None, :, :] - v[:, :, None, :]
    hmax = float(np.sqrt((diff**2).sum(-1)).max())
    return {
        "h_max": hmax,
        "h_grid": mesh.h,
        "cells": mesh.ncells,
        "vertices": mesh.nverts,
        "boundary_vertices": int(mesh.boundary_vertex.sum()),
    }


def face_counts(mesh: SimplicialMesh) -> Counter:
    """How many cells share each (d-1)-face, keyed by sorted vertex tuple."""
    counts = Counter()
    d = mesh.dim
    for i in range(d + 1):
        f = np.sort(np.delete(mesh.cells, i, axis=1), axis=1)
        counts.update(map(tuple, f.tolist()))
    return counts


def check_conforming(mesh: SimplicialMesh) -> bool:
    """Every face is shared by at most two cells, and by one iff it is on the boundary."""
    for f, count in face_counts(mesh).items():
        if count > 2:
            return False
        on_boundary = _face_on_box_boundary(mesh.vertices[list(f)])
        if (count == 1) != on_boundary:
            return False
    return True


def _face_on_box_boundary(pts, tol=1e-12):
    for k in range(pts.shape[1]):
        col = pts[:, k]
        if np.all(np.abs(col) <= tol) or np.all(np.abs(col - 1.0) <= tol):
            return True
    return False


def orient(mesh: SimplicialMesh) -> SimplicialMesh:
    """Swap the first two vertices of negatively oriented cells."""
    neg = mesh.signed_volumes() < 0
    if not neg.any():
        return mesh
    cells = mesh.cells.copy()
    cells[neg, 0], cells[neg, 1] = mesh.cells[neg, 1], mesh.cells[neg, 0]
    return SimplicialMesh(mesh.vertices, cells, mesh.boundary_vertex, mesh.N)


# --- text format ------------------------------------------------------------

def write_mesh(mesh: SimplicialMesh, path) -> None:
    """``dim nv nc`` header, coordinates, cells, then boundary vertex indices."""
    lines = [f"{mesh.dim} {mesh.nverts} {mesh.ncells}"]
    lines += [" ".join(repr(float(x)) for x in row) for row in mesh.vertices]
    lines += [" ".join(str(int(i)) for i in row) for row in mesh.cells]
    lines.append(" ".join(str(int(i)) for i in np.flatnonzero(mesh.boundary_vertex)))
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path) -> SimplicialMesh:
    text = Path(path).read_text().split("\n")
    dim, nv, nc = (int(t) for t in text[0].split())
    vertices = np.array([[float(t) for t in text[1 + k].split()] for k in range(nv)])
    cells = np.array([[int(t) for t in text[1 + nv + k].split()] for k in range(nc)],
                     dtype=np.int64).reshape(nc, dim + 1)
    bline = text[1 + nv + nc] if len(text) > 1 + nv + nc else ""
    boundary = np.zeros(nv, bool)
    boundary[[int(t) for t in bline.split()]] = True
    vertices = vertices.reshape(nv, dim)
    return orient(SimplicialMesh(vertices, cells, boundary))
