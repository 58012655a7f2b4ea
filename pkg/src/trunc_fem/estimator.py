"""Estimator-style front end: fit on a mesh and a forcing, predict u_h at points."""

from __future__ import annotations

from numbers import Integral, Real

import numpy as np
from scipy.spatial import cKDTree
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils import check_array, check_scalar
from sklearn.utils.validation import check_is_fitted

from .assembly import assemble, build_dof_map
from .element import MODES, shape_coefficients, tables
from .mesh import SimplicialMesh
from .postprocess import energy_error
from .solver import METHODS, solve

_SOLVERS = METHODS


class PointLocationError(ValueError):
    """Some query points lie outside every cell of the mesh."""


class TruncSolver(RegressorMixin, BaseEstimator):
    """TRUNC finite element solution of ``eps^2 Lap^2 u - Lap u = f`` with clamped boundary.

    ``fit(mesh, f)`` assembles and solves; ``f`` is a callable on ``(n, d)``
    points or an object with an ``f`` attribute (e.g. a manufactured problem).
    ``predict(X)`` evaluates the discrete solution at physical points.

    Parameters
    ----------
    eps : float
        Perturbation parameter, ``eps >= 0``.
    mode : {"trunc", "full"}
        Bilinear form: the truncated one or the plain broken form.
    load_degree : int
        Degree of the quadrature rule for the load vector.
    rtol : float
        Relative residual target of the iterative solver.
    maxit : int or None
        Iteration cap; ``None`` means twenty times the number of unknowns.
    solver : {"auto", "pcg", "dense", "direct"}
    """

    def __init__(self, eps=1e-6, mode="trunc", load_degree=8, rtol=1e-12, maxit=None,
                 solver="auto"):
        self.eps = eps
        self.mode = mode
        self.load_degree = load_degree
        self.rtol = rtol
        self.maxit = maxit
        self.solver = solver

    def _validate_params(self):
        check_scalar(self.eps, "eps", Real, min_val=0.0)
        check_scalar(self.load_degree, "load_degree", Integral, min_val=4)
        check_scalar(self.rtol, "rtol", Real, min_val=0.0, max_val=1.0,
                     include_boundaries="neither")
        if self.maxit is not None:
            check_scalar(self.maxit, "maxit", Integral, min_val=1)
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.solver not in _SOLVERS:
            raise ValueError(f"solver must be one of {_SOLVERS}, got {self.solver!r}")

    def fit(self, mesh: SimplicialMesh, f=None):
        self._validate_params()
        if not isinstance(mesh, SimplicialMesh):
            raise TypeError("fit expects a SimplicialMesh")
        forcing = getattr(f, "f", f)
        if forcing is not None and not callable(forcing):
            raise TypeError("f must be callable or expose a callable 'f'")
        dofmap = build_dof_map(mesh)
        system = assemble(mesh, dofmap, float(self.eps), forcing, self.mode, self.load_degree)
        x, report = solve(system, self.rtol, self.maxit, self.solver)
        self.mesh_ = mesh
        self.dofmap_ = dofmap
        self.coef_ = dofmap.expand(x)
        self.solve_report_ = report
        self.n_features_in_ = mesh.dim
        self._tree = None
        return self

    # --- point evaluation ---------------------------------------------------------

    def _locate(self, X, k=24, tol=1e-10):
        """Containing cell and barycentric coordinates of each point."""
        mesh = self.mesh_
        if self._tree is None:
            self._tree = cKDTree(mesh.cell_vertices().mean(axis=1))
            self._frames = mesh.frames()
        frames = self._frames
        k = min(k, mesh.ncells)
        _, cand = self._tree.query(X, k=k)
        cand = np.asarray(cand).reshape(len(X), k)
        cells = np.full(len(X), -1)
        lam = np.zeros((len(X), mesh.dim + 1))
        for j in range(k):
            todo = np.flatnonzero(cells < 0)
            if todo.size == 0:
                break
            c = cand[todo, j]
            l = _barycentric(frames, c, X[todo])
            hit = l.min(axis=1) >= -tol
            cells[todo[hit]] = c[hit]
            lam[todo[hit]] = l[hit]
        for p in np.flatnonzero(cells < 0):
            l = _barycentric(frames, np.arange(mesh.ncells), np.repeat(X[p:p + 1], mesh.ncells, 0))
            c = int(np.argmax(l.min(axis=1)))
            if l[c].min() < -tol:
                raise PointLocationError(f"point {X[p].tolist()} lies outside the mesh")
            cells[p], lam[p] = c, l[c]
        return cells, lam

    def _evaluate(self, X, derivative):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        d = self.mesh_.dim
        if X.shape[1] != d:
            raise ValueError(f"X has {X.shape[1]} features, the mesh has dimension {d}")
        cells, lam = self._locate(X)
        frames = self._frames
        verts = frames.vertices[cells]
        C = shape_coefficients(d, verts[:, None, :, :] - verts[:, :, None, :])
        local = self.coef_[self.dofmap_.cell_dofs(self.mesh_.cells[cells])]
        tau = np.einsum("pr,prt->pt", local, C)
        tab = tables(d)
        mon = tab.eval_monomials(lam)
        if derivative == 0:
            return np.einsum("pt,pt->p", tau, mon @ tab.terms.T)
        formal = np.einsum("pm,tim,pt->pi", mon, tab.d1, tau)
        return np.einsum("pi,pik->pk", formal, frames.grads[cells])

    def predict(self, X):
        """Discrete solution ``u_h`` at the rows of ``X``."""
        return self._evaluate(X, 0)

    def gradient(self, X):
        """Element-wise gradient of ``u_h`` at the rows of ``X``."""
        return self._evaluate(X, 1)

    def energy_error(self, problem, degree: int = 8):
        """``(absolute, relative)`` energy-norm error against a manufactured problem."""
        check_is_fitted(self, "coef_")
        return energy_error(self.mesh_, self.dofmap_, self.coef_, problem, float(self.eps),
                            degree)


def _barycentric(frames, cells, X):
    a0 = frames.vertices[cells, 0]
    lam = np.einsum("pik,pk->pi", frames.grads[cells], X - a0)
    lam[:, 0] += 1.0
    return lam
