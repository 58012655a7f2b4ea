"""Energy-norm errors and convergence rates."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from math import factorial

import numpy as np

from .assembly import DofMap, _chunks
from .element import evaluate_batch
from .mesh import SimplicialMesh
from .quadrature import rule_for_degree


@dataclass
class ConvergenceRecord:
    dim: int
    problem: str
    mode: str
    eps: float
    N: int
    h: float
    dofs: int
    abs_err: float
    rel_err: float
    rate: float | None
    iters: int
    seconds: float
    converged: bool = True

    def as_dict(self) -> dict:
        return asdict(self)


def energy_error(mesh: SimplicialMesh, dofmap: DofMap, solution, problem, eps=None,
                 degree: int = 8):
    """``(|||u - u_h|||, |||u - u_h||| / |||u|||)`` with broken derivatives of u_h.

    ``solution`` is the full DOF vector (length ``dofmap.ndofs``) or the free part.
    """
    if degree < 6:
        raise ValueError("error rule degree must be at least 6")
    eps = problem.eps if eps is None else eps
    sol = np.asarray(solution, dtype=float)
    if sol.shape[0] == dofmap.nfree and dofmap.nfree != dofmap.ndofs:
        sol = dofmap.expand(sol)
    d = mesh.dim
    rule = rule_for_degree(d, degree)
    err_g, err_h, ref_g, ref_h = [], [], [], []
    for sl in _chunks(mesh.ncells):
        batch = mesh.frames(sl)
        local = sol[dofmap.cell_dofs(mesh.cells[sl])]
        _, gh, hh = evaluate_batch(batch, local, rule.points)
        x = np.einsum("qi,cik->cqk", rule.points, batch.vertices).reshape(-1, d)
        gu = problem.gradient(x).reshape(gh.shape)
        hu = problem.hessian(x).reshape(hh.shape)
        w = np.outer(batch.measure * factorial(d), rule.weights)
        err_g.append(np.sum(w * ((gu - gh) ** 2).sum(-1), axis=1))
        err_h.append(np.sum(w * ((hu - hh) ** 2).sum((-1, -2)), axis=1))
        ref_g.append(np.sum(w * (gu**2).sum(-1), axis=1))
        ref_h.append(np.sum(w * (hu**2).sum((-1, -2)), axis=1))
    # per-cell contributions summed pairwise by numpy
    e2 = eps**2 * np.concatenate(err_h).sum() + np.concatenate(err_g).sum()
    u2 = eps**2 * np.concatenate(ref_h).sum() + np.concatenate(ref_g).sum()
    absolute = math.sqrt(max(e2, 0.0))
    if u2 <= 0.0:
        # u = 0: the relative error is 0 for u_h = 0 and unbounded otherwise
        return absolute, 0.0 if absolute == 0.0 else math.inf
    return absolute, absolute / math.sqrt(u2)


def rates(errors, hs=None):
    """Observed orders between consecutive levels; ``None`` where undefined.

    Without ``hs`` the levels are assumed to halve ``h``.
    """
    errors = list(errors)
    out = [None]
    for k in range(1, len(errors)):
        e0, e1 = errors[k - 1], errors[k]
        if e0 is None or e1 is None or not (e0 > 0 and e1 > 0):
            out.append(None)
            continue
        ratio = 2.0 if hs is None else hs[k - 1] / hs[k]
        out.append(math.log(e0 / e1) / math.log(ratio))
    return out
