"""Jacobi-preconditioned conjugate gradients and a small dense fallback."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

DENSE_LIMIT = 500
METHODS = ("auto", "pcg", "dense", "direct")
# restarts without halving the true residual before PCG gives up
STAGNATION_RESTARTS = 5


@dataclass
class SolveReport:
    iterations: int
    residual: float
    seconds: float
    converged: bool
    method: str = "pcg"
    history: list = field(default_factory=list, repr=False)


def _operator(system):
    return system.matrix if hasattr(system, "matrix") else system


def _rhs(system, b):
    if b is not None:
        return np.asarray(b, dtype=float)
    return system.rhs


def pcg(system, rtol: float = 1e-12, maxit: int | None = None, *, b=None, x0=None,
        record_history: bool = False):
    """Solve ``A x = b`` to ``||b - A x|| <= rtol ||b||``.

    ``system`` is a :class:`SparseSpdSystem` or any matrix; ``b`` overrides the
    system right-hand side. Does not raise on stagnation: the report says
    ``converged=False`` and the caller decides.

    The recursive residual can drop below ``rtol`` while the true residual sits
    at a round-off floor (fourth-order systems are badly conditioned). Each time
    that happens the iteration restarts from the true residual; after
    :data:`STAGNATION_RESTARTS` restarts without halving it, PCG stops.
    """
    if not 0 < rtol < 1:
        raise ValueError("rtol must lie in (0, 1)")
    A = _operator(system)
    b = _rhs(system, b)
    n = b.shape[0]
    if maxit is None:
        maxit = 20 * n
    if maxit < 1:
        raise ValueError("maxit must be at least 1")
    t0 = time.perf_counter()
    diag = A.diagonal() if sp.issparse(A) else np.diag(A)
    if np.any(diag <= 0):
        raise ValueError("matrix diagonal must be strictly positive")
    minv = 1.0 / diag
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    bnorm = np.linalg.norm(b)
    history = []
    if bnorm == 0.0:
        return np.zeros(n), SolveReport(0, 0.0, time.perf_counter() - t0, True)

    r = b - A @ x
    z = minv * r
    p = z.copy()
    rz = r @ z
    it = 0
    rel = np.linalg.norm(r) / bnorm
    best, stalled = np.inf, 0
    while it < maxit:
        if rel <= rtol:
            # confirm against the true residual before stopping
            r = b - A @ x
            rel = np.linalg.norm(r) / bnorm
            if rel <= rtol:
                break
            if rel < 0.5 * best:
                best, stalled = rel, 0
            else:
                stalled += 1
                if stalled >= STAGNATION_RESTARTS:
                    break
            z = minv * r
            p = z.copy()
            rz = r @ z
        Ap = A @ p
        alpha = rz / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        it += 1
        rel = np.linalg.norm(r) / bnorm
        if record_history:
            history.append((it, rel, x.copy()))
        z = minv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    true_rel = np.linalg.norm(b - A @ x) / bnorm
    report = SolveReport(it, float(true_rel), time.perf_counter() - t0, bool(true_rel <= rtol),
                         "pcg", history)
    return x, report


def _report(A, x, b, t0, method, rtol):
    bnorm = np.linalg.norm(b)
    rel = float(np.linalg.norm(b - A @ x) / bnorm) if bnorm else 0.0
    ok = bool(np.isfinite(rel) and (rtol is None or rel <= rtol))
    return SolveReport(1, rel, time.perf_counter() - t0, ok, method)


def dense_solve(system, *, b=None, rtol=None):
    """Dense Cholesky solve; meant for small systems and as a test oracle.

    With ``rtol`` the report is ``converged`` only if the residual meets it.
    """
    A = _operator(system)
    b = _rhs(system, b)
    t0 = time.perf_counter()
    M = A.toarray() if sp.issparse(A) else np.asarray(A)
    x = sla.cho_solve(sla.cho_factor(M), b)
    return x, _report(M, x, b, t0, "cholesky", rtol)


def direct_solve(system, *, b=None, rtol=None):
    """Sparse LU (SuperLU) solve; for systems too ill-conditioned for Jacobi-PCG."""
    A = sp.csc_matrix(_operator(system))
    b = _rhs(system, b)
    t0 = time.perf_counter()
    x = spla.splu(A).solve(b)
    return x, _report(A, x, b, t0, "direct", rtol)


def solve(system, rtol: float = 1e-12, maxit: int | None = None, method: str = "auto"):
    """``auto`` uses dense Cholesky below :data:`DENSE_LIMIT` unknowns, PCG otherwise.

    ``direct`` (sparse LU) is never chosen automatically.
    """
    if method not in METHODS:
        raise ValueError(f"unknown solver method {method!r}")
    n = _rhs(system, None).shape[0]
    if method == "dense" or (method == "auto" and n < DENSE_LIMIT):
        return dense_solve(system, rtol=rtol)
    if method == "direct":
        return direct_solve(system, rtol=rtol)
    return pcg(system, rtol, maxit)
