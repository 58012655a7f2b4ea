"""Randomized property checks of the element and of the assembled form.

Each property is checked over ``trials`` random instances drawn from a seeded
generator, so a failing instance can be replayed from the serialized
counterexample.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from itertools import combinations_with_replacement

import numpy as np

from .assembly import assemble, build_dof_map
from .element import ShapeSet, tables, weak_continuity_residual
from .mesh import box_mesh
from .simplex import Simplex, bary_frame

VALID_DIMS = (2, 3, 4, 5)
COERCIVITY_DIMS = (2, 3)
COERCIVITY_EPS = (1e-6, 1e-2, 1.0)
COERCIVITY_MESHES = {2: (8,), 3: (2, 4)}

TOL_WEAK = 1e-12
TOL_UNISOLVENCE = 1e-12
TOL_P2 = 1e-12
TOL_UNITY = 1e-13
TOL_COERCIVITY = 1e-10


@dataclass
class PropertyResult:
    name: str
    dim: int
    trials: int
    max_residual: float
    tol: float
    counterexample: dict | None = None

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tol

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name:<22s} d={self.dim} trials={self.trials:<5d} "
                f"max residual {self.max_residual:.3e} (tol {self.tol:.0e})")


@dataclass
class VerifyReport:
    seed: int
    results: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def counterexamples(self) -> list:
        return [dict(asdict(r), passed=False) for r in self.results if not r.passed]

    def to_json(self) -> str:
        return json.dumps({"seed": self.seed, "passed": self.passed,
                           "failures": self.counterexamples()}, indent=2)


def random_simplex(rng, d: int, max_cond: float = 20.0) -> Simplex:
    """Affine image of the reference simplex with a bounded condition number."""
    ref = np.vstack([np.zeros(d), np.eye(d)])
    while True:
        A = np.eye(d) + 0.5 * rng.standard_normal((d, d))
        if np.linalg.cond(A) <= max_cond:
            break
    scale = 10.0 ** rng.uniform(-0.3, 0.3)
    return Simplex(scale * ref @ A.T + rng.uniform(-1, 1, d))


def random_symmetric(rng, d: int) -> np.ndarray:
    M = rng.standard_normal((d, d))
    return 0.5 * (M + M.T)


def _track(best, residual, example):
    if residual > best[0]:
        return residual, example
    return best


def check_weak_continuity(rng, d: int, trials: int) -> PropertyResult:
    """Relative residual for a random symmetric S, S = I and S = Hessian of a quadratic."""
    best = (0.0, None)
    n = (d + 1) ** 2
    for _ in range(trials):
        frame = bary_frame(random_simplex(rng, d))
        shape = ShapeSet(frame)
        coeffs = rng.standard_normal(n)
        w = rng.standard_normal(n)
        centroid = frame.vertices.mean(axis=0)
        hess_w = shape.combine(w).quadratic_part().hessian(centroid)[0]
        for label, S in (("random", random_symmetric(rng, d)), ("identity", np.eye(d)),
                         ("quadratic-hessian", 0.5 * (hess_w + hess_w.T))):
            res, scale = weak_continuity_residual(frame, S, coeffs, return_scale=True)
            rel = abs(res) / scale if scale > 0 else abs(res)
            best = _track(best, rel, {"case": label, "vertices": frame.vertices.tolist(),
                                      "S": S.tolist(), "coefficients": coeffs.tolist()})
    return PropertyResult("weak-continuity", d, trials, best[0], TOL_WEAK, best[1])


def check_unisolvence(rng, d: int, trials: int) -> PropertyResult:
    """DOFs of the nodal basis must form the identity matrix."""
    best = (0.0, None)
    n = (d + 1) ** 2
    for _ in range(trials):
        frame = bary_frame(random_simplex(rng, d))
        shape = ShapeSet(frame)
        vertices = np.eye(d + 1)
        vals = shape.values(vertices)                       # (vertex, r)
        grads = shape.gradients(vertices)                   # (vertex, r, k)
        M = np.hstack([vals.T, grads.transpose(1, 0, 2).reshape(n, -1)])
        dev = float(np.abs(M - np.eye(n)).max())
        best = _track(best, dev, {"vertices": frame.vertices.tolist()})
    return PropertyResult("unisolvence", d, trials, best[0], TOL_UNISOLVENCE, best[1])


def _quadratic_monomials(d):
    out = [()]
    for k in (1, 2):
        out += list(combinations_with_replacement(range(d), k))
    return out


def _monomial_table(monomials, x):
    """Values ``(p, m)`` and gradients ``(p, m, d)`` of the monomials at points ``x``."""
    p, d = x.shape
    vals = np.ones((p, len(monomials)))
    grads = np.zeros((p, len(monomials), d))
    for m, idx in enumerate(monomials):
        for pos, k in enumerate(idx):
            vals[:, m] *= x[:, k]
            rest = idx[:pos] + idx[pos + 1:]
            grads[:, m, k] += np.prod(x[:, list(rest)], axis=1) if rest else 1.0
    return vals, grads


def check_p2_reproduction(rng, d: int, trials: int) -> PropertyResult:
    """Interpolating a quadratic gives it back exactly, with no bubble part."""
    best = (0.0, None)
    monomials = _quadratic_monomials(d)
    bubble = tables(d).bubble_slice
    for _ in range(trials):
        frame = bary_frame(random_simplex(rng, d))
        shape = ShapeSet(frame)
        lam = rng.dirichlet(np.ones(d + 1), size=8)
        vals, grads = _monomial_table(monomials, frame.vertices)
        dofs = np.hstack([vals.T, grads.transpose(1, 0, 2).reshape(len(monomials), -1)])
        exact, _ = _monomial_table(monomials, frame.to_physical(lam))   # (q, m)
        size = np.maximum(1.0, np.abs(exact).max(axis=0))
        err = np.abs(shape.values(lam) @ dofs.T - exact).max(axis=0) / size
        # the bubble coefficients must vanish, so the projection is the function itself
        residue = np.abs((dofs @ shape.coeffs)[:, bubble]).max(axis=1) / size
        err = np.maximum(err, residue)
        k = int(np.argmax(err))
        best = _track(best, float(err[k]), {"vertices": frame.vertices.tolist(),
                                            "monomial": list(monomials[k])})
    return PropertyResult("p2-reproduction", d, trials, best[0], TOL_P2, best[1])


def check_partition_of_unity(rng, d: int, trials: int) -> PropertyResult:
    best = (0.0, None)
    for _ in range(trials):
        frame = bary_frame(random_simplex(rng, d))
        lam = rng.dirichlet(np.ones(d + 1), size=16)
        total = ShapeSet(frame).values(lam)[:, : d + 1].sum(axis=1)
        best = _track(best, float(np.abs(total - 1.0).max()),
                      {"vertices": frame.vertices.tolist(), "points": lam.tolist()})
    return PropertyResult("partition-of-unity", d, trials, best[0], TOL_UNITY, best[1])


def check_coercivity(rng, d: int, trials: int, N: int) -> PropertyResult:
    """``v^T A_trunc v >= |||v|||^2 / 2`` for random free-DOF vectors.

    ``|||v|||^2`` is ``v^T A_full v``, the unmodified broken form.
    """
    mesh = box_mesh(d, N)
    dofmap = build_dof_map(mesh)
    worst = (0.0, None)
    for eps in COERCIVITY_EPS:
        At = assemble(mesh, dofmap, eps, mode="trunc").matrix
        Af = assemble(mesh, dofmap, eps, mode="full").matrix
        V = rng.standard_normal((dofmap.nfree, trials))
        V /= np.linalg.norm(V, axis=0)
        gap = np.einsum("ik,ik->k", V, At @ V) - 0.5 * np.einsum("ik,ik->k", V, Af @ V)
        if trials:
            k = int(np.argmin(gap))
            worst = _track(worst, float(max(0.0, -gap[k])),
                           {"eps": eps, "N": N, "vector": V[:, k].tolist()})
    return PropertyResult(f"coercivity(N={N})", d, trials, worst[0], TOL_COERCIVITY, worst[1])


def run_verify(dims=(2, 3, 4), seed: int = 42, trials: int = 1000) -> VerifyReport:
    """Run every property suite for the requested dimensions."""
    dims = list(dims)
    bad = [d for d in dims if d not in VALID_DIMS]
    if bad:
        raise ValueError(f"dims must be a subset of {VALID_DIMS}, got {bad}")
    if trials < 0:
        raise ValueError("trials must be non-negative")
    rng = np.random.default_rng(seed)
    report = VerifyReport(seed)
    for d in dims:
        report.results.append(check_weak_continuity(rng, d, trials))
        report.results.append(check_unisolvence(rng, d, trials))
        report.results.append(check_p2_reproduction(rng, d, trials))
        report.results.append(check_partition_of_unity(rng, d, trials))
    for d in dims:
        if d in COERCIVITY_DIMS:
            for N in COERCIVITY_MESHES[d]:
                report.results.append(check_coercivity(rng, d, trials, N))
    return report
