"""Manufactured solutions of eps^2 Lap^2 u - Lap u = f with clamped boundaries.

Both problems are tensor products ``u(x) = prod_i g(x_i)`` of a 1D factor, so
all derivatives follow from the derivatives of ``g`` up to order four.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

PI = np.pi


@dataclass(frozen=True)
class Factor1D:
    """``derivs(x)`` returns ``(g, g', g'', g''', g'''')`` evaluated at ``x``."""

    derivs: Callable
    name: str = ""

    def __call__(self, x, order: int = 0):
        return self.derivs(np.asarray(x, dtype=float))[order]


def sin2_factor(amplitude: float = 2.0) -> Factor1D:
    """``amplitude * sin(pi x)**2``, written via cos(2 pi x)."""
    a = amplitude

    def derivs(x):
        s2, c2 = np.sin(2 * PI * x), np.cos(2 * PI * x)
        return (a * np.sin(PI * x) ** 2,
                a * PI * s2,
                2 * a * PI**2 * c2,
                -4 * a * PI**3 * s2,
                -8 * a * PI**4 * c2)

    return Factor1D(derivs, f"{a:g} sin^2(pi x)")


def _exp_sin(x):
    """Derivatives of exp(sin(pi x)) up to order four."""
    s, c = np.sin(PI * x), np.cos(PI * x)
    E = np.exp(s)
    return (E,
            PI * c * E,
            PI**2 * E * (c**2 - s),
            PI**3 * E * (c**3 - 3 * s * c - c),
            PI**4 * E * (c**4 - 6 * s * c**2 - 4 * c**2 + 3 * s**2 + s))


def hyperbolic_ratios(x, eps):
    """``cosh(c t)/sinh(c)``, ``sinh(c t)/sinh(c)`` and ``coth(c)``, c = 1/(2 eps), t = 2x-1.

    Evaluated through decaying exponentials only, so nothing overflows for
    tiny ``eps``; away from the endpoints the ratios underflow to zero.
    """
    x = np.asarray(x, dtype=float)
    right = np.exp(-(1.0 - x) / eps)
    left = np.exp(-x / eps)
    tail = np.exp(-1.0 / eps)
    den = -np.expm1(-1.0 / eps)
    return (right + left) / den, (right - left) / den, (1.0 + tail) / den


def layer_correction(x, eps):
    """``eps * phi`` and its first four derivatives."""
    C, S, coth = hyperbolic_ratios(x, eps)
    return (eps * PI * (coth - C),
            -PI * S,
            -PI / eps * C,
            -PI / eps**2 * S,
            -PI / eps**3 * C)


def layer_factor(eps: float) -> Factor1D:
    """``exp(sin(pi x)) - 1 - eps * phi(x)``; clamped at both ends for every eps > 0."""
    if not eps > 0:
        raise ValueError("the boundary-layer factor needs eps > 0")

    def derivs(x):
        e = _exp_sin(x)
        p = layer_correction(x, eps)
        return (e[0] - 1.0 - p[0],) + tuple(e[k] - p[k] for k in range(1, 5))

    return Factor1D(derivs, f"exp(sin(pi x)) - 1 - eps*phi, eps={eps:g}")


def limit_factor() -> Factor1D:
    def derivs(x):
        e = _exp_sin(x)
        return (e[0] - 1.0,) + e[1:]

    return Factor1D(derivs, "exp(sin(pi x)) - 1")


@dataclass(frozen=True)
class ManufacturedProblem:
    dim: int
    eps: float
    factor: Factor1D
    name: str

    def _table(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[-1] != self.dim:
            raise ValueError(f"expected points with {self.dim} coordinates")
        return np.stack([np.stack(self.factor.derivs(x[:, k])) for k in range(self.dim)])

    @staticmethod
    def _prod_except(g0, skip):
        out = np.ones(g0.shape[1])
        for k in range(g0.shape[0]):
            if k not in skip:
                out = out * g0[k]
        return out

    def u(self, x):
        T = self._table(x)
        return self._prod_except(T[:, 0], ())

    __call__ = u

    def gradient(self, x):
        T = self._table(x)
        d = self.dim
        return np.stack([T[i, 1] * self._prod_except(T[:, 0], (i,)) for i in range(d)], -1)

    def hessian(self, x):
        T = self._table(x)
        d = self.dim
        H = np.empty((T.shape[-1], d, d))
        for i in range(d):
            H[:, i, i] = T[i, 2] * self._prod_except(T[:, 0], (i,))
            for j in range(i + 1, d):
                H[:, i, j] = H[:, j, i] = T[i, 1] * T[j, 1] * self._prod_except(T[:, 0], (i, j))
        return H

    def laplacian(self, x):
        T = self._table(x)
        return sum(T[i, 2] * self._prod_except(T[:, 0], (i,)) for i in range(self.dim))

    def bilaplacian(self, x):
        T = self._table(x)
        d = self.dim
        out = sum(T[i, 4] * self._prod_except(T[:, 0], (i,)) for i in range(d))
        for i in range(d):
            for j in range(i + 1, d):
                out = out + 2 * T[i, 2] * T[j, 2] * self._prod_except(T[:, 0], (i, j))
        return out

    def f(self, x):
        """Forcing ``eps^2 Lap^2 u - Lap u``."""
        if self.eps == 0:
            return -self.laplacian(x)
        return self.eps**2 * self.bilaplacian(x) - self.laplacian(x)


def _check_dim(d):
    if d not in (2, 3):
        raise ValueError("manufactured problems are defined for d = 2 and d = 3")


def smooth_problem(d: int, eps: float) -> ManufacturedProblem:
    """``2**d * prod sin^2(pi x_i)``; the d = 2 amplitude is our own extension."""
    _check_dim(d)
    if not eps >= 0:
        raise ValueError("eps must be non-negative")
    return ManufacturedProblem(d, float(eps), sin2_factor(2.0), "smooth")


def layer_problem(d: int, eps: float) -> ManufacturedProblem:
    _check_dim(d)
    return ManufacturedProblem(d, float(eps), layer_factor(eps), "layer")


def limit_solution(d: int) -> ManufacturedProblem:
    """The eps -> 0 limit of the layer solution (Poisson forcing, eps = 0)."""
    _check_dim(d)
    return ManufacturedProblem(d, 0.0, limit_factor(), "limit")


PROBLEMS = {"smooth": smooth_problem, "layer": layer_problem}


def make_problem(name: str, d: int, eps: float) -> ManufacturedProblem:
    try:
        return PROBLEMS[name](d, eps)
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None
