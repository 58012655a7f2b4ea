"""Grundmann-Moeller rules on the d-simplex, in barycentric coordinates."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial, gcd

import numpy as np

from .simplex import monomial_factor

MAX_DIM = 4
MAX_DEGREE = 12


class QuadratureCapabilityError(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureRule:
    """Weights sum to the reference measure ``1/d!``."""

    dim: int
    degree: int
    points: np.ndarray   # (q, d+1) barycentric
    weights: np.ndarray  # (q,)

    def __len__(self):
        return len(self.weights)


def _tuples_summing_to(total, parts):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _tuples_summing_to(total - first, parts - 1):
            yield (first,) + rest


def grundmann_moeller(dim: int, s: int) -> QuadratureRule:
    """Rule of exactness degree ``2s + 1``; has negative weights for ``s > 0``."""
    n = dim
    deg = 2 * s + 1
    acc = {}
    for i in range(s + 1):
        w = (-1) ** i * 2.0 ** (-2 * s) * (deg + n - 2 * i) ** deg \
            / (factorial(i) * factorial(deg + n - i))
        denom = deg + n - 2 * i
        for beta in _tuples_summing_to(s - i, n + 1):
            # keep the exact rational point as key so coinciding nodes merge
            key = tuple((2 * b + 1, denom) for b in beta)
            key = tuple(_reduce(a, b) for a, b in key)
            acc[key] = acc.get(key, 0.0) + w
    pts = np.array([[a / b for a, b in key] for key in acc])
    wts = np.array(list(acc.values()))
    return QuadratureRule(dim, deg, pts, wts)


def _reduce(a, b):
    g = gcd(a, b)
    return a // g, b // g


def _check(rule: QuadratureRule, degree: int):
    d = rule.dim
    if abs(rule.weights.sum() - 1.0 / factorial(d)) > 1e-14:
        raise AssertionError("quadrature weights do not sum to 1/d!")
    for total in range(degree + 1):
        for alpha in _tuples_summing_to(total, d + 1):
            exact = monomial_factor(alpha, d) / factorial(d)
            approx = rule.weights @ np.prod(rule.points ** np.array(alpha), axis=1)
            if abs(approx - exact) > 1e-12 * exact:
                raise AssertionError(f"rule not exact on monomial {alpha}")


@lru_cache(maxsize=None)
def rule_for_degree(dim: int, degree: int) -> QuadratureRule:
    """Smallest Grundmann-Moeller rule integrating total degree ``degree`` exactly."""
    if not (2 <= dim <= MAX_DIM and 1 <= degree <= MAX_DEGREE):
        raise QuadratureCapabilityError(
            f"no quadrature rule for dim={dim}, degree={degree} "
            f"(supported: 2 <= dim <= {MAX_DIM}, 1 <= degree <= {MAX_DEGREE})")
    s = degree // 2
    rule = grundmann_moeller(dim, s)
    _check(rule, degree)
    return QuadratureRule(dim, degree, rule.points, rule.weights)


def integrate_on(frame, rule: QuadratureRule, integrand, cell=None) -> float:
    """``sum_q w_q d! |K| f(x_q)`` with ``integrand`` taking physical points (q, d)."""
    x = rule.points @ frame.vertices
    try:
        vals = np.asarray(integrand(x), dtype=float)
    except Exception as exc:
        where = f" on cell {cell}" if cell is not None else ""
        raise RuntimeError(f"integrand evaluation failed{where}: {exc}") from exc
    if not np.all(np.isfinite(vals)):
        bad = int(np.flatnonzero(~np.isfinite(vals))[0])
        raise FloatingPointError(
            f"non-finite integrand value at point {x[bad]}"
            + (f" of cell {cell}" if cell is not None else ""))
    return float(rule.weights @ vals * factorial(frame.dim) * frame.measure)
