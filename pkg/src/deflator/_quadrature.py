"""Small quadrature helpers used by the model and rates modules.

Nothing here is exported at package level.  The adaptive Simpson rule is
deliberately plain: it is only used on smooth one-dimensional drift and
inversion integrands where a recursive interval split converges fast.
"""

from __future__ import annotations

import numpy as np

_GH_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_hermite(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for E f(Z), Z standard normal.

    Returns (z, w) with sum(w) == 1 so that E f(Z) ~= sum(w * f(z)).
    """
    try:
        return _GH_CACHE[n]
    except KeyError:
        x, w = np.polynomial.hermite.hermgauss(n)
        z = x * np.sqrt(2.0)
        w = w / np.sqrt(np.pi)
        _GH_CACHE[n] = (z, w)
        return z, w


def normal_expectation(f, mean: float = 0.0, std: float = 1.0, n: int = 201):
    """E f(X) for X ~ N(mean, std^2) by Gauss-Hermite. f must be smooth."""
    z, w = gauss_hermite(n)
    return float(np.sum(w * np.asarray(f(mean + std * z), dtype=float)))


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-10,
                     max_depth: int = 48) -> float:
    """Adaptive Simpson quadrature of f on [a, b] to absolute tol."""
    if a == b:
        return 0.0

    def simpson(x0, x2, f0, f1, f2):
        return (x2 - x0) / 6.0 * (f0 + 4.0 * f1 + f2)

    def recurse(x0, x2, f0, f1, f2, whole, eps, depth):
        x1 = 0.5 * (x0 + x2)
        lm = 0.5 * (x0 + x1)
        rm = 0.5 * (x1 + x2)
        flm = f(lm)
        frm = f(rm)
        left = simpson(x0, x1, f0, flm, f1)
        right = simpson(x1, x2, f1, frm, f2)
        delta = left + right - whole
        if depth <= 0 or abs(delta) <= 15.0 * eps:
            return left + right + delta / 15.0
        return (recurse(x0, x1, f0, flm, f1, left, eps / 2.0, depth - 1)
                + recurse(x1, x2, f1, frm, f2, right, eps / 2.0, depth - 1))

    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = simpson(a, b, fa, fm, fb)
    return recurse(a, b, fa, fm, fb, whole, tol, max_depth)
