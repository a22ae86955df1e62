"""Small numerical helpers shared across modules."""

import math

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

# 10-point Gauss-Legendre rule on [-1, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


def golden_section(f, a, b, xtol=1e-12, maxiter=200):
    """Minimise a unimodal scalar function on ``[a, b]``.

    Returns ``(x, f(x))``.
    """
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(maxiter):
        if abs(b - a) <= xtol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def panel_integrals(f, edges):
    """Integrate a vectorised ``f`` over each panel ``[edges[i], edges[i+1]]``.

    Uses a 10-point Gauss-Legendre rule per panel; returns an array of length
    ``len(edges) - 1``.
    """
    edges = np.asarray(edges, dtype=float)
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid[:, None] + half[:, None] * _GL_X[None, :]
    return half * (f(x) @ _GL_W)
