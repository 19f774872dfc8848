"""Special functions and quadrature rules used by the mode construction."""
from __future__ import annotations

import numpy as np
from scipy import special as sp

from .errors import DomainError


def bessel_j0(x):
    """Zeroth-order Bessel function of the first kind.

    Accepts scalars or arrays; raises :class:`DomainError` on non-finite input.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("bessel_j0 requires finite arguments")
    out = sp.j0(x)
    return out.item() if out.ndim == 0 else out


def laguerre_gen(q: int, x, alpha: float = 1.0):
    """Generalized Laguerre polynomial L_q^(alpha)(x) by upward recurrence.

    The default ``alpha = 1`` is the family used by the X-wave spectra.
    """
    if int(q) != q or q < 0:
        raise DomainError(f"Laguerre degree must be a non-negative integer, got {q!r}")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("laguerre_gen requires finite arguments")
    prev = np.ones_like(x)
    if q == 0:
        return prev.item() if prev.ndim == 0 else prev
    cur = 1.0 + alpha - x
    for j in range(1, int(q)):
        prev, cur = cur, ((2 * j + 1 + alpha - x) * cur - (j + alpha) * prev) / (j + 1)
    return cur.item() if np.ndim(cur) == 0 else cur


def laguerre_coefficients(q: int, alpha: float = 1.0) -> np.ndarray:
    """Monomial coefficients c_j of L_q^(alpha)(y) = sum_j c_j y**j."""
    j = np.arange(q + 1)
    return (-1.0) ** j * sp.binom(q + alpha, q - j) / sp.factorial(j)


def legendre_complex(n: int, u):
    """Legendre polynomial P_n evaluated at (possibly complex) ``u``."""
    u = np.asarray(u)
    prev = np.ones_like(u)
    if n == 0:
        return prev
    cur = u.copy()
    for j in range(1, n):
        prev, cur = cur, ((2 * j + 1) * u * cur - j * prev) / (j + 1)
    return cur


def gauss_laguerre(n: int, scale: float = 1.0):
    """Nodes/weights for integral_0^inf exp(-scale*x) g(x) dx ~ sum w g(x).

    Nodes whose weights underflow to zero are dropped.
    """
    x, w = sp.roots_laguerre(n)
    keep = w > 0
    return x[keep] / scale, w[keep] / scale


def composite_gauss_legendre(edges, nodes_per_panel: int = 16):
    """Composite Gauss-Legendre rule on consecutive panels ``edges``.

    Returns nodes and weights for integral over [edges[0], edges[-1]].
    """
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise DomainError("panel edges must be strictly increasing")
    x, w = sp.roots_legendre(nodes_per_panel)
    a = edges[:-1, None]
    b = edges[1:, None]
    nodes = 0.5 * (b - a) * x + 0.5 * (b + a)
    weights = 0.5 * (b - a) * w * np.ones_like(nodes)
    return nodes.ravel(), weights.ravel()
