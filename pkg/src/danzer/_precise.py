"""mpmath helpers for the accumulated maps of the witness constructions.

Working coordinates are ``h @ (scale * y)`` where ``|h| * |y|`` can reach
1e8 while the result is O(1); float64 loses all digits there, so the maps
and point images are carried at ``DPS`` decimal digits.
"""

from __future__ import annotations

import mpmath
import numpy as np

DPS = 60


def mpvec(v) -> mpmath.matrix:
    return mpmath.matrix([mpmath.mpf(float(x)) for x in np.asarray(v).reshape(-1)])


def mpmat(a) -> mpmath.matrix:
    return mpmath.matrix([[mpmath.mpf(float(x)) for x in row] for row in np.asarray(a)])


def to_np(m) -> np.ndarray:
    if m.cols == 1:
        return np.array([float(m[i]) for i in range(m.rows)])
    return np.array([[float(m[i, j]) for j in range(m.cols)] for i in range(m.rows)])


def norm(v) -> mpmath.mpf:
    return mpmath.sqrt(sum(v[i] ** 2 for i in range(v.rows)))


def outer(u) -> mpmath.matrix:
    d = u.rows
    return mpmath.matrix([[u[i] * u[j] for j in range(d)] for i in range(d)])


def svd(a):
    """``a = U diag(s) V`` with s descending."""
    u, s, v = mpmath.svd_r(a)
    return u, [s[i] for i in range(s.rows)], v


def opnorm(a) -> mpmath.mpf:
    s = mpmath.svd_r(a, compute_uv=False)
    return max(s[i] for i in range(s.rows))


def axis_stretch(u, along, across) -> mpmath.matrix:
    """Linear map scaling the unit direction u by ``along`` and u-perp by ``across``."""
    d = u.rows
    p = outer(u)
    return along * p + across * (mpmath.eye(d) - p)


def principal_shape(a) -> np.ndarray:
    """Float shape matrix ``U diag(s)`` describing the ellipsoid ``a @ ball``.

    Column scaling keeps the float determinant accurate even when ``a`` is
    badly conditioned.
    """
    u, s, _ = svd(a)
    return to_np(u * mpmath.diag(s))
