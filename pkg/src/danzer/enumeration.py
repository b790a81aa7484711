"""Integer points inside an ellipsoid, by coordinate-wise slicing.

The quadratic form ``|M^{-1}(z - c)|^2`` is triangularised (QR of ``M^{-1}``)
and the last coordinate is enumerated first; each further coordinate ranges
over the interval left by the partial sum.  All candidate rows are expanded
together with numpy, so the cost is proportional to the number of lattice
points in the successive projections of the ellipsoid.  No basis reduction is
attempted.
"""

from __future__ import annotations

import math

import numpy as np

MAX_CANDIDATES = 20_000_000


class EnumerationLimitError(RuntimeError):
    pass


def _upper_triangular_form(shape: np.ndarray) -> np.ndarray:
    inv = np.linalg.inv(shape)
    r = np.linalg.qr(inv, mode="r")
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return r * signs[:, None]


def integer_points_in_ellipsoid(center, shape, pad: float = 1e-6,
                                limit: int = MAX_CANDIDATES) -> np.ndarray:
    """All z in Z^d with ``|shape^{-1}(z - center)| <= 1 + pad``.

    ``pad`` absorbs rounding so the result is a superset of the exact answer;
    callers filter afterwards.  Rows are returned in lexicographic order.
    """
    c = np.asarray(center, dtype=float).reshape(-1)
    m = np.asarray(shape, dtype=float)
    d = c.size
    r = _upper_triangular_form(m)
    cond = np.linalg.cond(m)
    pad = max(pad, 64 * np.finfo(float).eps * cond)
    budget0 = (1.0 + pad) ** 2

    # rows of chosen integer coordinates for levels d-1 .. i, as offsets from c
    idx = np.zeros((1, 0), dtype=np.int64)
    dev = np.zeros((1, 0))
    budget = np.array([budget0])
    for i in range(d - 1, -1, -1):
        rii = r[i, i]
        tail = r[i, i + 1:]
        shift = dev @ tail / rii if dev.shape[1] else np.zeros(len(budget))
        half = np.sqrt(np.maximum(budget, 0.0)) / abs(rii)
        mid = c[i] - shift
        lo = np.ceil(mid - half - pad).astype(np.int64)
        hi = np.floor(mid + half + pad).astype(np.int64)
        counts = np.maximum(hi - lo + 1, 0)
        total = int(counts.sum())
        if total > limit:
            raise EnumerationLimitError(
                f"{total} candidates at level {i} exceeds limit {limit}")
        if total == 0:
            return np.zeros((0, d), dtype=np.int64)
        rep = np.repeat(np.arange(len(counts)), counts)
        starts = np.repeat(np.cumsum(counts) - counts, counts)
        zi = lo[rep] + (np.arange(total) - starts)
        dev_i = zi - c[i]
        row = rii * dev_i + (shift[rep] * rii)
        budget = budget[rep] - row * row
        keep = budget >= -2 * pad
        idx = np.column_stack([zi[keep], idx[rep][keep]])
        dev = np.column_stack([dev_i[keep], dev[rep][keep]])
        budget = budget[keep]
    order = np.lexsort(idx.T[::-1])
    return idx[order]


def integer_points_in_box(lo, hi) -> np.ndarray:
    """All integer points of the closed box [lo, hi], lexicographic order."""
    lo = np.ceil(np.asarray(lo, dtype=float)).astype(np.int64)
    hi = np.floor(np.asarray(hi, dtype=float)).astype(np.int64)
    if np.any(hi < lo):
        return np.zeros((0, lo.size), dtype=np.int64)
    size = int(np.prod(hi - lo + 1))
    if size > MAX_CANDIDATES:
        raise EnumerationLimitError(f"box holds {size} integer points")
    axes = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grid], axis=1)


def inflate(shape, radius: float) -> np.ndarray:
    """Shape of an ellipsoid containing ``E + B_radius`` (Minkowski sum).

    Uses ``M' M'^T = 2 (M M^T + radius^2 I)``; the factor 2 makes the support
    function dominate ``h_E + radius``.
    """
    m = np.asarray(shape, dtype=float)
    if radius <= 0:
        return m
    u, s, _ = np.linalg.svd(m)
    return (u * np.sqrt(2.0 * (s * s + radius * radius))) @ u.T


def ball_count_estimate(d: int, radius: float) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * radius ** d
