"""Ellipsoids and volume-preserving affine maps in small dimension.

An ellipsoid is stored as ``center + shape @ (closed unit ball)``; the shape
matrix is any nonsingular linear map with that image, so two different
matrices can describe the same ellipsoid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DET_TOL = 1e-12


class DegenerateError(ValueError):
    """Input points or matrices do not span full dimension."""


class ConvergenceError(RuntimeError):
    pass


def unit_ball_volume(d: int) -> float:
    """Volume of the Euclidean unit ball in R^d."""
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d!r}")
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def _as_matrix(a, name: str) -> np.ndarray:
    m = np.array(a, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    m.setflags(write=False)
    return m


def _as_vector(v, d: int, name: str) -> np.ndarray:
    x = np.array(v, dtype=float).reshape(-1)
    if x.shape != (d,):
        raise ValueError(f"{name} must have length {d}, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} has non-finite entries")
    x.setflags(write=False)
    return x


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    center: np.ndarray
    shape: np.ndarray

    def __post_init__(self):
        shape = _as_matrix(self.shape, "shape")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "center", _as_vector(self.center, shape.shape[0], "center"))
        if np.linalg.matrix_rank(shape) < shape.shape[0]:
            raise DegenerateError("ellipsoid shape matrix is singular")

    @classmethod
    def ball(cls, center, radius: float) -> "Ellipsoid":
        c = np.asarray(center, dtype=float).reshape(-1)
        if radius <= 0:
            raise ValueError("radius must be positive")
        return cls(c, radius * np.eye(c.size))

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def volume(self) -> float:
        return unit_ball_volume(self.dim) * abs(np.linalg.det(self.shape))

    @property
    def log_volume(self) -> float:
        return math.log(unit_ball_volume(self.dim)) + np.linalg.slogdet(self.shape)[1]

    def semi_axes(self) -> np.ndarray:
        """Semi-axis lengths, descending."""
        return np.linalg.svd(self.shape, compute_uv=False)

    @property
    def diameter(self) -> float:
        return 2.0 * self.semi_axes()[0]

    def gauge(self, points) -> np.ndarray:
        """``||shape^-1 (x - center)||`` for each row; membership is gauge <= 1."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        w = np.linalg.solve(self.shape, (p - self.center).T)
        return np.sqrt(np.einsum("ij,ij->j", w, w))

    def contains(self, points, tol: float = 0.0) -> np.ndarray:
        return self.gauge(points) <= 1.0 + tol

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        half = np.sqrt(np.einsum("ij,ij->i", self.shape, self.shape))
        return self.center - half, self.center + half

    def boundary_points(self, m: int, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal((m, self.dim))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        return self.center + z @ self.shape.T

    def scaled(self, factor: float) -> "Ellipsoid":
        """Same center, every semi-axis multiplied by ``factor``."""
        return Ellipsoid(self.center, factor * self.shape)

    def to_dict(self) -> dict:
        return {"center": self.center.tolist(), "shape": self.shape.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "Ellipsoid":
        return cls(doc["center"], doc["shape"])


@dataclass(frozen=True, eq=False)
class UnimodularAffine:
    """x -> linear @ x + translation, with det(linear) = 1."""

    linear: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        lin = np.array(_as_matrix(self.linear, "linear"))
        d = lin.shape[0]
        det = np.linalg.det(lin)
        if not det > 0 or abs(det - 1.0) > 1e-6:
            raise ValueError(f"linear part must have determinant 1, got {det!r}")
        if abs(det - 1.0) > DET_TOL:
            lin = lin / det ** (1.0 / d)
        lin.setflags(write=False)
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "translation", _as_vector(self.translation, d, "translation"))

    @classmethod
    def identity(cls, d: int) -> "UnimodularAffine":
        return cls(np.eye(d), np.zeros(d))

    @classmethod
    def linear_map(cls, m) -> "UnimodularAffine":
        m = np.asarray(m, dtype=float)
        return cls(m, np.zeros(m.shape[0]))

    @classmethod
    def translate(cls, v) -> "UnimodularAffine":
        v = np.asarray(v, dtype=float).reshape(-1)
        return cls(np.eye(v.size), v)

    @property
    def dim(self) -> int:
        return self.translation.size

    def apply(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        return p @ self.linear.T + self.translation

    def __call__(self, points) -> np.ndarray:
        return self.apply(points)

    def compose(self, other: "UnimodularAffine") -> "UnimodularAffine":
        """``self o other``: apply ``other`` first."""
        return UnimodularAffine(self.linear @ other.linear,
                                self.linear @ other.translation + self.translation)

    def __matmul__(self, other: "UnimodularAffine") -> "UnimodularAffine":
        return self.compose(other)

    def inverse(self) -> "UnimodularAffine":
        inv = np.linalg.inv(self.linear)
        return UnimodularAffine(inv, -inv @ self.translation)

    def act(self, e: Ellipsoid) -> Ellipsoid:
        return Ellipsoid(self.apply(e.center), self.linear @ e.shape)

    def to_dict(self) -> dict:
        return {"linear": self.linear.tolist(), "translation": self.translation.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "UnimodularAffine":
        return cls(doc["linear"], doc["translation"])


def volume(e: Ellipsoid) -> float:
    return e.volume


def operator_norm(g) -> float:
    """Largest singular value of the linear part (accepts a bare matrix too)."""
    m = g.linear if isinstance(g, UnimodularAffine) else np.asarray(g, dtype=float)
    return float(np.linalg.norm(m, 2))


def rotation_taking_e1_to(v) -> np.ndarray:
    """Proper rotation sending e_1 to v/|v|: a Householder reflection with one
    column sign flipped so the determinant is +1."""
    u = np.asarray(v, dtype=float).reshape(-1)
    u = u / np.linalg.norm(u)
    d = u.size
    e1 = np.zeros(d)
    e1[0] = 1.0
    w = e1 - u
    nw = np.linalg.norm(w)
    if nw < 1e-15:
        return np.eye(d)
    w /= nw
    q = np.eye(d) - 2.0 * np.outer(w, w)
    if d == 1:
        return q
    q[:, -1] *= -1.0
    return q


def stretch_cover(r: float, x) -> Ellipsoid:
    """Centered ellipsoid with semi-axis |x| along x and r across it.

    Contains the ball of radius r and the point x; volume is
    ``beta_d * r**(d-1) * |x|``.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    t = float(np.linalg.norm(x))
    if not r > 0:
        raise ValueError("radius must be positive")
    if not t > r:
        raise ValueError(f"point must lie outside the ball: |x| = {t} <= r = {r}")
    u = x / t
    # rotation-invariant about the x axis, so no explicit Theta is needed
    shape = r * np.eye(x.size) + (t - r) * np.outer(u, u)
    return Ellipsoid(np.zeros(x.size), shape)


def normalize_to_ball(e: Ellipsoid) -> tuple[UnimodularAffine, float]:
    """Volume-preserving g with g.e the centered ball; returns (g, radius).

    Uses the symmetric choice ``radius * (A A^T)^(-1/2)`` for the linear part.
    """
    u, s, _ = np.linalg.svd(e.shape)
    if s[-1] <= 0 or s[-1] < s[0] * 1e-300:
        raise DegenerateError("singular ellipsoid")
    radius = float(np.exp(np.mean(np.log(s))))
    lin = (u * (radius / s)) @ u.T
    g = UnimodularAffine(lin, -lin @ e.center)
    return g, radius


def mvee(points, tol: float = 1e-7, max_iter: int = 100_000) -> Ellipsoid:
    """Minimum-volume enclosing ellipsoid (Khachiyan iteration with away steps).

    Stops when every lifted Mahalanobis value is within ``(1+tol)(d+1)``, so all
    points lie in the result scaled by ``1 + tol``.
    """
    p = np.atleast_2d(np.asarray(points, dtype=float))
    m, d = p.shape
    if m < d + 1:
        raise DegenerateError(f"need at least {d + 1} points in R^{d}, got {m}")
    q = np.hstack([p, np.ones((m, 1))])
    if np.linalg.matrix_rank(q) < d + 1:
        raise DegenerateError("points are affinely dependent")

    u = np.full(m, 1.0 / m)
    n1 = d + 1
    for _ in range(max_iter):
        x = (q.T * u) @ q
        mval = np.einsum("ij,ji->i", q, np.linalg.solve(x, q.T))
        j = int(np.argmax(mval))
        active = u > 0
        k = int(np.flatnonzero(active)[np.argmin(mval[active])])
        up, down = mval[j] / n1 - 1.0, 1.0 - mval[k] / n1
        if up <= tol and down <= tol:
            break
        if up >= down:
            step = (mval[j] - n1) / (n1 * (mval[j] - 1.0))
            u *= 1.0 - step
            u[j] += step
        else:
            step = (mval[k] - n1) / (n1 * (mval[k] - 1.0))
            if u[k] < 1.0:
                step = max(step, -u[k] / (1.0 - u[k]))
            u *= 1.0 - step
            u[k] += step
            u[u < 0] = 0.0
    else:
        raise ConvergenceError(f"MVEE did not reach tol={tol} in {max_iter} iterations")

    c = u @ p
    dev = p - c
    cov = (dev.T * u) @ dev
    w, v = np.linalg.eigh(cov)
    shape = (v * np.sqrt(d * w)) @ v.T
    return Ellipsoid(c, shape)
