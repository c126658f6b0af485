"""Hyperplane algebra, n-ball volumes and moments, and Monte Carlo integration.

The closed-form ball integral uses the second moment
``integral over B_r(0) of x x^T dx = V_n(1) * r^(n+2) / (n+2) * I_n``.
(The appendix of the source derivation states ``r^2/n I_n``, which is
dimensionally inconsistent with its own ``b_i b_j r^n V_n`` term; the moment
used here follows from the radial integral and is validated against
:func:`mc_integral`.)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePairError

RANK_TOL = 1e-10
COLINEAR_TOL = 1e-9


@dataclass(frozen=True)
class Hyperplane:
    """Set {x : a^T x = beta} with unit normal a."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        a = np.asarray(self.normal, dtype=float)
        object.__setattr__(self, "normal", a)
        object.__setattr__(self, "offset", float(self.offset))
        if abs(np.linalg.norm(a) - 1.0) > 1e-12:
            raise ValueError("hyperplane normal must be a unit vector")

    @classmethod
    def from_general(cls, a, beta: float) -> "Hyperplane":
        """Normalize a general a^T x = beta description."""
        a = np.asarray(a, dtype=float)
        norm = np.linalg.norm(a)
        if norm == 0.0:
            raise ValueError("zero normal vector")
        return cls(a / norm, beta / norm)

    def residual(self, x) -> float:
        return float(self.normal @ np.asarray(x, dtype=float) - self.offset)


@dataclass(frozen=True)
class AffineSubspace:
    """Point `base` plus the span of the columns of `basis`."""

    base: np.ndarray
    basis: np.ndarray

    def point(self, tau) -> np.ndarray:
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        return self.base + self.basis @ tau


@dataclass(frozen=True)
class Ball:
    """Closed ball of radius r around center."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "radius", float(self.radius))
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")

    @property
    def dim(self) -> int:
        return self.center.shape[0]


def angle(h1: Hyperplane, h2: Hyperplane) -> float:
    """Angle in [0, pi] between the two unit normals."""
    c = float(np.clip(h1.normal @ h2.normal, -1.0, 1.0))
    return math.acos(c)


def least_norm_point(h1: Hyperplane, h2: Hyperplane) -> np.ndarray:
    """Point of the two-plane intersection closest to the origin."""
    cos_t = float(np.clip(h1.normal @ h2.normal, -1.0, 1.0))
    if abs(cos_t) >= 1.0 - COLINEAR_TOL:
        raise DegeneratePairError("hyperplane normals are colinear")
    sin2 = 1.0 - cos_t * cos_t
    c1 = (h1.offset - h2.offset * cos_t) / sin2
    c2 = (h2.offset - h1.offset * cos_t) / sin2
    return c1 * h1.normal + c2 * h2.normal


def intersection(h1: Hyperplane, h2: Hyperplane) -> AffineSubspace:
    """(n-2)-dimensional intersection of two hyperplanes.

    The direction space comes from the null space of A = [a1^T; a2^T],
    computed by reduced row echelon form with greedy largest-pivot column
    permutation: columns of P [-F; I_{n-2}].
    """
    A = np.vstack([h1.normal, h2.normal])
    n = A.shape[1]
    base = least_norm_point(h1, h2)
    if n == 2:
        return AffineSubspace(base, np.zeros((2, 0)))

    # Greedy pivot columns, then eliminate to [I_2 | F] on the permuted matrix.
    R = A.copy()
    p1 = int(np.argmax(np.abs(R[0])))
    if abs(R[0, p1]) <= RANK_TOL:
        raise DegeneratePairError("first normal is numerically zero")
    R[1] -= (R[1, p1] / R[0, p1]) * R[0]
    masked = np.abs(R[1]).copy()
    masked[p1] = -1.0
    p2 = int(np.argmax(masked))
    if abs(R[1, p2]) <= RANK_TOL:
        raise DegeneratePairError("normals are numerically colinear")
    perm = [p1, p2] + [j for j in range(n) if j not in (p1, p2)]
    AP = A[:, perm]
    F = np.linalg.solve(AP[:, :2], AP[:, 2:])
    null_y = np.vstack([-F, np.eye(n - 2)])
    basis = np.zeros((n, n - 2))
    basis[perm, :] = null_y
    return AffineSubspace(base, basis)


def ball_volume(n: int, r: float) -> float:
    """Volume of the n-ball of radius r: pi^(n/2) r^n / Gamma(n/2 + 1)."""
    if n < 1 or r <= 0:
        raise ValueError("need n >= 1 and r > 0")
    return math.pi ** (n / 2.0) * r ** n / math.gamma(n / 2.0 + 1.0)


def ball_second_moment(n: int, r: float) -> float:
    """Scalar s with integral of x x^T over B_r(0) equal to s * I_n."""
    return ball_volume(n, 1.0) * r ** (n + 2) / (n + 2)


def ball_product_integral(gi: tuple, gj: tuple, ball: Ball) -> float:
    """Exact integral of (Li.x + bi)(Lj.x + bj) over the ball.

    Centering the ball at the origin leaves a constant term times the volume
    plus the quadratic term through the second moment; the linear cross terms
    vanish by symmetry.
    """
    Li, bi = np.asarray(gi[0], dtype=float), float(gi[1])
    Lj, bj = np.asarray(gj[0], dtype=float), float(gj[1])
    n, r, c = ball.dim, ball.radius, ball.center
    const_i = Li @ c + bi
    const_j = Lj @ c + bj
    return const_i * const_j * ball_volume(n, r) + (Li @ Lj) * ball_second_moment(n, r)


def sample_ball(center, radius: float, nsamples: int, seed: int) -> np.ndarray:
    """Uniform samples in a ball, shape (nsamples, n).

    Direction = normalized Gaussian, radius = r * U^(1/n). Directions and
    radii use independent child streams of the seed, so the first k rows of
    a longer draw equal a draw of k samples (prefix nesting).
    """
    center = np.atleast_1d(np.asarray(center, dtype=float))
    n = center.shape[0]
    dir_ss, rad_ss = np.random.SeedSequence(seed).spawn(2)
    dirs = np.random.default_rng(dir_ss).standard_normal((nsamples, n))
    norms = np.linalg.norm(dirs, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    u = np.random.default_rng(rad_ss).uniform(size=(nsamples, 1))
    return center + radius * u ** (1.0 / n) * dirs / norms


def mc_integral(f, ball: Ball, nsamples: int, seed: int) -> tuple[float, float]:
    """Monte Carlo integral of f over a ball: (estimate, standard error).

    ``f`` must accept an (N, n) array of points and return N values.
    """
    if nsamples < 1:
        raise ValueError("nsamples must be >= 1")
    X = sample_ball(ball.center, ball.radius, nsamples, seed)
    vals = np.asarray(f(X), dtype=float)
    vol = ball_volume(ball.dim, ball.radius)
    est = vol * float(np.mean(vals))
    stderr = vol * float(np.std(vals)) / math.sqrt(nsamples)
    return est, stderr
