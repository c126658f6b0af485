"""Black-box access to the target function over a centered ball.

Every value query goes through the counter, so query accounting is exact:
one per `query_value`, 2*n per `fd_gradient`, 2*ndirs+1 per smoothness probe.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass

import numpy as np

from .errors import OutOfDomainError, RejectionBudgetError, SchemaError

DEFAULT_H = 1e-5
DEFAULT_TOL = 1e-3
DOMAIN_SLACK = 1e-12


@dataclass
class SmoothParams:
    """Knobs for the differentiability probe used during sampling."""

    h: float = DEFAULT_H
    tol: float = DEFAULT_TOL
    ndirs: int = 0  # 0 means max(n0, 4)

    def resolved_ndirs(self, dim: int) -> int:
        return self.ndirs if self.ndirs > 0 else max(dim, 4)


class Oracle:
    """Query-counted wrapper around a scalar target on B_T(0)."""

    def __init__(self, target, dim: int, T: float):
        if T <= 0:
            raise ValueError("domain radius T must be positive")
        self.target = target
        self.dim = int(dim)
        self.T = float(T)
        self._count = 0
        self._lock = threading.Lock()

    @property
    def query_count(self) -> int:
        return self._count

    def query_value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if np.linalg.norm(x) > self.T + DOMAIN_SLACK:
            raise OutOfDomainError(
                f"point norm {np.linalg.norm(x):.6g} exceeds domain radius {self.T}"
            )
        with self._lock:
            self._count += 1
        return float(self.target(x))


def wrap_network(net, T: float) -> Oracle:
    """Oracle over a ReluNetwork; only value queries are exposed."""
    return Oracle(lambda x: net.eval(x), net.input_dim, T)


def fd_gradient(oracle: Oracle, x, h: float = DEFAULT_H) -> np.ndarray:
    """Central-difference gradient, exact on affine pieces; 2*n queries."""
    x = np.asarray(x, dtype=float)
    if h <= 0:
        raise ValueError("step h must be positive")
    if np.linalg.norm(x) + h * math.sqrt(oracle.dim) > oracle.T + DOMAIN_SLACK:
        raise OutOfDomainError("finite-difference stencil leaves the domain ball")
    grad = np.empty(oracle.dim)
    for i in range(oracle.dim):
        e = np.zeros(oracle.dim)
        e[i] = h
        grad[i] = (oracle.query_value(x + e) - oracle.query_value(x - e)) / (2.0 * h)
    return grad


def is_smooth_at(oracle: Oracle, x, h: float = DEFAULT_H, tol: float = DEFAULT_TOL,
                 ndirs: int = 0, seed: int = 0) -> bool:
    """One-sided slopes along random directions agree within tol.

    Uses 2*ndirs + 1 value queries.
    """
    x = np.asarray(x, dtype=float)
    if h <= 0 or tol <= 0:
        raise ValueError("h and tol must be positive")
    if ndirs <= 0:
        ndirs = max(oracle.dim, 4)
    if np.linalg.norm(x) + h > oracle.T + DOMAIN_SLACK:
        raise OutOfDomainError("smoothness stencil leaves the domain ball")
    rng = np.random.default_rng(seed)
    f0 = oracle.query_value(x)
    for _ in range(ndirs):
        u = rng.standard_normal(oracle.dim)
        u /= np.linalg.norm(u)
        fwd = (oracle.query_value(x + h * u) - f0) / h
        bwd = (f0 - oracle.query_value(x - h * u)) / h
        if abs(fwd - bwd) > tol:
            return False
    return True


@dataclass
class ProbeSet:
    """Accepted probe points with their gradients and values."""

    T: float
    points: np.ndarray
    gradients: np.ndarray
    values: np.ndarray
    rejected: int = 0
    queries: int = 0

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.gradients = np.atleast_2d(np.asarray(self.gradients, dtype=float))
        self.values = np.atleast_1d(np.asarray(self.values, dtype=float))
        n = self.points.shape[0]
        if self.gradients.shape[0] != n or self.values.shape[0] != n:
            raise SchemaError("points, gradients and values must have equal length")

    def __len__(self) -> int:
        return self.points.shape[0]


def sample_points(oracle: Oracle, N: int, seed: int,
                  smooth_params: SmoothParams | None = None) -> ProbeSet:
    """Uniform probes in B_T(0) that pass the smoothness test.

    Per accepted point: value, central-difference gradient, smoothness probe.
    Candidates too close to the boundary for the stencils count as rejections.
    Raises after 100*N rejections.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    sp = smooth_params or SmoothParams()
    ndirs = sp.resolved_ndirs(oracle.dim)
    margin = sp.h * max(math.sqrt(oracle.dim), 1.0) * (1.0 + 1e-9)
    budget = 100 * N
    rejected = 0
    points, grads, values = [], [], []
    cand_ss = np.random.SeedSequence(seed)
    k = 0
    while len(points) < N:
        k += 1
        v = _draw_candidate(oracle.dim, oracle.T, cand_ss, k)
        dir_seed = int(np.random.SeedSequence((seed, k)).generate_state(1)[0])
        if np.linalg.norm(v) > oracle.T - margin:
            rejected += 1
        elif not is_smooth_at(oracle, v, sp.h, sp.tol, ndirs, seed=dir_seed):
            rejected += 1
        else:
            points.append(v)
            grads.append(fd_gradient(oracle, v, sp.h))
            values.append(oracle.query_value(v))
        if rejected > budget:
            raise RejectionBudgetError(
                f"{rejected} rejections while collecting {N} probes"
            )
    return ProbeSet(oracle.T, np.array(points), np.array(grads),
                    np.array(values), rejected, oracle.query_count)


def _draw_candidate(dim: int, T: float, base_ss: np.random.SeedSequence,
                    index: int) -> np.ndarray:
    """Deterministic candidate #index from a per-index substream."""
    ss = np.random.SeedSequence(entropy=base_ss.entropy, spawn_key=(7, index))
    rng = np.random.default_rng(ss)
    u = rng.standard_normal(dim)
    u /= np.linalg.norm(u)
    return T * rng.uniform() ** (1.0 / dim) * u


def save_probes(ps: ProbeSet) -> str:
    doc = {
        "T": ps.T,
        "points": ps.points.tolist(),
        "gradients": ps.gradients.tolist(),
        "values": ps.values.tolist(),
        "rejected": ps.rejected,
        "queries": ps.queries,
    }
    return json.dumps(doc, indent=1)


def load_probes(text: str) -> ProbeSet:
    try:
        doc = json.loads(text)
        return ProbeSet(float(doc["T"]), np.asarray(doc["points"], dtype=float),
                        np.asarray(doc["gradients"], dtype=float),
                        np.asarray(doc["values"], dtype=float),
                        int(doc["rejected"]), int(doc["queries"]))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed probe document: {exc}") from exc
