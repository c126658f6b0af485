"""Convex weighted-patch least squares.

The integral objective L(w) = int over B_T(0) of (h(x) - f(x))^2 dx is
discretized once per fit on a seeded uniform sample of the ball. On that
fixed sample set the objective is an exact convex quadratic in the weights,
so gradient descent admits an exact normal-equations cross-check. The
Hessian is twice a Gram matrix of the patch functions; Gershgorin diagonal
dominance of its estimate certifies strict convexity and a unique minimizer.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, asdict

import numpy as np

from .errors import (DivergenceError, DuplicatePointError, OverlapError,
                     SchemaError, SingularSystemError)
from .geometry import Ball, ball_product_integral, ball_volume, sample_ball
from .oracle import Oracle, ProbeSet
from .patches import (LocalPatch, PatchModel, design_matrix, pair_columns,
                      patch_arrays)

NONZERO_THRESHOLD = 1e-8
DEFAULT_MC_SAMPLES = 200_000
DIVERGENCE_PATIENCE = 50


@dataclass
class FitConfig:
    """Gradient-descent settings.

    learning_rate=0 means automatic: 1 / lambda_max of the fixed-sample
    Hessian, estimated by power iteration.
    """

    learning_rate: float = 0.0
    max_iters: int = 100_000
    grad_tol: float = 1e-10
    reg: str = "none"  # "none" | "l1" | "l2"
    lam: float = 0.0
    mc_samples: int = DEFAULT_MC_SAMPLES
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate < 0 or self.grad_tol <= 0 or self.max_iters < 1:
            raise ValueError("invalid learning_rate / grad_tol / max_iters")
        if self.reg not in ("none", "l1", "l2"):
            raise ValueError(f"unknown regularizer {self.reg!r}")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.mc_samples < 1:
            raise ValueError("mc_samples must be positive")


@dataclass
class FitReport:
    """Result of a weight fit on the fixed sample set."""

    final_objective: float
    iterations: int
    weights: np.ndarray
    pair_weights: dict[tuple[int, int], float] | None
    gershgorin_margins: np.ndarray
    gershgorin_ok: bool
    converged: bool
    query_count: int
    config: FitConfig

    def nonzero_count(self, threshold: float = NONZERO_THRESHOLD) -> int:
        return int(np.sum(np.abs(self.weights) > threshold))

    def nonzero_pair_count(self, threshold: float = NONZERO_THRESHOLD) -> int:
        if not self.pair_weights:
            return 0
        return sum(1 for v in self.pair_weights.values() if abs(v) > threshold)


def save_report(rep: FitReport) -> str:
    doc = {
        "final_objective": rep.final_objective,
        "iterations": rep.iterations,
        "weights": rep.weights.tolist(),
        "pair_weights": ([[i, j, v] for (i, j), v in sorted(rep.pair_weights.items())]
                         if rep.pair_weights else []),
        "gershgorin_margins": rep.gershgorin_margins.tolist(),
        "gershgorin_ok": rep.gershgorin_ok,
        "converged": rep.converged,
        "nonzero_count": rep.nonzero_count(),
        "nonzero_pair_count": rep.nonzero_pair_count(),
        "query_count": rep.query_count,
        "config": asdict(rep.config),
    }
    return json.dumps(doc, indent=1)


def load_report(text: str) -> FitReport:
    try:
        doc = json.loads(text)
        cfg = FitConfig(**doc["config"])
        pair_weights = {(int(i), int(j)): float(v)
                        for i, j, v in doc.get("pair_weights", [])} or None
        return FitReport(float(doc["final_objective"]), int(doc["iterations"]),
                         np.asarray(doc["weights"], dtype=float), pair_weights,
                         np.asarray(doc["gershgorin_margins"], dtype=float),
                         bool(doc["gershgorin_ok"]), bool(doc["converged"]),
                         int(doc["query_count"]), cfg)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed fit report: {exc}") from exc


# ---------------------------------------------------------------------------
# Hessian and radius selection
# ---------------------------------------------------------------------------

def _query_batch(oracle: Oracle, X: np.ndarray) -> np.ndarray:
    return np.array([oracle.query_value(x) for x in X])


def _sample_set(dim: int, T: float, nsamples: int, seed: int) -> np.ndarray:
    return sample_ball(np.zeros(dim), T, nsamples, seed)


def hessian(patches: list[LocalPatch], T: float,
            estimator: str = "monte_carlo",
            nsamples: int = DEFAULT_MC_SAMPLES, seed: int = 0,
            with_stderr: bool = False):
    """Hessian H_ij = 2 * integral over B_T(0) of g'_i g'_j.

    ``closed_form_disjoint`` needs pairwise-disjoint supports inside the
    domain ball: off-diagonals vanish and diagonals have an exact formula.
    ``monte_carlo`` works always; with_stderr also returns the entrywise
    standard error of the estimate.
    """
    if not patches:
        raise ValueError("patches must be nonempty")
    if estimator == "closed_form_disjoint":
        H = _hessian_closed_form(patches, T)
        return (H, np.zeros_like(H)) if with_stderr else H
    if estimator != "monte_carlo":
        raise ValueError(f"unknown estimator {estimator!r}")
    X = _sample_set(patches[0].v.shape[0], T, nsamples, seed)
    G = design_matrix(patches, X)
    return _hessian_from_design(G, T, patches[0].v.shape[0], with_stderr)


def _hessian_from_design(G: np.ndarray, T: float, dim: int,
                         with_stderr: bool = False):
    ns = G.shape[0]
    vol = ball_volume(dim, T)
    H = (2.0 * vol / ns) * (G.T @ G)
    if not with_stderr:
        return H
    # entrywise stderr of the MC mean of 2*vol*g'_i g'_j
    sq = (G * G).T @ (G * G)  # sum over samples of (g_i g_j)^2
    mean = (G.T @ G) / ns
    var = np.maximum(sq / ns - mean * mean, 0.0)
    se = 2.0 * vol * np.sqrt(var / ns)
    return H, se


def _hessian_closed_form(patches: list[LocalPatch], T: float) -> np.ndarray:
    V, L, b, c, r = patch_arrays(patches)
    npatch = len(patches)
    for i in range(npatch):
        if np.linalg.norm(V[i]) + r[i] > T + 1e-9:
            raise OverlapError(f"patch {i} support leaves the domain ball")
        for j in range(i + 1, npatch):
            if np.linalg.norm(V[i] - V[j]) < r[i] + r[j] - 1e-12:
                raise OverlapError(f"patches {i} and {j} overlap")
    H = np.zeros((npatch, npatch))
    for i in range(npatch):
        ball = Ball(V[i], r[i])
        H[i, i] = 2.0 * c[i] ** 2 * ball_product_integral((L[i], b[i]),
                                                          (L[i], b[i]), ball)
    return H


def gershgorin_check(H: np.ndarray) -> tuple[bool, np.ndarray]:
    """Diagonal-dominance margins H_ii - sum_{j!=i} |H_ij|.

    ok means every margin is nonnegative and every diagonal entry is
    nonnegative, which places all eigenvalues at or above zero.
    """
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("H must be square")
    absH = np.abs(H)
    margins = np.diag(H) - (absH.sum(axis=1) - np.abs(np.diag(H)))
    ok = bool(np.all(margins >= 0.0) and np.all(np.diag(H) >= 0.0))
    return ok, margins


def select_radii(probes: ProbeSet, c, T: float, mode: str = "disjoint",
                 shrink: float = 0.7, nsamples: int = 20_000,
                 seed: int = 0) -> np.ndarray:
    """Support radii for the patches built on the probe points.

    disjoint: half the nearest-neighbor distance, clipped inside B_T(0).
    gershgorin: start from twice the disjoint radii and shrink all radii
    geometrically until the Monte Carlo Hessian passes gershgorin_check;
    terminates because disjoint supports zero the off-diagonals.
    """
    if mode not in ("disjoint", "gershgorin"):
        raise ValueError(f"unknown radii mode {mode!r}")
    if not (0.0 < shrink < 1.0):
        raise ValueError("shrink must be in (0, 1)")
    V = probes.points
    npts = V.shape[0]
    c = np.broadcast_to(np.asarray(c, dtype=float), (npts,))
    room = T - np.linalg.norm(V, axis=1)
    if npts == 1:
        radii = room.copy()
    else:
        d = np.linalg.norm(V[:, None, :] - V[None, :, :], axis=2)
        np.fill_diagonal(d, np.inf)
        nearest = d.min(axis=1)
        if np.any(nearest == 0.0):
            raise DuplicatePointError("duplicate probe points")
        radii = np.minimum(0.5 * nearest, room)
    if np.any(radii <= 0.0):
        raise DuplicatePointError("a probe point sits on the domain boundary")
    if mode == "disjoint":
        return radii

    radii = np.minimum(2.0 * radii, room)
    while True:
        patches = [LocalPatch(V[i], probes.gradients[i],
                              probes.values[i] - probes.gradients[i] @ V[i],
                              c[i], radii[i]) for i in range(npts)]
        H = hessian(patches, T, "monte_carlo", nsamples, seed)
        ok, _ = gershgorin_check(H)
        if ok:
            return radii
        radii = radii * shrink


# ---------------------------------------------------------------------------
# Objective and solvers
# ---------------------------------------------------------------------------

def _model_design(model: PatchModel, X: np.ndarray) -> np.ndarray:
    """Design matrix including pair-feature columns when present."""
    G = design_matrix(model.patches, X)
    if model.pair_weights:
        pairs = sorted(model.pair_weights)
        G = np.hstack([G, pair_columns(G, pairs)])
    return G


def _model_coeffs(model: PatchModel) -> np.ndarray:
    w = model.w
    if model.pair_weights:
        w = np.concatenate([w, [model.pair_weights[k]
                                for k in sorted(model.pair_weights)]])
    return w


def objective(model: PatchModel, oracle: Oracle, nsamples: int,
              seed: int) -> float:
    """Monte Carlo estimate of the squared-error integral over B_T(0)."""
    X = _sample_set(model.dim, oracle.T, nsamples, seed)
    fvals = _query_batch(oracle, X)
    resid = _model_design(model, X) @ _model_coeffs(model) - fvals
    return ball_volume(model.dim, oracle.T) * float(np.mean(resid * resid))


def objective_gradient(model: PatchModel, oracle: Oracle, nsamples: int,
                       seed: int) -> np.ndarray:
    """Gradient 2 * integral of (h - f) g'_i, on the same samples as objective."""
    X = _sample_set(model.dim, oracle.T, nsamples, seed)
    fvals = _query_batch(oracle, X)
    G = _model_design(model, X)
    resid = G @ _model_coeffs(model) - fvals
    vol = ball_volume(model.dim, oracle.T)
    grad = (2.0 * vol / nsamples) * (G.T @ resid)
    return grad[:len(model.patches)] if not model.pair_weights else grad


def solve_normal_equations(patches: list[LocalPatch], oracle: Oracle,
                           nsamples: int, seed: int,
                           ridge: float = 0.0) -> np.ndarray:
    """Exact minimizer of the fixed-sample quadratic: (G'G + ridge I) w = G'f."""
    X = _sample_set(patches[0].v.shape[0], oracle.T, nsamples, seed)
    fvals = _query_batch(oracle, X)
    G = design_matrix(patches, X)
    return _normal_solve(G, fvals, ridge)


def _normal_solve(G: np.ndarray, fvals: np.ndarray, ridge: float) -> np.ndarray:
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    A = G.T @ G + ridge * np.eye(G.shape[1])
    rhs = G.T @ fvals
    if ridge == 0.0:
        if np.linalg.matrix_rank(A, hermitian=True) < A.shape[0]:
            raise SingularSystemError("normal equations are singular; use ridge > 0")
    try:
        return np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc


def power_iteration_lmax(A: np.ndarray, iters: int = 200, seed: int = 0) -> float:
    """Largest eigenvalue of a symmetric PSD matrix by power iteration."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(A.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        u = A @ v
        norm = np.linalg.norm(u)
        if norm == 0.0:
            return 0.0
        v = u / norm
        lam = float(v @ A @ v)
    return lam


def _soft_threshold(w: np.ndarray, t: float) -> np.ndarray:
    return np.sign(w) * np.maximum(np.abs(w) - t, 0.0)


def _descend(G: np.ndarray, fvals: np.ndarray, vol: float,
             config: FitConfig) -> tuple[np.ndarray, int, bool]:
    """Gradient descent (proximal for l1) on the fixed-sample quadratic.

    Works on the precomputed Gram matrix, so each iteration is O(k^2) in
    the number of features rather than O(ns * k).
    """
    ns, k = G.shape
    scale = 2.0 * vol / ns
    A = scale * (G.T @ G)  # Hessian of the smooth part (before l2 term)
    rhs = scale * (G.T @ fvals)
    lam = config.lam
    if config.reg == "l2":
        A_smooth = A + 2.0 * lam * np.eye(k)
    else:
        A_smooth = A
    lr = config.learning_rate
    if lr == 0.0:
        lmax = power_iteration_lmax(A_smooth, seed=config.seed)
        lr = 1.0 / lmax if lmax > 0 else 1.0

    def quad_obj(w):
        resid_term = float(w @ (A @ w)) / 2.0 - float(rhs @ w)
        obj = resid_term + (vol / ns) * float(fvals @ fvals)
        if config.reg == "l2":
            obj += lam * float(w @ w)
        elif config.reg == "l1":
            obj += lam * float(np.sum(np.abs(w)))
        return obj

    w = np.zeros(k)
    prev_obj = quad_obj(w)
    grow_streak = 0
    converged = False
    iters = 0
    for iters in range(1, config.max_iters + 1):
        grad = A_smooth @ w - rhs
        w_new = w - lr * grad
        if config.reg == "l1":
            w_new = _soft_threshold(w_new, lam * lr)
        step = np.linalg.norm(w_new - w)
        w = w_new
        if np.linalg.norm(grad) <= config.grad_tol or \
                (config.reg == "l1" and step <= config.grad_tol * lr):
            converged = True
            break
        obj = quad_obj(w)
        if obj > prev_obj or not np.isfinite(obj):
            grow_streak += 1
            if grow_streak >= DIVERGENCE_PATIENCE:
                raise DivergenceError(
                    f"objective grew for {DIVERGENCE_PATIENCE} consecutive "
                    f"iterations (iter {iters}, lr {lr:.3g}, objective {obj:.6g})"
                )
        else:
            grow_streak = 0
        prev_obj = obj
    return w, iters, converged


def fit_weights(patches: list[LocalPatch], oracle: Oracle,
                config: FitConfig) -> FitReport:
    """Fit scalar patch weights by gradient descent on the fixed sample set."""
    return _fit(patches, oracle, config, pair_set=None)


def fit_second_order(patches: list[LocalPatch], oracle: Oracle,
                     config: FitConfig,
                     pair_set: list[tuple[int, int]]) -> FitReport:
    """Joint fit of patch weights and pairwise product-feature weights.

    Pairs whose supports are disjoint contribute an identically zero feature
    and are dropped with a warning.
    """
    V, _, _, _, r = patch_arrays(patches)
    kept = []
    for (i, j) in pair_set:
        if not (0 <= i < j < len(patches)):
            raise ValueError(f"bad pair ({i}, {j})")
        if np.linalg.norm(V[i] - V[j]) >= r[i] + r[j]:
            warnings.warn(f"pair ({i}, {j}) has disjoint supports; dropped")
            continue
        kept.append((i, j))
    return _fit(patches, oracle, config, pair_set=kept)


def all_overlapping_pairs(patches: list[LocalPatch]) -> list[tuple[int, int]]:
    """Every (i, j), i < j, whose support balls intersect with positive measure."""
    V, _, _, _, r = patch_arrays(patches)
    out = []
    for i in range(len(patches)):
        for j in range(i + 1, len(patches)):
            if np.linalg.norm(V[i] - V[j]) < r[i] + r[j]:
                out.append((i, j))
    return out


def _fit(patches: list[LocalPatch], oracle: Oracle, config: FitConfig,
         pair_set: list[tuple[int, int]] | None) -> FitReport:
    dim = patches[0].v.shape[0]
    X = _sample_set(dim, oracle.T, config.mc_samples, config.seed)
    fvals = _query_batch(oracle, X)
    G = design_matrix(patches, X)
    pairs = sorted(pair_set) if pair_set else []
    Gfull = np.hstack([G, pair_columns(G, pairs)]) if pairs else G
    vol = ball_volume(dim, oracle.T)
    wfull, iters, converged = _descend(Gfull, fvals, vol, config)

    resid = Gfull @ wfull - fvals
    final_obj = vol * float(np.mean(resid * resid))
    H = _hessian_from_design(G, oracle.T, dim)
    ok, margins = gershgorin_check(H)
    npatch = len(patches)
    pair_weights = ({pairs[k]: float(wfull[npatch + k]) for k in range(len(pairs))}
                    if pairs else ({} if pair_set is not None else None))
    return FitReport(final_obj, iters, wfull[:npatch], pair_weights or None,
                     margins, ok, converged, oracle.query_count, config)
