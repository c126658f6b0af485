"""Compactly supported local linear patches and their weighted blends.

A patch is the tangent plane of the target at a probe point, scaled by c
and cut off outside a closed ball of radius r around the probe.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, SchemaError
from .kernels import patch_matrix
from .oracle import ProbeSet


@dataclass(frozen=True)
class LocalPatch:
    """Scaled tangent plane c*(L.x + b) supported on the closed ball B_r(v)."""

    v: np.ndarray
    L: np.ndarray
    b: float
    c: float = 1.0
    r: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))
        object.__setattr__(self, "L", np.asarray(self.L, dtype=float))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "r", float(self.r))
        if self.r <= 0:
            raise ValueError("patch radius must be positive")
        if self.v.shape != self.L.shape:
            raise DimensionMismatchError("center and gradient dims differ")


def make_patch(v, grad, value: float, c: float = 1.0, r: float = 1.0) -> LocalPatch:
    """Tangent-plane patch through (v, value): L = grad, b = value - grad.v."""
    v = np.asarray(v, dtype=float)
    grad = np.asarray(grad, dtype=float)
    return LocalPatch(v, grad, float(value) - float(grad @ v), c, r)


def patch_eval(p: LocalPatch, x) -> float:
    """c*(L.x + b) inside the closed support ball, 0 outside."""
    x = np.asarray(x, dtype=float)
    if x.shape != p.v.shape:
        raise DimensionMismatchError("point dim differs from patch dim")
    if np.linalg.norm(x - p.v) > p.r:
        return 0.0
    return p.c * (float(p.L @ x) + p.b)


def idw_weights(x, centers, p: float) -> np.ndarray:
    """Normalized inverse-distance weights d(x, v_i)^(-p) / sum_j d(x, v_j)^(-p).

    If x coincides with a center, that center gets weight 1.
    """
    if p <= 0:
        raise ValueError("power p must be positive")
    x = np.asarray(x, dtype=float)
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    d = np.linalg.norm(centers - x, axis=1)
    hits = d == 0.0
    if np.any(hits):
        w = np.zeros(len(d))
        w[np.argmax(hits)] = 1.0
        return w
    inv = d ** (-p)
    return inv / inv.sum()


@dataclass
class PatchModel:
    """Weighted sum of patches, optionally with pairwise product features.

    ``weighting_mode`` is "scalar" (fitted weights) or "idw" (positional
    inverse-distance blending over the patches whose ball contains x).
    """

    patches: list[LocalPatch]
    w: np.ndarray
    pair_weights: dict[tuple[int, int], float] | None = None
    weighting_mode: str = "scalar"
    idw_power: float = 2.0

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        if self.w.shape[0] != len(self.patches):
            raise DimensionMismatchError("one weight per patch required")
        if self.pair_weights:
            for (i, j) in self.pair_weights:
                if not (0 <= i < j < len(self.patches)):
                    raise ValueError(f"bad pair key ({i}, {j})")
        if self.weighting_mode not in ("scalar", "idw"):
            raise ValueError(f"unknown weighting mode {self.weighting_mode!r}")

    @property
    def dim(self) -> int:
        return self.patches[0].v.shape[0]


def patch_arrays(patches: list[LocalPatch]):
    """Stack patch fields into (V, L, b, c, r) arrays for the kernels."""
    V = np.array([p.v for p in patches])
    L = np.array([p.L for p in patches])
    b = np.array([p.b for p in patches])
    c = np.array([p.c for p in patches])
    r = np.array([p.r for p in patches])
    return V, L, b, c, r


def design_matrix(patches: list[LocalPatch], X) -> np.ndarray:
    """Matrix of patch values g'_i(x_s), shape (nsamples, npatches)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return patch_matrix(X, *patch_arrays(patches))


def pair_columns(G: np.ndarray, pairs: list[tuple[int, int]]) -> np.ndarray:
    """Product features g'_i * g'_j as extra design-matrix columns."""
    if not pairs:
        return np.zeros((G.shape[0], 0))
    return np.column_stack([G[:, i] * G[:, j] for (i, j) in pairs])


def model_eval(m: PatchModel, x) -> float:
    """Blend value h(x)."""
    return float(model_eval_batch(m, np.asarray(x, dtype=float)[None, :])[0])


def model_eval_batch(m: PatchModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != m.dim:
        raise DimensionMismatchError("point dim differs from model dim")
    G = design_matrix(m.patches, X)
    if m.weighting_mode == "idw":
        return _idw_eval(m, X, G)
    out = G @ m.w
    if m.pair_weights:
        for (i, j), wij in m.pair_weights.items():
            out += wij * G[:, i] * G[:, j]
    return out


def _idw_eval(m: PatchModel, X: np.ndarray, G: np.ndarray) -> np.ndarray:
    centers = np.array([p.v for p in m.patches])
    radii = np.array([p.r for p in m.patches])
    out = np.zeros(X.shape[0])
    for s, x in enumerate(X):
        d = np.linalg.norm(centers - x, axis=1)
        inside = np.flatnonzero(d <= radii)
        if inside.size == 0:
            continue
        w = idw_weights(x, centers[inside], m.idw_power)
        out[s] = float(w @ G[s, inside])
    return out


def dedupe_hyperplanes(probes: ProbeSet, angle_tol: float,
                       offset_tol: float) -> np.ndarray:
    """Greedy clustering of probes by their local affine piece (L, b).

    Two probes share a label when the angle between their gradients is at
    most angle_tol and their intercepts b = f(v) - L.v differ by at most
    offset_tol. Zero gradients compare by intercept alone.
    """
    if angle_tol <= 0 or offset_tol <= 0:
        raise ValueError("tolerances must be positive")
    L = probes.gradients
    b = probes.values - np.einsum("ij,ij->i", L, probes.points)
    norms = np.linalg.norm(L, axis=1)
    labels = -np.ones(len(probes), dtype=int)
    reps: list[int] = []
    for i in range(len(probes)):
        for lab, j in enumerate(reps):
            if abs(b[i] - b[j]) > offset_tol:
                continue
            if norms[i] == 0.0 and norms[j] == 0.0:
                ang = 0.0
            elif norms[i] == 0.0 or norms[j] == 0.0:
                continue
            else:
                cos = np.clip(L[i] @ L[j] / (norms[i] * norms[j]), -1.0, 1.0)
                ang = math.acos(float(cos))
            if ang <= angle_tol:
                labels[i] = lab
                break
        if labels[i] < 0:
            labels[i] = len(reps)
            reps.append(i)
    return labels


def save_model(m: PatchModel) -> str:
    pairs = []
    if m.pair_weights:
        pairs = [[i, j, val] for (i, j), val in sorted(m.pair_weights.items())]
    doc = {
        "patches": [{"v": p.v.tolist(), "L": p.L.tolist(), "b": p.b,
                     "c": p.c, "r": p.r} for p in m.patches],
        "w": m.w.tolist(),
        "w_pairs": pairs,
    }
    return json.dumps(doc, indent=1)


def load_model(text: str) -> PatchModel:
    try:
        doc = json.loads(text)
        patches = [LocalPatch(np.asarray(d["v"], dtype=float),
                              np.asarray(d["L"], dtype=float),
                              d["b"], d["c"], d["r"])
                   for d in doc["patches"]]
        pair_weights = {(int(i), int(j)): float(val)
                        for i, j, val in doc.get("w_pairs", [])} or None
        return PatchModel(patches, np.asarray(doc["w"], dtype=float), pair_weights)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed model document: {exc}") from exc
