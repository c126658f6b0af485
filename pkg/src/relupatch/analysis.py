"""Reconstruction quality metrics, region counting, and boundary bending.

Region counts are empirical (distinct activation patterns over samples):
exact cell enumeration is exponential, and a dense 1-D sweep serves as the
desk-scale exactness oracle in the tests.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import RelupatchError
from .geometry import ball_volume, sample_ball
from .relunet import ReluNetwork

ANGLE_BEND_TOL = 1e-3
ZERO_SET_TOL = 1e-6
BISECT_TOL = 1e-10


@dataclass
class DistanceEstimate:
    """Monte Carlo estimate of the d_p distance over B_T(0)."""

    value: float
    stderr: float
    p: float
    nsamples: int
    seed: int

    def to_dict(self) -> dict:
        return {"value": self.value, "stderr": self.stderr, "p": self.p,
                "nsamples": self.nsamples, "seed": self.seed}


def dp_distance(f, g, dim: int, T: float, p: float, nsamples: int,
                seed: int) -> DistanceEstimate:
    """(integral of |f - g|^p over B_T(0))^(1/p), by uniform sampling.

    ``f`` and ``g`` take an (N, dim) array of points and return N values.
    The standard error is propagated through the 1/p power by the delta
    method.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    X = sample_ball(np.zeros(dim), T, nsamples, seed)
    diff = np.abs(np.asarray(f(X), dtype=float) - np.asarray(g(X), dtype=float))
    powed = diff ** p
    vol = ball_volume(dim, T)
    mean = float(np.mean(powed))
    se_mean = float(np.std(powed)) / math.sqrt(nsamples)
    value = (vol * mean) ** (1.0 / p)
    if mean > 0:
        stderr = (1.0 / p) * (vol * mean) ** (1.0 / p - 1.0) * vol * se_mean
    else:
        stderr = 0.0
    return DistanceEstimate(value, stderr, p, nsamples, seed)


def count_regions(net: ReluNetwork, T: float, nsamples: int, seed: int) -> int:
    """Distinct activation patterns among uniform samples: a lower bound
    on the number of linear regions meeting B_T(0)."""
    X = sample_ball(np.zeros(net.input_dim), T, nsamples, seed)
    return len(set(net.activation_patterns_batch(X)))


def sweep_regions_1d(net: ReluNetwork, T: float, npoints: int = 100_001) -> int:
    """Exhaustive 1-D oracle: distinct patterns along a dense grid on [-T, T]."""
    if net.input_dim != 1:
        raise ValueError("sweep oracle is 1-D only")
    xs = np.linspace(-T, T, npoints)[:, None]
    patterns = net.activation_patterns_batch(xs)
    return len(set(patterns))


def _fd_grad(fn, x: np.ndarray, h: float = 1e-7) -> np.ndarray:
    g = np.empty(x.shape[0])
    for i in range(x.shape[0]):
        e = np.zeros(x.shape[0])
        e[i] = h
        g[i] = (fn(x + e) - fn(x - e)) / (2.0 * h)
    return g


def _bisect_zero(fn, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Zero of fn on the segment [lo, hi]; endpoint signs must differ."""
    flo, fhi = fn(lo), fn(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise RelupatchError("no sign change on the probe segment")
    while np.linalg.norm(hi - lo) > BISECT_TOL:
        mid = 0.5 * (lo + hi)
        fmid = fn(mid)
        if fmid == 0.0:
            return mid
        if flo * fmid < 0:
            hi = mid
        else:
            lo, flo = mid, fmid
    return 0.5 * (lo + hi)


def _boundary_bends(net: ReluNetwork, neuron, other, x_star: np.ndarray,
                    eps: float) -> bool:
    """Does the zero set of `neuron` kink where it crosses `other`'s zero set?

    Traces the boundary to one point on each side of the other boundary,
    then compares unit normals (pre-activation gradients) there.
    """
    la, ua = neuron
    z = lambda x: net.preactivation(x, la, ua)
    z2 = lambda x: net.preactivation(x, other[0], other[1])
    gz = _fd_grad(z, x_star)
    g2 = _fd_grad(z2, x_star)
    nz = gz / np.linalg.norm(gz)
    # direction along B_z that crosses B_z2
    t = g2 - (g2 @ nz) * nz
    tn = np.linalg.norm(t)
    if tn < 1e-12:
        raise RelupatchError("boundaries are tangent at the probe point")
    t /= tn
    normals = []
    for side in (1.0, -1.0):
        x0 = x_star + side * eps * t
        # project back onto B_z along its normal
        x_on = _bisect_zero(z, x0 - 2.0 * eps * nz, x0 + 2.0 * eps * nz)
        g = net.preactivation_gradient(x_on, la, ua)
        normals.append(g / np.linalg.norm(g))
    cos = float(np.clip(normals[0] @ normals[1], -1.0, 1.0))
    return math.acos(cos) > ANGLE_BEND_TOL


def classify_intersection(net: ReluNetwork, neuron_z, neuron_z2, x_star,
                          eps: float = 1e-2) -> str:
    """Bending trichotomy at a crossing of two neuron boundaries.

    ``neuron_z`` and ``neuron_z2`` are (layer, unit) pairs, 0-based.
    Returns "z_bends", "z2_bends", "neither", or "both" (anomalous).
    """
    x_star = np.asarray(x_star, dtype=float)
    if eps <= 0:
        raise ValueError("eps must be positive")
    za = net.preactivation(x_star, neuron_z[0], neuron_z[1])
    zb = net.preactivation(x_star, neuron_z2[0], neuron_z2[1])
    if abs(za) > ZERO_SET_TOL or abs(zb) > ZERO_SET_TOL:
        raise RelupatchError("x_star is not near both zero sets")
    a_bends = _boundary_bends(net, neuron_z, neuron_z2, x_star, eps)
    b_bends = _boundary_bends(net, neuron_z2, neuron_z, x_star, eps)
    if a_bends and b_bends:
        return "both"
    if a_bends:
        return "z_bends"
    if b_bends:
        return "z2_bends"
    return "neither"


@dataclass
class ConjectureReport:
    """Sparsity counts next to first-layer width and region count.

    Reported, never asserted: whether nonzero weights match the first-layer
    width is an open conjecture of the method.
    """

    nonzero_weights: int
    first_layer_width: int
    nonzero_pairs: int
    empirical_region_count: int
    lambda_grid: list[tuple[float, int]]

    def to_json(self) -> str:
        return json.dumps({
            "nonzero_weights": self.nonzero_weights,
            "first_layer_width": self.first_layer_width,
            "nonzero_pairs": self.nonzero_pairs,
            "empirical_region_count": self.empirical_region_count,
            "lambda_grid": [[lam, k] for lam, k in self.lambda_grid],
        }, indent=1)


def conjecture_report(fit_report, net: ReluNetwork, lambda_grid, rerun,
                      T: float = 1.0, region_samples: int = 100_000,
                      region_seed: int = 0,
                      threshold: float = 1e-8) -> ConjectureReport:
    """Rerun the fit across a lambda grid and tabulate nonzero counts.

    ``rerun`` maps a lambda value to a FitReport on the same instance.
    """
    grid = []
    for lam in lambda_grid:
        rep = rerun(float(lam))
        grid.append((float(lam), rep.nonzero_count(threshold)))
    return ConjectureReport(
        nonzero_weights=fit_report.nonzero_count(threshold),
        first_layer_width=net.arch.widths[1],
        nonzero_pairs=fit_report.nonzero_pair_count(threshold),
        empirical_region_count=count_regions(net, T, region_samples, region_seed),
        lambda_grid=grid,
    )
