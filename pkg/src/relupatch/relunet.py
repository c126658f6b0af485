"""Deep ReLU networks with explicit affine layers.

Networks here are the ground-truth targets: small, fully connected,
scalar output, evaluated exactly in float64.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, OnBoundaryError, SchemaError

BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class Architecture:
    """Layer widths (n0, n1, ..., nm) with nm = 1."""

    widths: tuple[int, ...]

    def __post_init__(self):
        widths = tuple(int(w) for w in self.widths)
        object.__setattr__(self, "widths", widths)
        if len(widths) < 2:
            raise ValueError("architecture needs at least input and output widths")
        if any(w < 1 for w in widths):
            raise ValueError("all widths must be positive")
        if widths[-1] != 1:
            raise ValueError("output width must be 1")

    @property
    def input_dim(self) -> int:
        return self.widths[0]

    @property
    def depth(self) -> int:
        return len(self.widths) - 1

    @property
    def hidden_neurons(self) -> int:
        return sum(self.widths[1:-1])


def param_count(arch: Architecture) -> int:
    """Total number of scalar parameters: sum of n_i * (n_{i-1} + 1)."""
    w = arch.widths
    return sum(w[i] * (w[i - 1] + 1) for i in range(1, len(w)))


@dataclass
class AffineLayer:
    """One affine map x -> W x + b."""

    W: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.W.ndim != 2 or self.b.ndim != 1:
            raise DimensionMismatchError("W must be 2-D and b 1-D")
        if self.W.shape[0] != self.b.shape[0]:
            raise DimensionMismatchError(
                f"W has {self.W.shape[0]} rows but b has {self.b.shape[0]} entries"
            )


@dataclass
class ReluNetwork:
    """Composition of affine layers with coordinatewise ReLU between them.

    ``final_activation=False`` gives the usual real-valued convention (no
    clipping after the last layer); ``True`` applies ReLU to the output too.
    """

    arch: Architecture
    layers: list[AffineLayer] = field(repr=False)
    final_activation: bool = False

    def __post_init__(self):
        w = self.arch.widths
        if len(self.layers) != self.arch.depth:
            raise DimensionMismatchError(
                f"expected {self.arch.depth} layers, got {len(self.layers)}"
            )
        for i, layer in enumerate(self.layers):
            if layer.W.shape != (w[i + 1], w[i]):
                raise DimensionMismatchError(
                    f"layer {i}: W shape {layer.W.shape} != ({w[i + 1]}, {w[i]})"
                )

    @property
    def input_dim(self) -> int:
        return self.arch.input_dim

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            x = x.reshape(1)
        if x.shape[-1] != self.input_dim:
            raise DimensionMismatchError(
                f"input dim {x.shape[-1]} != network input dim {self.input_dim}"
            )
        return x

    def eval(self, x) -> float:
        """Scalar network value at a single point."""
        x = self._check_input(x)
        if x.ndim != 1:
            raise DimensionMismatchError("eval takes a single vector; use eval_batch")
        return float(self.eval_batch(x[None, :])[0])

    def eval_batch(self, X) -> np.ndarray:
        """Network values at each row of X, shape (N, n0) -> (N,)."""
        X = self._check_input(np.atleast_2d(np.asarray(X, dtype=float)))
        h = X
        for layer in self.layers[:-1]:
            h = np.maximum(h @ layer.W.T + layer.b, 0.0)
        last = self.layers[-1]
        out = h @ last.W.T + last.b
        if self.final_activation:
            out = np.maximum(out, 0.0)
        return out[:, 0]

    def preactivations(self, x) -> list[np.ndarray]:
        """Pre-activation vectors z^1(x), ..., z^m(x) for a single point."""
        x = self._check_input(x)
        zs = []
        h = x
        for layer in self.layers:
            z = layer.W @ h + layer.b
            zs.append(z)
            h = np.maximum(z, 0.0)
        return zs

    def activation_pattern(self, x) -> str:
        """One bit per hidden neuron: 1 iff its pre-activation is > 0."""
        zs = self.preactivations(x)
        bits = []
        for z in zs[:-1]:
            bits.extend("1" if v > 0.0 else "0" for v in z)
        return "".join(bits)

    def activation_patterns_batch(self, X) -> list[str]:
        """Activation patterns for each row of X."""
        X = self._check_input(np.atleast_2d(np.asarray(X, dtype=float)))
        h = X
        cols = []
        for layer in self.layers[:-1]:
            z = h @ layer.W.T + layer.b
            cols.append(z > 0.0)
            h = np.maximum(z, 0.0)
        if not cols:
            return [""] * X.shape[0]
        bits = np.concatenate(cols, axis=1).astype(np.uint8)
        return ["".join("1" if v else "0" for v in row) for row in bits]

    def analytic_gradient(self, x, tol: float = BOUNDARY_TOL) -> np.ndarray:
        """Gradient of the local linear piece at x.

        Raises OnBoundaryError when any relevant pre-activation is within
        ``tol`` of zero, i.e. x sits on a bent hyperplane.
        """
        zs = self.preactivations(x)
        hidden = zs[:-1] if not self.final_activation else zs
        for z in hidden:
            if np.any(np.abs(z) <= tol):
                raise OnBoundaryError("point lies on a bent hyperplane")
        J = self.layers[0].W
        for layer, z in zip(self.layers[1:], zs[:-1]):
            J = layer.W @ (J * (z > 0.0)[:, None])
        grad = J[0]
        if self.final_activation and zs[-1][0] <= 0.0:
            grad = np.zeros_like(grad)
        return grad

    def preactivation(self, x, layer: int, unit: int) -> float:
        """Pre-activation value of one neuron; layer and unit are 0-based."""
        zs = self.preactivations(x)
        return float(zs[layer][unit])

    def preactivation_gradient(self, x, layer: int, unit: int,
                               tol: float = BOUNDARY_TOL) -> np.ndarray:
        """Gradient of one neuron's pre-activation at a smooth point.

        Only pre-activations of layers *before* the requested one matter;
        the neuron's own zero set does not kink its pre-activation.
        """
        zs = self.preactivations(x)
        for z in zs[:layer]:
            if np.any(np.abs(z) <= tol):
                raise OnBoundaryError("point lies on an earlier bent hyperplane")
        J = self.layers[0].W
        for lay, z in zip(self.layers[1:layer + 1], zs[:layer]):
            J = lay.W @ (J * (z > 0.0)[:, None])
        return J[unit]


def random_network(arch: Architecture, seed: int, scale: float = 1.0,
                   final_activation: bool = False) -> ReluNetwork:
    """Seeded network with weights and biases i.i.d. uniform on [-scale, scale]."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    rng = np.random.default_rng(seed)
    w = arch.widths
    layers = []
    for i in range(1, len(w)):
        W = rng.uniform(-scale, scale, size=(w[i], w[i - 1]))
        b = rng.uniform(-scale, scale, size=w[i])
        layers.append(AffineLayer(W, b))
    return ReluNetwork(arch, layers, final_activation)


def save(net: ReluNetwork) -> str:
    """Serialize a network to a JSON document (full decimal precision)."""
    doc = {
        "arch": list(net.arch.widths),
        "final_activation": net.final_activation,
        "layers": [{"W": layer.W.tolist(), "b": layer.b.tolist()}
                   for layer in net.layers],
    }
    return json.dumps(doc, indent=1)


def load(text: str) -> ReluNetwork:
    """Parse a network document produced by :func:`save`."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    try:
        arch = Architecture(tuple(doc["arch"]))
        final = bool(doc["final_activation"])
        layers = [AffineLayer(np.asarray(d["W"], dtype=float),
                              np.asarray(d["b"], dtype=float))
                  for d in doc["layers"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed network document: {exc}") from exc
    return ReluNetwork(arch, layers, final)
