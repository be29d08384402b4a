"""Embedding models with explicit reverse-mode gradients.

Only the map from features to pairwise similarities needs derivatives (the
clustering layer's gradient is already a difference of edge-frequency
matrices), so backprop here is a short hand-written chain: similarity
gradient -> embedding gradient -> parameter gradient.  Two architectures:

* LinearModel: plain matrix map X @ W, no bias.  Pairwise squared
  distances are translation invariant, so a bias term would receive a
  provably zero gradient through every loss in this package; it is omitted
  rather than carried as dead weight.
* MLPModel: affine layers with ReLU on hidden layers and a linear output
  layer.

Both expose the same small interface: arch (JSON-friendly description),
get_params/set_params (flat vector), embed, embed_with_cache, and
weight_grad(cache, d_embeddings) -> flat gradient.
"""

from __future__ import annotations

import numpy as np

from .core import SimilarityMatrix


class LinearModel:
    """Linear embedding X -> X @ W with W of shape (d_in, d_out)."""

    def __init__(self, weights: np.ndarray):
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim != 2:
            raise ValueError(f"weights must be 2-d, got shape {w.shape}")
        self.weights = w.copy()

    @property
    def arch(self):
        return ["linear", self.weights.shape[0], self.weights.shape[1]]

    @property
    def d_in(self) -> int:
        return self.weights.shape[0]

    @property
    def num_params(self) -> int:
        return self.weights.size

    def get_params(self) -> np.ndarray:
        return self.weights.ravel().copy()

    def set_params(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        if flat.size != self.weights.size:
            raise ValueError(
                f"expected {self.weights.size} parameters, got {flat.size}"
            )
        self.weights = flat.reshape(self.weights.shape).copy()

    def embed(self, X: np.ndarray) -> np.ndarray:
        X = _check_batch(X, self.d_in)
        return X @ self.weights

    def embed_with_cache(self, X: np.ndarray):
        X = _check_batch(X, self.d_in)
        return X @ self.weights, X

    def weight_grad(self, cache, d_embeddings: np.ndarray) -> np.ndarray:
        X = cache
        return (X.T @ d_embeddings).ravel()


class MLPModel:
    """Feed-forward network: affine + ReLU hidden layers, affine output.

    sizes lists every layer width, input first; weights and biases are kept
    as per-layer arrays and flattened in layer order (W0, b0, W1, b1, ...)
    for the optimizer.
    """

    def __init__(self, weights: list, biases: list):
        if len(weights) != len(biases) or not weights:
            raise ValueError("need matching, nonempty weight and bias lists")
        self.weights = [np.asarray(w, dtype=np.float64).copy() for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64).copy() for b in biases]
        for idx, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.ndim != 1 or b.size != w.shape[1]:
                raise ValueError(f"layer {idx}: weight {w.shape} vs bias {b.shape}")
            if idx and w.shape[0] != self.weights[idx - 1].shape[1]:
                raise ValueError(f"layer {idx} input dim mismatch")

    @property
    def sizes(self) -> list:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def arch(self):
        return ["mlp", self.sizes, "relu"]

    @property
    def d_in(self) -> int:
        return self.weights[0].shape[0]

    @property
    def num_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def get_params(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b)
        return np.concatenate(parts)

    def set_params(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        if flat.size != self.num_params:
            raise ValueError(f"expected {self.num_params} parameters, got {flat.size}")
        pos = 0
        for idx, (w, b) in enumerate(zip(self.weights, self.biases)):
            self.weights[idx] = flat[pos : pos + w.size].reshape(w.shape).copy()
            pos += w.size
            self.biases[idx] = flat[pos : pos + b.size].copy()
            pos += b.size

    def embed(self, X: np.ndarray) -> np.ndarray:
        return self.embed_with_cache(X)[0]

    def embed_with_cache(self, X: np.ndarray):
        X = _check_batch(X, self.d_in)
        layer_inputs = []
        fired = []
        h = X
        last = len(self.weights) - 1
        for idx, (w, b) in enumerate(zip(self.weights, self.biases)):
            layer_inputs.append(h)
            h = h @ w + b
            if idx != last:
                mask = h > 0.0
                fired.append(mask)
                h = h * mask
        return h, (layer_inputs, fired)

    def weight_grad(self, cache, d_embeddings: np.ndarray) -> np.ndarray:
        layer_inputs, fired = cache
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.biases)
        delta = d_embeddings
        last = len(self.weights) - 1
        for idx in range(last, -1, -1):
            if idx != last:
                delta = delta * fired[idx]
            grads_w[idx] = layer_inputs[idx].T @ delta
            grads_b[idx] = delta.sum(axis=0)
            if idx:
                delta = delta @ self.weights[idx].T
        parts = []
        for gw, gb in zip(grads_w, grads_b):
            parts.append(gw.ravel())
            parts.append(gb)
        return np.concatenate(parts)


def _check_batch(X: np.ndarray, d_in: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"batch must be 2-d, got shape {X.shape}")
    if X.shape[0] < 1:
        raise ValueError("batch must hold at least one row")
    if X.shape[1] != d_in:
        raise ValueError(f"model expects {d_in} features, batch has {X.shape[1]}")
    return X


def init_linear(d_in: int, d_out: int, rng: np.random.Generator) -> LinearModel:
    """Standard-normal entries."""
    return LinearModel(rng.standard_normal((d_in, d_out)))


def init_mlp(sizes: list, rng: np.random.Generator) -> MLPModel:
    """Uniform fan-in scaling: every layer's weights and biases are drawn
    from U(-1/sqrt(fan_in), 1/sqrt(fan_in))."""
    if len(sizes) < 2:
        raise ValueError("sizes must list input and output widths at least")
    weights, biases = [], []
    for d_in, d_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(d_in)
        weights.append(rng.uniform(-bound, bound, size=(d_in, d_out)))
        biases.append(rng.uniform(-bound, bound, size=d_out))
    return MLPModel(weights, biases)


def model_from_arch(arch, params=None):
    """Rebuild a model from its arch description (checkpoint loading)."""
    if not arch or arch[0] not in ("linear", "mlp"):
        raise ValueError(f"unknown architecture {arch!r}")
    if arch[0] == "linear":
        _, d_in, d_out = arch
        model = LinearModel(np.zeros((int(d_in), int(d_out))))
    else:
        sizes = [int(s) for s in arch[1]]
        model = MLPModel(
            [np.zeros((a, b)) for a, b in zip(sizes[:-1], sizes[1:])],
            [np.zeros(b) for b in sizes[1:]],
        )
    if params is not None:
        model.set_params(np.asarray(params, dtype=np.float64))
    return model


def pairwise_similarity(embeddings: np.ndarray) -> SimilarityMatrix:
    """Similarities as negated squared Euclidean distances.

    Built from explicit coordinate differences rather than the Gram-matrix
    identity: squaring differences is bitwise symmetric in (i, j), so the
    result passes the strict symmetry validation without any fixup.
    """
    v = np.asarray(embeddings, dtype=np.float64)
    if v.ndim != 2 or v.shape[0] < 1:
        raise ValueError(f"need a nonempty 2-d embedding batch, got shape {v.shape}")
    diff = v[:, None, :] - v[None, :, :]
    return SimilarityMatrix(-(diff * diff).sum(axis=2))


def similarity_grad_to_embedding_grad(
    grad_sigma: np.ndarray, embeddings: np.ndarray
) -> np.ndarray:
    """Chain rule through sigma_ij = -|v_i - v_j|^2.

    d sigma_ij / d v_i = -2 (v_i - v_j), and grad_sigma's mirrored entries
    each carry their pair's full derivative, so summing over one row of the
    matrix covers every pair a node participates in exactly once.
    """
    g = np.asarray(grad_sigma, dtype=np.float64)
    v = np.asarray(embeddings, dtype=np.float64)
    row = g.sum(axis=1)
    return -2.0 * (row[:, None] * v - g @ v)
