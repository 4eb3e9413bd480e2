"""Prediction models over sparse one-hot fields: LR, FM, and DeepFM.

All models score a sample as a logit that is squashed to a probability.
FM adds pairwise interactions of the active features' embedding rows,
computed with the O(M*d) sum-of-squares identity; DeepFM adds an MLP over
the concatenated rows, sharing the same embedding table. Backward passes
are exact analytic gradients (checked against finite differences in the
test suite).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from embedprune import kernels
from embedprune.embedding import EmbeddingTable, SparseTable, apply_mask
from embedprune.errors import ContractError, ShapeError

LOGIT_CLAMP = 35.0  # keeps log(p) and log(1-p) finite in double precision


def predict_proba(logit):
    """Sigmoid of the clamped logit; strictly inside (0, 1)."""
    z = np.clip(logit, -LOGIT_CLAMP, LOGIT_CLAMP)
    p = kernels.sigmoid(np.asarray(z, dtype=np.float64))
    return float(p) if np.ndim(logit) == 0 else p


def lookup(source, sample: np.ndarray) -> np.ndarray:
    """Embedding rows for one sample's active features.

    ``source`` may be an EmbeddingTable (rows of the reparameterized
    table), a ``(mask, V)`` pair (masked rows), a SparseTable, or a plain
    dense matrix.
    """
    sample = np.asarray(sample)
    if isinstance(source, EmbeddingTable):
        mat = source.reparameterized()
    elif isinstance(source, SparseTable):
        if sample.min() < 0 or sample.max() >= source.n_features:
            raise IndexError(f"feature index out of range [0, {source.n_features})")
        return np.stack([source.row(i) for i in sample])
    elif isinstance(source, tuple):
        mask, V = source
        mat = apply_mask(V, mask)
    else:
        mat = np.asarray(source)
    if sample.min() < 0 or sample.max() >= mat.shape[0]:
        raise IndexError(f"feature index out of range [0, {mat.shape[0]})")
    return mat[sample]


@dataclass
class LinearParams:
    """First-order weights; ``b`` is kept as a length-1 array for the optimizer."""

    w: np.ndarray
    b: np.ndarray

    @classmethod
    def zeros(cls, n_features: int) -> "LinearParams":
        return cls(w=np.zeros(n_features), b=np.zeros(1))


@dataclass
class FMCache:
    """Per-sample activations kept for the analytic backward pass."""

    params: object
    rows: np.ndarray
    svec: np.ndarray
    consumed: bool = False


def fm_logit(linear: LinearParams, rows: np.ndarray, sample: np.ndarray) -> float:
    pair, svec = kernels.fm_forward(rows[None, :, :])
    lin = float(linear.b[0] + linear.w[sample].sum())
    return lin + float(pair[0]), svec[0]


def fm_forward(params, sample: np.ndarray):
    """Logit of an FM for one sample plus the cache for backward.

    ``params`` needs ``.linear`` (LinearParams) and ``.table`` (the active
    embedding source accepted by :func:`lookup`).
    """
    rows = lookup(params.table, sample)
    logit, svec = fm_logit(params.linear, rows, np.asarray(sample))
    return logit, FMCache(params=params, rows=rows, svec=svec)


def fm_backward(cache: FMCache, dlogit: float):
    """Gradients for w, b and the upstream gradient into the embedding rows."""
    if cache.consumed:
        raise ContractError("fm_backward called twice on the same cache")
    cache.consumed = True
    M = cache.rows.shape[0]
    grad_w_active = np.full(M, dlogit)  # scatter to w at the sample's indices
    grad_b = float(dlogit)
    grad_rows = kernels.fm_backward(
        np.asarray([dlogit], dtype=np.float64), cache.rows[None], cache.svec[None]
    )[0]
    return grad_w_active, grad_b, grad_rows


@dataclass
class MLPParams:
    """Dense ReLU tower; the last layer is the scalar output head."""

    weights: list = field(default_factory=list)
    biases: list = field(default_factory=list)

    @classmethod
    def create(cls, in_dim: int, hidden: list[int], rng: np.random.Generator):
        sizes = [in_dim] + list(hidden) + [1]
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(weights=weights, biases=biases)

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[0]


def mlp_forward(params: MLPParams, x: np.ndarray):
    """Batch forward; ``x`` is (B, in_dim). Returns (logits (B,), cache)."""
    if x.ndim != 2 or x.shape[1] != params.in_dim:
        raise ShapeError(f"mlp input {x.shape} does not match width {params.in_dim}")
    acts = [x]
    h = x
    n = len(params.weights)
    for i, (W, b) in enumerate(zip(params.weights, params.biases)):
        z = h @ W + b
        h = np.maximum(z, 0.0) if i < n - 1 else z  # linear output head
        acts.append(h)
    return h[:, 0], acts


def mlp_backward(params: MLPParams, acts, dlogit: np.ndarray):
    """Gradients for all layers plus the gradient w.r.t. the input."""
    n = len(params.weights)
    grads_W = [None] * n
    grads_b = [None] * n
    delta = dlogit[:, None]
    for i in range(n - 1, -1, -1):
        h_in = acts[i]
        if i < n - 1:
            delta = delta * (acts[i + 1] > 0)  # ReLU gate of this layer's output
        grads_W[i] = h_in.T @ delta
        grads_b[i] = delta.sum(axis=0)
        delta = delta @ params.weights[i].T
    return grads_W, grads_b, delta


@dataclass
class Model:
    """A predictor plus (for FM/DeepFM) its embedding table."""

    kind: str  # "lr" | "fm" | "deepfm"
    n_fields: int
    linear: LinearParams
    table: EmbeddingTable | None = None
    mlp: MLPParams | None = None

    @classmethod
    def create(
        cls,
        kind: str,
        n_features: int,
        n_fields: int,
        dim: int,
        granularity,
        s_init: float,
        rng: np.random.Generator,
        mlp_hidden=(64, 64),
    ) -> "Model":
        linear = LinearParams.zeros(n_features)
        table = None
        mlp = None
        if kind in ("fm", "deepfm"):
            table = EmbeddingTable.create(n_features, dim, granularity, s_init, rng)
        if kind == "deepfm":
            mlp = MLPParams.create(n_fields * dim, list(mlp_hidden), rng)
        elif kind != "fm" and kind != "lr":
            raise ValueError(f"unknown model kind {kind!r}")
        return cls(kind=kind, n_fields=n_fields, linear=linear, table=table, mlp=mlp)

    def reinit_predictor(self, rng: np.random.Generator, mlp_hidden=(64, 64)) -> None:
        """Fresh predictor weights, leaving the embedding table untouched."""
        self.linear = LinearParams.zeros(len(self.linear.w))
        if self.kind == "deepfm":
            dim = self.table.dim
            self.mlp = MLPParams.create(self.n_fields * dim, list(mlp_hidden), rng)
