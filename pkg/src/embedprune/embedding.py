"""Embedding table with learnable soft-threshold pruning.

The table owns a dense weight matrix ``V`` (one row per feature) and
threshold parameters ``s`` whose shape depends on the chosen granularity.
The effective (reparameterized) table is

    vhat = sign(V) * max(|V| - g(s), 0)

with ``g`` the logistic function, so thresholds stay positive and start
near zero for strongly negative ``s``. Entries whose magnitude falls below
the threshold are exactly zero; a feature whose whole row is zero has
effective embedding size zero and is dropped from the model.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from embedprune.errors import FormatError, InputError, ShapeError


class Granularity(enum.Enum):
    """Sharing pattern of the threshold parameters.

    GLOBAL shares one scalar threshold across the whole table,
    DIMENSION learns one per embedding dimension, FEATURE one per
    feature row, and FEATURE_DIMENSION one per table entry.
    """

    GLOBAL = "global"
    DIMENSION = "dimension"
    FEATURE = "feature"
    FEATURE_DIMENSION = "feature_dimension"

    def s_shape(self, n_features: int, dim: int) -> tuple[int, ...]:
        return {
            Granularity.GLOBAL: (1,),
            Granularity.DIMENSION: (dim,),
            Granularity.FEATURE: (n_features,),
            Granularity.FEATURE_DIMENSION: (n_features, dim),
        }[self]

    @property
    def tag(self) -> int:
        """Stable one-byte identifier used in checkpoint files."""
        return _GRANULARITY_TAGS[self]


_GRANULARITY_TAGS = {
    Granularity.GLOBAL: 0,
    Granularity.DIMENSION: 1,
    Granularity.FEATURE: 2,
    Granularity.FEATURE_DIMENSION: 3,
}
GRANULARITY_FROM_TAG = {v: k for k, v in _GRANULARITY_TAGS.items()}


def g_sigmoid(s):
    """Threshold function g(s) = 1 / (1 + exp(-s)), stable for large |s|."""
    arr = np.asarray(s, dtype=np.float64)
    out = np.where(arr >= 0, 1.0 / (1.0 + np.exp(-np.abs(arr))), 0.0)
    ex = np.exp(np.minimum(arr, 0.0))
    out = np.where(arr < 0, ex / (1.0 + ex), out)
    return float(out) if np.isscalar(s) else out


def g_sigmoid_prime(s):
    """Derivative g'(s) = g(s) * (1 - g(s))."""
    g = g_sigmoid(s)
    return g * (1.0 - g)


@dataclass
class GPropertyCheck:
    name: str
    passed: bool
    detail: str


@dataclass
class GPropertyReport:
    """Numeric verification of the conditions a threshold function must meet."""

    g_kind: str
    s_init: float
    checks: list[GPropertyCheck] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[GPropertyCheck]:
        return [c for c in self.checks if not c.passed]


def check_g_properties(g_kind: str, s_init: float, probe_points) -> GPropertyReport:
    """Probe the threshold function numerically.

    Verifies, at the probe points: g > 0, g strictly increasing,
    0 < g' <= G with the explicit bound G = 1/4 for the sigmoid, and
    g'(s_init) < 1 so thresholds move slowly at the start of pruning.
    Failures are reported, not raised.
    """
    if g_kind != "sigmoid":
        raise InputError(f"unknown threshold function {g_kind!r}")
    probes = np.sort(np.asarray(probe_points, dtype=np.float64))
    if probes.size == 0 or not np.all(np.isfinite(probes)):
        raise InputError("probe points must be finite and non-empty")
    if probes[0] >= 0 or probes[-1] <= 0:
        raise InputError("probe points must span negative through positive values")

    report = GPropertyReport(g_kind=g_kind, s_init=float(s_init))
    g = g_sigmoid(probes)
    gp = g_sigmoid_prime(probes)
    bound = 0.25

    report.checks.append(
        GPropertyCheck("positive", bool(np.all(g > 0)), f"min g = {g.min():.3e}")
    )
    report.checks.append(
        GPropertyCheck(
            "monotone_increasing",
            bool(np.all(np.diff(g) > 0)),
            f"min increment = {np.diff(g).min():.3e}",
        )
    )
    report.checks.append(
        GPropertyCheck(
            "derivative_bounded",
            bool(np.all(gp > 0) and np.all(gp <= bound)),
            f"g' in [{gp.min():.3e}, {gp.max():.3e}], bound {bound}",
        )
    )
    gp_init = g_sigmoid_prime(float(s_init))
    report.checks.append(
        GPropertyCheck(
            "slow_start", bool(gp_init < 1.0), f"g'(s_init) = {gp_init:.3e}"
        )
    )
    return report


def init_embedding(n_features: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform init in [-1/sqrt(d), 1/sqrt(d)], keeping |V| above early thresholds."""
    bound = 1.0 / np.sqrt(dim)
    return rng.uniform(-bound, bound, size=(n_features, dim))


@dataclass
class EmbeddingTable:
    """Dense weights plus learnable thresholds at one granularity."""

    V: np.ndarray
    s: np.ndarray
    granularity: Granularity
    s_init: float
    g_kind: str = "sigmoid"

    @classmethod
    def create(
        cls,
        n_features: int,
        dim: int,
        granularity: Granularity,
        s_init: float,
        rng: np.random.Generator,
    ) -> "EmbeddingTable":
        V = init_embedding(n_features, dim, rng)
        s = np.full(granularity.s_shape(n_features, dim), float(s_init))
        return cls(V=V, s=s, granularity=granularity, s_init=float(s_init))

    @property
    def n_features(self) -> int:
        return self.V.shape[0]

    @property
    def dim(self) -> int:
        return self.V.shape[1]

    def threshold_matrix(self) -> np.ndarray:
        """g(s) broadcast against V's shape (without materializing when scalar)."""
        return broadcast_thresholds(g_sigmoid(self.s), self.granularity, self.V.shape)

    def reparameterized(self) -> np.ndarray:
        """The effective table vhat = S(V, s)."""
        return soft_threshold(self.V, self.s, self.granularity)

    def nonzero_count(self) -> int:
        return int(np.count_nonzero(self.reparameterized()))


def broadcast_thresholds(g, granularity: Granularity, shape) -> np.ndarray:
    n, d = shape
    g = np.asarray(g, dtype=np.float64)
    if granularity is Granularity.GLOBAL:
        if g.size != 1:
            raise ShapeError(f"global thresholds need 1 value, got {g.size}")
        return g.reshape(())
    if granularity is Granularity.DIMENSION:
        if g.shape != (d,):
            raise ShapeError(f"dimension thresholds need shape ({d},), got {g.shape}")
        return g[None, :]
    if granularity is Granularity.FEATURE:
        if g.shape != (n,):
            raise ShapeError(f"feature thresholds need shape ({n},), got {g.shape}")
        return g[:, None]
    if g.shape != (n, d):
        raise ShapeError(f"entry thresholds need shape ({n}, {d}), got {g.shape}")
    return g


def soft_threshold(V: np.ndarray, s, granularity: Granularity) -> np.ndarray:
    """Reparameterize the whole table: sign(V) * relu(|V| - g(s))."""
    G = broadcast_thresholds(g_sigmoid(np.asarray(s)), granularity, V.shape)
    return np.sign(V) * np.maximum(np.abs(V) - G, 0.0)


def backward_through_threshold(
    upstream: np.ndarray, V: np.ndarray, s, granularity: Granularity
):
    """Sub-gradients through the soft threshold.

    The weight gradient is the upstream gradient gated by the survivor
    indicator; entries at the kink (|V| exactly equal to g(s)) count as
    pruned. The threshold gradient sums, over every entry mapped to one
    threshold parameter, ``upstream * (-sign(V)) * g'(s)`` at surviving
    entries.
    """
    if upstream.shape != V.shape:
        raise ShapeError(f"upstream {upstream.shape} does not match V {V.shape}")
    s = np.asarray(s, dtype=np.float64)
    vhat = soft_threshold(V, s, granularity)
    survivor = vhat != 0
    grad_V = np.where(survivor, upstream, 0.0)

    gp = broadcast_thresholds(g_sigmoid_prime(s), granularity, V.shape)
    contrib = np.where(survivor, -np.sign(V) * upstream, 0.0) * gp
    if granularity is Granularity.GLOBAL:
        grad_s = np.array([contrib.sum()])
    elif granularity is Granularity.DIMENSION:
        grad_s = contrib.sum(axis=0)
    elif granularity is Granularity.FEATURE:
        grad_s = contrib.sum(axis=1)
    else:
        grad_s = contrib
    return grad_V, grad_s.reshape(s.shape)


@dataclass
class PruneMask:
    """Binary survivor mask plus the frozen initial weights for retraining."""

    m: np.ndarray
    V0: np.ndarray
    nonzero_count: int

    @property
    def shape(self):
        return self.m.shape


def extract_mask(vhat: np.ndarray, V0: np.ndarray) -> PruneMask:
    """Mask of surviving entries of a reparameterized table."""
    if vhat.shape != V0.shape:
        raise ShapeError(f"vhat {vhat.shape} does not match V0 {V0.shape}")
    m = (vhat != 0).astype(np.uint8)
    return PruneMask(m=m, V0=V0.copy(), nonzero_count=int(m.sum()))


def apply_mask(V: np.ndarray, m: np.ndarray) -> np.ndarray:
    """m ⊙ V with exact +0.0 at masked positions."""
    return np.where(m != 0, V, 0.0)


def effective_dims(mask: PruneMask) -> np.ndarray:
    """Per-feature count of surviving entries (the learned embedding sizes)."""
    return mask.m.sum(axis=1, dtype=np.int64)


def sparsity_by_group(mask: PruneMask, groups) -> list[tuple[float, float]]:
    """Mean and population variance of per-feature sparsity for each group.

    Per-feature sparsity is the surviving-entry count divided by the
    embedding dimension. ``groups`` must partition the feature indices.
    """
    n, d = mask.shape
    seen = np.zeros(n, dtype=bool)
    for g in groups:
        g = np.asarray(g, dtype=np.int64)
        if g.size and (g.min() < 0 or g.max() >= n):
            raise InputError("group index out of range")
        if np.any(seen[g]):
            raise InputError("groups overlap")
        seen[g] = True
    if not np.all(seen):
        raise InputError("groups do not cover all features")

    per_feature = mask.m.sum(axis=1) / d
    out = []
    for g in groups:
        vals = per_feature[np.asarray(g, dtype=np.int64)]
        out.append((float(vals.mean()), float(vals.var())))
    return out


@dataclass
class SparseTable:
    """CSR storage of a masked embedding table."""

    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray
    dim: int

    @property
    def n_features(self) -> int:
        return len(self.row_ptr) - 1

    @property
    def nnz(self) -> int:
        return len(self.values)

    def validate(self) -> None:
        if np.any(np.diff(self.row_ptr) < 0):
            raise FormatError("row_ptr must be non-decreasing")
        if self.row_ptr[0] != 0 or self.row_ptr[-1] != len(self.values):
            raise FormatError("row_ptr endpoints do not match value count")
        if len(self.col_idx) != len(self.values):
            raise FormatError("col_idx and values length mismatch")
        for i in range(self.n_features):
            cols = self.col_idx[self.row_ptr[i] : self.row_ptr[i + 1]]
            if cols.size and (np.any(np.diff(cols) <= 0) or cols[-1] >= self.dim):
                raise FormatError(f"row {i} columns not strictly increasing below d")

    def row(self, i: int) -> np.ndarray:
        """Densified row i."""
        out = np.zeros(self.dim)
        lo, hi = self.row_ptr[i], self.row_ptr[i + 1]
        out[self.col_idx[lo:hi]] = self.values[lo:hi]
        return out


def to_sparse(V: np.ndarray, mask: PruneMask) -> SparseTable:
    """CSR of m ⊙ V, keeping every masked-in position (even exact zeros)."""
    if mask.m.shape != V.shape:
        raise ShapeError(f"mask {mask.m.shape} does not match V {V.shape}")
    n, d = V.shape
    keep = mask.m != 0
    counts = keep.sum(axis=1)
    row_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=row_ptr[1:])
    rows, cols = np.nonzero(keep)
    return SparseTable(
        row_ptr=row_ptr,
        col_idx=cols.astype(np.int64),
        values=V[rows, cols].astype(np.float64),
        dim=d,
    )


def from_sparse(table: SparseTable) -> np.ndarray:
    """Dense matrix equal to m ⊙ V bit-for-bit (masked positions are +0.0)."""
    table.validate()
    n, d = table.n_features, table.dim
    out = np.zeros((n, d))
    rows = np.repeat(np.arange(n), np.diff(table.row_ptr))
    out[rows, table.col_idx] = table.values
    return out
