"""Anchor-aware positive/negative sample weights from similarity scores.

A similarity s between an anchor and a candidate is mapped through a
monotone increasing transform T(s) = exp(s/tau_p) - 1 for positives and a
monotone decreasing transform D(s) = exp(-s/tau_n) for negatives, then
normalized by the mean over the candidate set.  The resulting weights have
mean exactly 1, act as soft positive/negative indicators in the enhanced
losses, and depend only on the original-graph similarity, never on
augmented views.

The "- 1" in T matters: without it, weights flatten to uniform as tau_p
grows and every candidate would count as a positive, collapsing training.
With it, large tau_p yields weights proportional to similarity while small
tau_p concentrates all mass on the most similar candidate.  For D the
limits run the other way: tau_n -> infinity flattens to uniform (recovering
plain negative sampling) and tau_n -> 0 concentrates on the least similar
candidate.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

EXP_CLAMP = 700.0  # exp(709.8) overflows float64


@dataclass(frozen=True)
class TemperaturePair:
    """Positive and negative transform temperatures, both > 0."""

    tau_p: float = 0.5
    tau_n: float = 0.5

    def __post_init__(self):
        for name, value in (("tau_p", self.tau_p), ("tau_n", self.tau_n)):
            if not (np.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be positive and finite, got {value}")


@dataclass(frozen=True)
class CandidateSets:
    """Index lists of positive candidates (V_M) and negative candidates (V_N)."""

    vm: np.ndarray
    vn: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vm", np.asarray(self.vm, dtype=np.int64))
        object.__setattr__(self, "vn", np.asarray(self.vn, dtype=np.int64))
        if self.vm.size < 1 or self.vn.size < 1:
            raise ValueError("candidate sets must be nonempty")


@dataclass(frozen=True)
class WeightSet:
    """Per-anchor positive weights over V_M and negative weights over V_N.

    Both vectors are nonnegative with mean exactly 1 by construction.
    """

    anchor: int
    candidates: CandidateSets
    w_pos: np.ndarray = field(repr=False)
    w_neg: np.ndarray = field(repr=False)


def transform_pos(s, tau_p: float):
    """T(s) = exp(s / tau_p) - 1, clamping the exponent at 700.

    Expects nonnegative similarities (clamped upstream); warns when the
    clamp fires because relative order among clamped entries is lost.
    """
    if tau_p <= 0:
        raise ConfigError(f"tau_p must be positive, got {tau_p}")
    z = np.asarray(s, dtype=np.float64) / tau_p
    if np.any(z > EXP_CLAMP):
        warnings.warn(
            f"positive transform exponent clamped at {EXP_CLAMP:g}; "
            "weights among clamped candidates tie",
            RuntimeWarning,
            stacklevel=2,
        )
        z = np.minimum(z, EXP_CLAMP)
    out = np.expm1(z)
    return float(out) if out.ndim == 0 else out


def transform_neg(s, tau_n: float):
    """D(s) = exp(-s / tau_n); underflow flushes to 0, which is acceptable."""
    if tau_n <= 0:
        raise ConfigError(f"tau_n must be positive, got {tau_n}")
    out = np.exp(-np.asarray(s, dtype=np.float64) / tau_n)
    return float(out) if out.ndim == 0 else out


def _mean_normalize(values: np.ndarray, what: str) -> np.ndarray:
    mean = values.mean()
    if mean == 0.0:
        warnings.warn(
            f"all {what} transformed similarities are zero; falling back to uniform weights",
            RuntimeWarning,
            stacklevel=3,
        )
        return np.ones_like(values)
    return values / mean


def positive_weights(anchor: int, sims, vm, tau_p: float) -> np.ndarray:
    """w+_j = T(sim(anchor, v_j)) / mean_k T(sim(anchor, v_k)).

    Mean of the returned vector is exactly 1.  When every transformed
    similarity is zero the ratio is undefined; uniform weights are the
    least-informative consistent fallback, reported with a warning.
    """
    vm = np.asarray(vm, dtype=np.int64)
    if vm.size == 0:
        raise ValueError("positive candidate set is empty")
    values = np.asarray(sims.values if hasattr(sims, "values") else sims)
    t = transform_pos(values[anchor, vm], tau_p)
    return _mean_normalize(np.atleast_1d(t), "positive")


def negative_weights(anchor: int, sims, vn, tau_n: float) -> np.ndarray:
    """w-_j = D(sim(anchor, v_j)) / mean_k D(sim(anchor, v_k)); mean exactly 1."""
    vn = np.asarray(vn, dtype=np.int64)
    if vn.size == 0:
        raise ValueError("negative candidate set is empty")
    values = np.asarray(sims.values if hasattr(sims, "values") else sims)
    d = transform_neg(values[anchor, vn], tau_n)
    return _mean_normalize(np.atleast_1d(d), "negative")


def weight_set(anchor: int, sims, candidates: CandidateSets, temps: TemperaturePair) -> WeightSet:
    """Bundle positive and negative weights for one anchor."""
    return WeightSet(
        anchor=anchor,
        candidates=candidates,
        w_pos=positive_weights(anchor, sims, candidates.vm, temps.tau_p),
        w_neg=negative_weights(anchor, sims, candidates.vn, temps.tau_n),
    )


class WeightTable:
    """Precomputed transformed similarities for every ordered node pair.

    Stores T(sim) and D(sim) as dense n x n matrices once per run; weight
    vectors for any candidate set are then a slice plus a mean division.
    Slicing this table is bit-for-bit identical to calling
    :func:`positive_weights` / :func:`negative_weights` directly, so batch
    and full-graph code paths agree exactly on overlapping entries.
    """

    def __init__(self, sims, temps: TemperaturePair):
        values = np.asarray(sims.values if hasattr(sims, "values") else sims, dtype=np.float64)
        self.n = values.shape[0]
        self.temps = temps
        self.t_pos = transform_pos(values, temps.tau_p)
        self.d_neg = transform_neg(values, temps.tau_n)

    def pos_weights(self, anchor: int, vm) -> np.ndarray:
        vm = np.asarray(vm, dtype=np.int64)
        return _mean_normalize(self.t_pos[anchor, vm].copy(), "positive")

    def neg_weights(self, anchor: int, vn) -> np.ndarray:
        vn = np.asarray(vn, dtype=np.int64)
        return _mean_normalize(self.d_neg[anchor, vn].copy(), "negative")

    def pos_weight_matrix(self, anchors, vm) -> np.ndarray:
        """Rows of mean-1 positive weights, one per anchor, over a shared V_M."""
        anchors = np.asarray(anchors, dtype=np.int64)
        vm = np.asarray(vm, dtype=np.int64)
        block = self.t_pos[np.ix_(anchors, vm)]
        return _mean_normalize_rows(block, "positive")

    def neg_weight_matrix(self, anchors, vn) -> np.ndarray:
        anchors = np.asarray(anchors, dtype=np.int64)
        vn = np.asarray(vn, dtype=np.int64)
        block = self.d_neg[np.ix_(anchors, vn)]
        return _mean_normalize_rows(block, "negative")

    def batch_weight_matrices(self, batch) -> tuple[np.ndarray, np.ndarray]:
        """Per-anchor weights over in-batch candidates, excluding self.

        Returns (w_pos, w_neg), each b x b with zero diagonal; row i is
        normalized to mean 1 over the b-1 off-diagonal candidates, matching
        the candidate set of the neighborhood-contrastive losses.
        """
        batch = np.asarray(batch, dtype=np.int64)
        b = batch.size
        off = ~np.eye(b, dtype=bool)
        w_pos = np.zeros((b, b))
        w_neg = np.zeros((b, b))
        for mat, out, what in ((self.t_pos, w_pos, "positive"), (self.d_neg, w_neg, "negative")):
            block = mat[np.ix_(batch, batch)]
            vals = np.where(off, block, 0.0)
            means = vals.sum(axis=1) / (b - 1)
            zero_rows = means == 0.0
            if zero_rows.any():
                warnings.warn(
                    f"{int(zero_rows.sum())} anchors with all-zero {what} transformed "
                    "similarities; falling back to uniform weights",
                    RuntimeWarning,
                    stacklevel=2,
                )
                vals[zero_rows] = 1.0
                means[zero_rows] = 1.0
            out[:] = np.where(off, vals / means[:, None], 0.0)
        return w_pos, w_neg


def _mean_normalize_rows(block: np.ndarray, what: str) -> np.ndarray:
    means = block.mean(axis=1)
    zero = means == 0.0
    if zero.any():
        warnings.warn(
            f"{int(zero.sum())} anchors with all-zero {what} transformed similarities; "
            "falling back to uniform weights",
            RuntimeWarning,
            stacklevel=3,
        )
        block = block.copy()
        block[zero] = 1.0
        means = block.mean(axis=1)
    return block / means[:, None]
