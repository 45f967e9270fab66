"""Contrastive objectives with exact analytic gradients.

Every loss here returns both its scalar value and the gradient with respect
to each embedding row involved, so the training loop can chain them through
the hand-written encoder backward pass.  All softmax-style ratios are
evaluated in log space with max-subtraction restricted to the support of
the weights, so weighted sums that are mathematically positive never
underflow to an artificial zero.

Conventions shared by all losses:

* embeddings are rows; similarity between rows is a plain dot product
  (cosine when rows are unit-normalized) divided by the temperature;
* anchors whose positive numerator is exactly zero are skipped, not
  errors; per-anchor functions return ``None``, batch functions count
  skips and average over the rest;
* candidate order never matters.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class ObjectiveConfig:
    """Loss hyperparameters.

    tau : contrastive temperature (> 0).
    l_scale, q_scale : scalars multiplying the positive / negative sample
        means in the sampled objective; ``None`` resolves to the number of
        negative / positive samples respectively, which recovers the
        unscaled double-sum form.
    nc_r : hop count for the neighborhood-contrastive positives (>= 1).
    lambda_nc : weight of the contrastive term in the combined
        semi-supervised loss (>= 0).
    """

    tau: float = 0.5
    l_scale: float | None = None
    q_scale: float | None = None
    nc_r: int = 2
    lambda_nc: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise ConfigError(f"tau must be positive and finite, got {self.tau}")
        if self.nc_r < 1:
            raise ConfigError(f"nc_r must be >= 1, got {self.nc_r}")
        if self.lambda_nc < 0:
            raise ConfigError(f"lambda_nc must be >= 0, got {self.lambda_nc}")


@dataclass
class LossResult:
    """Scalar loss plus gradients keyed by the role of each input."""

    value: float
    grads: dict[str, np.ndarray] = field(default_factory=dict)
    skipped: int = 0


def _weighted_lse(logits: np.ndarray, weights: np.ndarray) -> tuple[float, np.ndarray]:
    """log(sum_i w_i exp(x_i)) and the normalized contributions.

    Max-subtraction uses only entries with positive weight, so a lone
    far-negative logit still produces its true (large, finite) log instead
    of underflowing.  Returns (-inf, zeros) when the sum is exactly zero.
    """
    support = weights > 0
    if not support.any():
        return -np.inf, np.zeros_like(weights)
    m = logits[support].max()
    scaled = np.zeros_like(weights)
    scaled[support] = weights[support] * np.exp(logits[support] - m)
    total = scaled.sum()
    if total == 0.0:
        return -np.inf, np.zeros_like(weights)
    return float(m + np.log(total)), scaled / total


def infonce(anchor_emb, pos_emb, neg_embs, tau: float) -> LossResult:
    """Single-positive contrastive loss.

    -log( e^{a.p/tau} / (e^{a.p/tau} + sum_s e^{a.s/tau}) ).  With no
    negatives the ratio is 1 and the loss 0; that is a valid value, not an
    error.  Gradients are returned for the anchor, the positive, and every
    negative row.
    """
    a = np.asarray(anchor_emb, dtype=np.float64)
    p = np.asarray(pos_emb, dtype=np.float64)
    negs = np.asarray(neg_embs, dtype=np.float64).reshape(-1, a.shape[0])
    pos_logit = float(a @ p) / tau
    den_logits = np.concatenate([[pos_logit], negs @ a / tau])
    den_lse, den_contrib = _weighted_lse(den_logits, np.ones_like(den_logits))
    value = -pos_logit + den_lse

    d_anchor = (-p + den_contrib[0] * p + den_contrib[1:] @ negs) / tau
    d_pos = (den_contrib[0] - 1.0) * a / tau
    d_negs = den_contrib[1:, None] * a[None, :] / tau
    return LossResult(value, {"anchor": d_anchor, "positive": d_pos, "negatives": d_negs})


def ideal_loss(embeddings, labels, anchor: int, counterpart_emb, tau: float) -> LossResult | None:
    """Label-oracle objective: all same-label rows as positives, only
    different-label rows as negatives.

    The numerator sums e^{a.e_j/tau} over same-label j, excluding the
    anchor itself (its self-similarity would make the objective trivially
    optimizable); the denominator is the counterpart term plus the sum over
    different-label rows.  Returns ``None`` when the anchor is the only
    member of its class (empty numerator): callers count such skips.

    Gradients come back as a full (n, d) array aligned with ``embeddings``
    (the anchor's row holds the gradient of its anchor role) plus a
    "counterpart" entry.
    """
    e = np.asarray(embeddings, dtype=np.float64)
    y = np.asarray(labels)
    a = e[anchor]
    c = np.asarray(counterpart_emb, dtype=np.float64)
    n = e.shape[0]

    same = np.flatnonzero((y == y[anchor]) & (np.arange(n) != anchor))
    diff = np.flatnonzero(y != y[anchor])
    if same.size == 0:
        return None

    num_logits = e[same] @ a / tau
    num_lse, num_contrib = _weighted_lse(num_logits, np.ones_like(num_logits))
    if not np.isfinite(num_lse):
        return None
    den_logits = np.concatenate([[float(a @ c) / tau], e[diff] @ a / tau])
    den_lse, den_contrib = _weighted_lse(den_logits, np.ones_like(den_logits))
    value = -num_lse + den_lse

    d_emb = np.zeros_like(e)
    d_anchor = (
        -num_contrib @ e[same] + den_contrib[0] * c + den_contrib[1:] @ e[diff]
    ) / tau
    d_emb[same] += -num_contrib[:, None] * a[None, :] / tau
    d_emb[diff] += den_contrib[1:, None] * a[None, :] / tau
    d_emb[anchor] += d_anchor
    d_counterpart = den_contrib[0] * a / tau
    return LossResult(value, {"embeddings": d_emb, "counterpart": d_counterpart})


def sampled_ideal_loss(
    anchor_emb, counterpart_emb, pos_embs, neg_embs, l: float | None, q: float | None, tau: float
) -> LossResult:
    """Finite-sample estimate of the label-oracle objective.

    -log( (l/m) sum_j e^{a.p_j/tau} / (e^{a.c/tau} + (q/n) sum_k e^{a.s_k/tau}) )
    over m positive and n negative sampled rows.  ``l=None`` resolves to n
    and ``q=None`` to m, the convention that keeps the estimate on the same
    form as the oracle sum.
    """
    a = np.asarray(anchor_emb, dtype=np.float64)
    c = np.asarray(counterpart_emb, dtype=np.float64)
    pos = np.asarray(pos_embs, dtype=np.float64).reshape(-1, a.shape[0])
    neg = np.asarray(neg_embs, dtype=np.float64).reshape(-1, a.shape[0])
    m, n = pos.shape[0], neg.shape[0]
    if m < 1 or n < 1:
        raise ValueError("need at least one positive and one negative sample")
    if l is None:
        l = float(n)
    if q is None:
        q = float(m)
    if l <= 0 or q <= 0:
        raise ConfigError(f"scale factors must be positive, got l={l}, q={q}")

    num_logits = pos @ a / tau
    num_w = np.full(m, l / m)
    num_lse, num_contrib = _weighted_lse(num_logits, num_w)
    den_logits = np.concatenate([[float(a @ c) / tau], neg @ a / tau])
    den_w = np.concatenate([[1.0], np.full(n, q / n)])
    den_lse, den_contrib = _weighted_lse(den_logits, den_w)
    value = -num_lse + den_lse

    d_anchor = (-num_contrib @ pos + den_contrib[0] * c + den_contrib[1:] @ neg) / tau
    d_pos = -num_contrib[:, None] * a[None, :] / tau
    d_neg = den_contrib[1:, None] * a[None, :] / tau
    d_counterpart = den_contrib[0] * a / tau
    return LossResult(
        value,
        {"anchor": d_anchor, "counterpart": d_counterpart, "positives": d_pos, "negatives": d_neg},
    )


def enhanced_loss(
    anchor_emb, counterpart_emb, vm_embs, w_pos, vn_embs, w_neg, tau: float
) -> LossResult | None:
    """Similarity-weighted contrastive loss.

    -log( sum_j w+_j e^{a.m_j/tau} / (e^{a.c/tau} + sum_k w-_k e^{a.n_k/tau}) ).

    The weights are soft positive/negative indicators (nonnegative, mean 1
    over their candidate set); with V_M = {counterpart} and unit weights
    this reduces exactly to :func:`infonce`.  Returns ``None`` when the
    weighted numerator is exactly zero (all positive weights zero, or
    underflow on their support).
    """
    a = np.asarray(anchor_emb, dtype=np.float64)
    c = np.asarray(counterpart_emb, dtype=np.float64)
    vm = np.asarray(vm_embs, dtype=np.float64).reshape(-1, a.shape[0])
    vn = np.asarray(vn_embs, dtype=np.float64).reshape(-1, a.shape[0])
    w_pos = np.asarray(w_pos, dtype=np.float64)
    w_neg = np.asarray(w_neg, dtype=np.float64)
    if np.any(w_pos < 0) or np.any(w_neg < 0):
        raise ValueError("weights must be nonnegative")

    num_lse, num_contrib = _weighted_lse(vm @ a / tau, w_pos)
    if not np.isfinite(num_lse):
        return None
    den_logits = np.concatenate([[float(a @ c) / tau], vn @ a / tau])
    den_lse, den_contrib = _weighted_lse(den_logits, np.concatenate([[1.0], w_neg]))
    value = -num_lse + den_lse

    d_anchor = (-num_contrib @ vm + den_contrib[0] * c + den_contrib[1:] @ vn) / tau
    d_vm = -num_contrib[:, None] * a[None, :] / tau
    d_vn = den_contrib[1:, None] * a[None, :] / tau
    d_counterpart = den_contrib[0] * a / tau
    return LossResult(
        value,
        {"anchor": d_anchor, "counterpart": d_counterpart, "positives": d_vm, "negatives": d_vn},
    )


def batch_contrastive_loss(z: np.ndarray, num_w: np.ndarray, den_w: np.ndarray, tau: float) -> LossResult:
    """Weighted in-batch contrastive ratio, the core both NC losses share.

    Per anchor i over a batch with embeddings ``z``:
    -log( sum_{j!=i} num_w[i,j] e^{z_i.z_j/tau} / sum_{k!=i} den_w[i,k] e^{z_i.z_k/tau} ),
    averaged over anchors whose numerator is nonzero.  ``num_w`` and
    ``den_w`` must have zero diagonals (self-pairs never participate).
    """
    z = np.asarray(z, dtype=np.float64)
    num_w = np.asarray(num_w, dtype=np.float64)
    den_w = np.asarray(den_w, dtype=np.float64)
    b, _ = z.shape
    logits = z @ z.T / tau
    off = ~np.eye(b, dtype=bool)

    def rowwise_lse(weights):
        # Max-subtraction over each row's positive-weight support; rows with
        # empty support come back as -inf with zero contributions.
        support = (weights > 0) & off
        masked = np.where(support, logits, -np.inf)
        m = masked.max(axis=1)
        ok = np.isfinite(m)
        m_safe = np.where(ok, m, 0.0)
        scaled = np.where(support, weights, 0.0) * np.exp(masked - m_safe[:, None])
        totals = scaled.sum(axis=1)
        pos = totals > 0
        lse = np.where(ok & pos, m_safe + np.log(np.where(pos, totals, 1.0)), -np.inf)
        contrib = scaled / np.where(pos, totals, 1.0)[:, None]
        return lse, contrib

    num_lse, num_contrib = rowwise_lse(num_w)
    den_lse, den_contrib = rowwise_lse(den_w)

    active = np.isfinite(num_lse) & np.isfinite(den_lse)
    skipped = int(b - active.sum())
    if not active.any():
        warnings.warn("all anchors skipped in batch contrastive loss", RuntimeWarning, stacklevel=3)
        return LossResult(0.0, {"embeddings": np.zeros_like(z)}, skipped=skipped)

    k = int(active.sum())
    value = float((den_lse[active] - num_lse[active]).sum() / k)

    g = np.where(active[:, None], den_contrib - num_contrib, 0.0) / k
    d_z = (g @ z + g.T @ z) / tau
    return LossResult(value, {"embeddings": d_z}, skipped=skipped)


def nc_loss(batch_embs, batch_indices, a_hat_r: np.ndarray, tau: float) -> LossResult:
    """Neighborhood-contrastive loss over one batch.

    Nodes within r hops of the anchor (nonzero entries of the r-th power of
    the normalized adjacency) act as positives; the denominator runs over
    every other batch node.  Anchors with no in-batch r-hop neighbor are
    skipped, and the batch value is the mean over the rest so batch size
    does not rescale the loss against the cross-entropy term.
    """
    z = np.asarray(batch_embs, dtype=np.float64)
    idx = np.asarray(batch_indices, dtype=np.int64)
    coeff = np.asarray(a_hat_r, dtype=np.float64)[np.ix_(idx, idx)].copy()
    np.fill_diagonal(coeff, 0.0)
    return batch_contrastive_loss(z, coeff, uniform_offdiag(idx.size), tau)


def enhanced_nc_loss(batch_embs, w_pos: np.ndarray, w_neg: np.ndarray, tau: float) -> LossResult:
    """Similarity-weighted neighborhood-contrastive loss.

    Same ratio as :func:`nc_loss` but the r-hop indicator is replaced by
    the positive weights and the denominator is reweighted by the negative
    weights; both matrices are per-anchor rows over in-batch candidates
    with zero diagonals (see ``WeightTable.batch_weight_matrices``).
    """
    z = np.asarray(batch_embs, dtype=np.float64)
    w_pos = np.asarray(w_pos, dtype=np.float64)
    w_neg = np.asarray(w_neg, dtype=np.float64)
    if w_pos.shape != (z.shape[0], z.shape[0]) or w_neg.shape != w_pos.shape:
        raise ValueError("weight matrices must be (batch, batch)")
    return batch_contrastive_loss(z, w_pos, w_neg, tau)


def uniform_offdiag(b: int) -> np.ndarray:
    """All-ones weight matrix with zero diagonal (uniform non-self candidates)."""
    w = np.ones((b, b))
    np.fill_diagonal(w, 0.0)
    return w


def cross_entropy(logits, labels, idx) -> LossResult:
    """Mean softmax cross-entropy over the index set, with logit gradients."""
    logits = np.asarray(logits, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("cross_entropy over an empty index set")
    rows = logits[idx]
    m = rows.max(axis=1, keepdims=True)
    shifted = rows - m
    lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - lse
    value = float(-log_probs[np.arange(idx.size), y[idx]].mean())

    d_logits = np.zeros_like(logits)
    soft = np.exp(log_probs)
    soft[np.arange(idx.size), y[idx]] -= 1.0
    d_logits[idx] = soft / idx.size
    return LossResult(value, {"logits": d_logits})


def combined_loss(ce: LossResult, nc: LossResult, lambda_nc: float) -> LossResult:
    """Semi-supervised total: cross-entropy plus lambda times the
    contrastive term, with gradients merged key-by-key."""
    if lambda_nc < 0:
        raise ConfigError(f"lambda_nc must be >= 0, got {lambda_nc}")
    grads: dict[str, np.ndarray] = {}
    for key, g in ce.grads.items():
        grads[key] = g.copy()
    for key, g in nc.grads.items():
        if key in grads:
            grads[key] = grads[key] + lambda_nc * g
        else:
            grads[key] = lambda_nc * g
    return LossResult(ce.value + lambda_nc * nc.value, grads, skipped=nc.skipped)


# ---------------------------------------------------------------------------
# Monte-Carlo validation of the asymptotic form of the sampled objective
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlantedPopulation:
    """Finite population with known positive/negative sampling distributions."""

    embeddings: np.ndarray
    anchor_emb: np.ndarray
    counterpart_emb: np.ndarray
    p_pos: np.ndarray
    p_neg: np.ndarray

    def __post_init__(self):
        for name, p in (("p_pos", self.p_pos), ("p_neg", self.p_neg)):
            if abs(float(np.sum(p)) - 1.0) > 1e-9 or np.any(np.asarray(p) < 0):
                raise ValueError(f"{name} must be a probability vector")


def population_from_labels(embeddings, labels, anchor: int, counterpart_emb=None) -> PlantedPopulation:
    """Uniform same-class positives and different-class negatives for one anchor."""
    e = np.asarray(embeddings, dtype=np.float64)
    y = np.asarray(labels)
    same = (y == y[anchor]).astype(np.float64)
    diff = 1.0 - same
    if same.sum() == 0 or diff.sum() == 0:
        raise ValueError("anchor class must be neither empty nor the whole population")
    c = e[anchor] if counterpart_emb is None else np.asarray(counterpart_emb, dtype=np.float64)
    return PlantedPopulation(
        embeddings=e,
        anchor_emb=e[anchor],
        counterpart_emb=c,
        p_pos=same / same.sum(),
        p_neg=diff / diff.sum(),
    )


@dataclass(frozen=True)
class GapStatistics:
    """Monte-Carlo vs closed-form comparison for one (m, n) setting."""

    mc_mean: float
    closed_form: float
    gap: float
    std_error: float
    trial_values: np.ndarray = field(repr=False)


def theorem1_gap(
    population: PlantedPopulation,
    m: int,
    n: int,
    trials: int,
    tau: float,
    rng: np.random.Generator,
    l: float = 1.0,
    q: float = 1.0,
) -> GapStatistics:
    """Compare the finite-sample objective against its asymptotic form.

    For fixed scale factors l and q, the expectation over m positive and n
    negative draws converges, as m and n grow, to the closed form computed
    with exact expectations over the finite population.  This runs
    ``trials`` independent draws of the sampled objective, averages them,
    and reports the absolute gap to the closed form together with the
    Monte-Carlo standard error.
    """
    e = population.embeddings
    a = population.anchor_emb
    vals = np.exp(e @ a / tau)
    c_term = float(np.exp(a @ population.counterpart_emb / tau))

    exp_pos = float(population.p_pos @ vals)
    exp_neg = float(population.p_neg @ vals)
    closed_form = -np.log(l * exp_pos / (c_term + q * exp_neg))

    pop = e.shape[0]
    pos_draws = rng.choice(pop, size=(trials, m), p=population.p_pos)
    neg_draws = rng.choice(pop, size=(trials, n), p=population.p_neg)
    pos_means = vals[pos_draws].mean(axis=1)
    neg_means = vals[neg_draws].mean(axis=1)
    trial_values = -np.log(l * pos_means / (c_term + q * neg_means))

    mc_mean = float(trial_values.mean())
    std_error = float(trial_values.std(ddof=1) / np.sqrt(trials)) if trials > 1 else float("inf")
    return GapStatistics(
        mc_mean=mc_mean,
        closed_form=float(closed_form),
        gap=abs(mc_mean - float(closed_form)),
        std_error=std_error,
        trial_values=trial_values,
    )
