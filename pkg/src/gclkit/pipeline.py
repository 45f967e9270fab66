"""End-to-end training and evaluation.

Two training protocols share one configuration type:

* two-view contrastive pretraining (edge-dropped, feature-masked views of
  the same graph, a GCN encoder, symmetric contrastive loss between views)
  followed by a frozen-embedding linear probe;
* semi-supervised MLP training with a neighborhood-contrastive auxiliary
  term, evaluated by the classifier head alone.

The ``variant`` field selects the objective: "baseline" is the
single-positive contrastive loss, "enhanced" adds similarity-derived
positive and negative weights, "enhanced-P"/"enhanced-N" keep only one
kind of weight, "enhanced-G"/"enhanced-F" restrict the similarity to the
structural / feature source, and "ideal-oracle" swaps in ground-truth
labels (diagnostic only).

Similarity, and therefore every weight, comes from the unperturbed graph
and features, once per run; augmented views never change the weights.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import nn
from .augmentation import AugmentConfig, make_view
from .data import DataSplit, make_split
from .errors import ConfigError, NumericalError
from .graph import Graph, normalized_adjacency
from .objectives import (
    LossResult,
    ObjectiveConfig,
    batch_contrastive_loss,
    combined_loss,
    cross_entropy,
    nc_loss,
    uniform_offdiag,
)
from .rng import derive_seed, rng_from
from .similarity import SimilarityConfig, compute_similarity
from .weighting import TemperaturePair, WeightTable

VARIANTS = ("baseline", "enhanced", "enhanced-P", "enhanced-N", "enhanced-G", "enhanced-F", "ideal-oracle")
ABLATION_VARIANTS = ("baseline", "enhanced", "enhanced-P", "enhanced-N", "enhanced-G", "enhanced-F")
MODELS = ("grace", "graphmlp")


@dataclass(frozen=True)
class ProbeConfig:
    """Linear probe: multinomial logistic regression by full-batch gradient
    descent with L2 regularization, model selected on the validation set."""

    lr: float = 0.5
    l2: float = 1e-4
    iters: int = 300


@dataclass(frozen=True)
class ExperimentConfig:
    """Every knob of one experiment; hashable to a config digest."""

    model: str = "grace"
    variant: str = "baseline"
    seed: int = 0
    epochs: int = 100
    learning_rate: float = 0.01
    batch_size: int = 0  # 0 = full graph
    d1: int = 64
    d2: int = 32
    similarity: SimilarityConfig = field(default_factory=SimilarityConfig)
    temperatures: TemperaturePair = field(default_factory=TemperaturePair)
    objective: ObjectiveConfig = field(default_factory=ObjectiveConfig)
    aug1: AugmentConfig = field(default_factory=AugmentConfig)
    aug2: AugmentConfig = field(default_factory=AugmentConfig)
    include_intra_view: bool = True
    probe: ProbeConfig = field(default_factory=ProbeConfig)
    split_ratios: tuple[float, float, float] = (0.1, 0.1, 0.8)
    train_per_class: int | None = None
    stratified_split: bool = False

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.model == "graphmlp" and self.variant == "ideal-oracle":
            raise ConfigError("ideal-oracle variant is only defined for the grace model")
        if self.epochs < 0 or self.batch_size < 0:
            raise ConfigError("epochs and batch_size must be nonnegative")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")

    def uses_weights(self) -> bool:
        return self.variant.startswith("enhanced")

    def effective_similarity(self) -> SimilarityConfig:
        """Variant-adjusted similarity config (structural-only / feature-only)."""
        if self.variant == "enhanced-G":
            return replace(self.similarity, beta=0.0)
        if self.variant == "enhanced-F":
            return replace(self.similarity, beta=1.0, gamma_mode="fixed", gamma_value=1.0)
        return self.similarity


def config_to_dict(cfg: ExperimentConfig) -> dict:
    d = dataclasses.asdict(cfg)
    d["split_ratios"] = list(d["split_ratios"])
    return d


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from a plain dict, rejecting
    unknown keys with the dotted path of the offender."""
    return _from_dict(ExperimentConfig, doc, path="")


_NESTED = {
    "similarity": SimilarityConfig,
    "temperatures": TemperaturePair,
    "objective": ObjectiveConfig,
    "aug1": AugmentConfig,
    "aug2": AugmentConfig,
    "probe": ProbeConfig,
}


def _from_dict(cls, doc, path):
    if not isinstance(doc, dict):
        raise ConfigError(f"{path or 'config'}: expected an object, got {type(doc).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(doc) - names)
    if unknown:
        where = f"{path}.{unknown[0]}" if path else unknown[0]
        raise ConfigError(f"unknown configuration key: {where}")
    kwargs = {}
    for key, value in doc.items():
        sub = f"{path}.{key}" if path else key
        if cls is ExperimentConfig and key in _NESTED:
            kwargs[key] = _from_dict(_NESTED[key], value, sub)
        elif key == "split_ratios":
            if not isinstance(value, (list, tuple)) or len(value) != 3:
                raise ConfigError(f"{sub}: expected three ratios")
            kwargs[key] = tuple(float(v) for v in value)
        else:
            kwargs[key] = value
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        raise ConfigError(f"{path or 'config'}: {exc}") from exc
    except TypeError as exc:
        raise ConfigError(f"{path or 'config'}: {exc}") from exc


def config_hash(cfg: ExperimentConfig) -> str:
    doc = json.dumps(config_to_dict(cfg), sort_keys=True)
    return hashlib.sha256(doc.encode()).hexdigest()


@dataclass
class RunReport:
    """Deterministic record of one training run."""

    config_hash: str
    model: str
    variant: str
    seed: int
    epoch_losses: list[float] = field(default_factory=list)
    epoch_skips: list[int] = field(default_factory=list)
    accuracy: float | None = None
    wall_clock_s: float = 0.0
    weights_computed: bool = False

    def content_hash(self) -> str:
        """Hash of everything reproducible (wall clock excluded)."""
        doc = json.dumps(
            {
                "config_hash": self.config_hash,
                "losses": [format(v, ".17g") for v in self.epoch_losses],
                "skips": self.epoch_skips,
                "accuracy": None if self.accuracy is None else format(self.accuracy, ".17g"),
                "weights_computed": self.weights_computed,
            },
            sort_keys=True,
        )
        return hashlib.sha256(doc.encode()).hexdigest()

    def write_jsonl(self, path) -> None:
        """One record per epoch plus a summary record."""
        with open(path, "w", encoding="utf-8") as fh:
            for e, (loss, skips) in enumerate(zip(self.epoch_losses, self.epoch_skips)):
                fh.write(json.dumps({"type": "epoch", "epoch": e, "loss": loss, "skipped": skips}) + "\n")
            fh.write(
                json.dumps(
                    {
                        "type": "summary",
                        "config_hash": self.config_hash,
                        "content_hash": self.content_hash(),
                        "model": self.model,
                        "variant": self.variant,
                        "seed": self.seed,
                        "epochs": len(self.epoch_losses),
                        "accuracy": self.accuracy,
                        "wall_clock_s": self.wall_clock_s,
                        "weights_computed": self.weights_computed,
                    }
                )
                + "\n"
            )


# ---------------------------------------------------------------------------
# Two-view contrastive loss, vectorized over all anchors of both views
# ---------------------------------------------------------------------------


@dataclass
class ViewWeights:
    """Per-anchor weight matrices driving the two-view loss, for one
    candidate set (the whole graph or one batch of ``b`` nodes).

    num : (b, b) numerator weights over opposite-view candidates.
    den_inter : (b, b) denominator weights over opposite-view candidates
        (the always-present unweighted counterpart term is added on top).
    den_intra : (b, b) denominator weights over same-view candidates with a
        zero diagonal, or None when intra-view negatives are off.
    """

    num: np.ndarray
    den_inter: np.ndarray
    den_intra: np.ndarray | None


def build_view_weights(
    cfg: ExperimentConfig, batch: np.ndarray, table: WeightTable | None, labels=None
) -> ViewWeights:
    """Weight matrices for anchors/candidates restricted to ``batch``.

    Similarity-derived weights are normalized to mean 1 over the in-batch
    candidate multiset, so the batch IS the candidate set; indicator
    weights (baseline counterpart, oracle label masks) are never rescaled.
    """
    batch = np.asarray(batch, dtype=np.int64)
    b = batch.size
    intra_uniform = uniform_offdiag(b) if cfg.include_intra_view else None
    if cfg.variant == "baseline":
        return ViewWeights(num=np.eye(b), den_inter=uniform_offdiag(b), den_intra=intra_uniform)
    if cfg.variant == "ideal-oracle":
        y = np.asarray(labels)[batch]
        same = (y[:, None] == y[None, :]).astype(np.float64)
        return ViewWeights(num=same, den_inter=1.0 - same, den_intra=None)

    if cfg.variant == "enhanced-N":
        num = np.eye(b)
    else:
        num = table.pos_weight_matrix(batch, batch)
    if cfg.variant == "enhanced-P":
        return ViewWeights(num=num, den_inter=np.ones((b, b)), den_intra=intra_uniform)
    den_inter, den_intra = _negative_weight_matrices(table, batch, cfg.include_intra_view)
    return ViewWeights(num=num, den_inter=den_inter, den_intra=den_intra)


def _negative_weight_matrices(
    table: WeightTable, batch: np.ndarray, include_intra: bool
) -> tuple[np.ndarray, np.ndarray | None]:
    """Mean-1 negative weights over the in-batch candidate multiset.

    Without intra-view candidates the multiset is the opposite view's batch
    (b entries per anchor).  With them it is that batch plus the same-view
    batch minus the anchor (2b - 1 entries), normalized jointly so the mean
    over the union is exactly 1.
    """
    d = table.d_neg[np.ix_(batch, batch)].copy()
    b = batch.size
    if not include_intra:
        means = _fallback_uniform(d, d.mean(axis=1))
        return d / means[:, None], None
    row_sums = d.sum(axis=1)
    means = _fallback_uniform(d, (2.0 * row_sums - np.diag(d)) / (2 * b - 1))
    inter = d / means[:, None]
    intra = inter.copy()
    np.fill_diagonal(intra, 0.0)
    return inter, intra


def _fallback_uniform(d: np.ndarray, means: np.ndarray) -> np.ndarray:
    zero = means == 0.0
    if zero.any():
        warnings.warn(
            f"{int(zero.sum())} anchors with fully-underflowed negative transforms; "
            "using uniform negative weights",
            RuntimeWarning,
            stacklevel=3,
        )
        d[zero] = 1.0
        means = np.where(zero, 1.0, means)
    return means


def _rowwise_weighted_lse(logits: np.ndarray, weights: np.ndarray):
    support = weights > 0
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


def _direction_loss(za: np.ndarray, zb: np.ndarray, vw: ViewWeights, tau: float):
    """Anchors in view a against candidates in view b (and optionally a).

    Returns (mean loss over active anchors, skipped count, d_za, d_zb).
    """
    b = za.shape[0]
    logits_ab = za @ zb.T / tau
    num_lse, num_contrib = _rowwise_weighted_lse(logits_ab, vw.num)

    den_w = vw.den_inter + np.eye(b)  # counterpart term always present
    if vw.den_intra is not None:
        logits_aa = za @ za.T / tau
        den_logits = np.concatenate([logits_ab, logits_aa], axis=1)
        den_weights = np.concatenate([den_w, vw.den_intra], axis=1)
    else:
        den_logits = logits_ab
        den_weights = den_w
    den_lse, den_contrib = _rowwise_weighted_lse(den_logits, den_weights)

    active = np.isfinite(num_lse) & np.isfinite(den_lse)
    skipped = int(b - active.sum())
    if not active.any():
        return 0.0, skipped, np.zeros_like(za), np.zeros_like(zb)
    k = int(active.sum())
    value = float((den_lse[active] - num_lse[active]).sum() / k)

    g_inter = np.where(active[:, None], den_contrib[:, :b] - num_contrib, 0.0) / k
    d_za = g_inter @ zb / tau
    d_zb = g_inter.T @ za / tau
    if vw.den_intra is not None:
        g_intra = np.where(active[:, None], den_contrib[:, b:], 0.0) / k
        d_za += (g_intra + g_intra.T) @ za / tau
    return value, skipped, d_za, d_zb


def two_view_loss(z1: np.ndarray, z2: np.ndarray, vw: ViewWeights, tau: float):
    """Symmetric two-view loss: both directions, averaged.

    Returns (value, skipped, d_z1, d_z2).
    """
    v12, s12, d1a, d2a = _direction_loss(z1, z2, vw, tau)
    v21, s21, d2b, d1b = _direction_loss(z2, z1, vw, tau)
    value = 0.5 * (v12 + v21)
    d_z1 = 0.5 * (d1a + d1b)
    d_z2 = 0.5 * (d2a + d2b)
    return value, s12 + s21, d_z1, d_z2


# ---------------------------------------------------------------------------
# Training loops
# ---------------------------------------------------------------------------


def _epoch_batches(n: int, batch_size: int, rng: np.random.Generator) -> list[np.ndarray]:
    if batch_size <= 0 or batch_size >= n:
        return [np.arange(n)]
    perm = rng.permutation(n)
    return [perm[i:i + batch_size] for i in range(0, n, batch_size)]


def prepare_weight_table(g: Graph, x: np.ndarray, cfg: ExperimentConfig) -> WeightTable | None:
    """Similarity plus transforms for enhanced variants, on unperturbed data."""
    if not cfg.uses_weights():
        return None
    a_plain = normalized_adjacency(g, add_self_loops=False)
    sims = compute_similarity(a_plain, x, cfg.effective_similarity())
    return WeightTable(sims, cfg.temperatures)


def train_grace(g: Graph, x: np.ndarray, cfg: ExperimentConfig, labels=None):
    """Two-view contrastive pretraining; returns (encoder embeddings, report).

    Embeddings come from the encoder (not the projector) applied to the
    original, unaugmented graph.  When labels are provided the linear probe
    runs on a fresh split and its test accuracy lands in the report.
    """
    if cfg.model != "grace":
        raise ConfigError(f"train_grace requires model='grace', got {cfg.model!r}")
    if cfg.variant == "ideal-oracle" and labels is None:
        raise ConfigError("ideal-oracle variant requires labels")
    started = time.perf_counter()
    x = np.asarray(x, dtype=np.float64)
    n, d_in = x.shape

    table = prepare_weight_table(g, x, cfg)
    all_nodes = np.arange(n)
    vw_full = build_view_weights(cfg, all_nodes, table, labels)

    params = nn.init_gcn_params(d_in, cfg.d1, cfg.d2, rng_from(cfg.seed, "init"))
    tau = cfg.objective.tau
    report = RunReport(
        config_hash=config_hash(cfg),
        model=cfg.model,
        variant=cfg.variant,
        seed=cfg.seed,
        weights_computed=table is not None,
    )

    for epoch in range(cfg.epochs):
        view1 = make_view(g, x, replace(cfg.aug1, seed=derive_seed(cfg.seed, "aug1", cfg.aug1.seed, epoch)))
        view2 = make_view(g, x, replace(cfg.aug2, seed=derive_seed(cfg.seed, "aug2", cfg.aug2.seed, epoch)))
        a1 = normalized_adjacency(view1.graph, add_self_loops=True)
        a2 = normalized_adjacency(view2.graph, add_self_loops=True)
        z1, tr1 = nn.gcn_forward(a1, view1.features, params)
        z2, tr2 = nn.gcn_forward(a2, view2.features, params)

        batches = _epoch_batches(n, cfg.batch_size, rng_from(cfg.seed, "batches", epoch))
        d_z1 = np.zeros_like(z1)
        d_z2 = np.zeros_like(z2)
        losses = []
        skipped = 0
        for batch in batches:
            full = batch.size == n
            vw = vw_full if full else build_view_weights(cfg, batch, table, labels)
            value, skips, g1, g2 = two_view_loss(z1[batch], z2[batch], vw, tau)
            losses.append(value)
            skipped += skips
            d_z1[batch] += g1 / len(batches)
            d_z2[batch] += g2 / len(batches)
        epoch_loss = float(np.mean(losses))
        if not np.isfinite(epoch_loss):
            raise NumericalError(f"non-finite loss at epoch {epoch}")

        grads1 = nn.gcn_backward(tr1, d_z1, params)
        grads2 = nn.gcn_backward(tr2, d_z2, params)
        grads = {k: grads1[k] + grads2[k] for k in grads1}
        nn.adam_step(params, grads, cfg.learning_rate)
        report.epoch_losses.append(epoch_loss)
        report.epoch_skips.append(skipped)

    a_orig = normalized_adjacency(g, add_self_loops=True)
    _, trace = nn.gcn_forward(a_orig, x, params)
    embeddings = trace.tensors["H"]

    if labels is not None:
        split = make_split(
            n,
            cfg.split_ratios,
            labels=labels,
            seed=derive_seed(cfg.seed, "split"),
            stratified=cfg.stratified_split,
            train_per_class=cfg.train_per_class,
        )
        report.accuracy = linear_probe(embeddings, labels, split, cfg.probe)
    report.wall_clock_s = time.perf_counter() - started
    return embeddings, report


def _graphmlp_nc_term(cfg: ExperimentConfig, z_b, batch, a_hat_r, table) -> LossResult:
    tau = cfg.objective.tau
    if cfg.variant == "baseline":
        return nc_loss(z_b, batch, a_hat_r, tau)
    w_pos, w_neg = table.batch_weight_matrices(batch)
    if cfg.variant == "enhanced-P":
        return batch_contrastive_loss(z_b, w_pos, uniform_offdiag(batch.size), tau)
    if cfg.variant == "enhanced-N":
        coeff = a_hat_r[np.ix_(batch, batch)].copy()
        np.fill_diagonal(coeff, 0.0)
        return batch_contrastive_loss(z_b, coeff, w_neg, tau)
    return batch_contrastive_loss(z_b, w_pos, w_neg, tau)


def train_graphmlp(g: Graph, x: np.ndarray, labels, split: DataSplit, cfg: ExperimentConfig):
    """Semi-supervised MLP with a neighborhood-contrastive term.

    Per step: cross-entropy on the labeled nodes inside the batch plus
    lambda_nc times the (possibly weighted) in-batch contrastive loss.
    Inference uses the MLP classifier head alone; the reported accuracy is
    on the test split.  Returns (params, report).
    """
    if cfg.model != "graphmlp":
        raise ConfigError(f"train_graphmlp requires model='graphmlp', got {cfg.model!r}")
    started = time.perf_counter()
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    n, d_in = x.shape
    n_classes = int(y.max()) + 1

    a_hat = normalized_adjacency(g, add_self_loops=True)
    a_hat_r = np.linalg.matrix_power(a_hat.dense(), cfg.objective.nc_r)
    table = prepare_weight_table(g, x, cfg)

    params = nn.init_mlp_params(d_in, cfg.d1, cfg.d2, n_classes, rng_from(cfg.seed, "init"))
    train_mask = np.zeros(n, dtype=bool)
    train_mask[split.train] = True
    report = RunReport(
        config_hash=config_hash(cfg),
        model=cfg.model,
        variant=cfg.variant,
        seed=cfg.seed,
        weights_computed=table is not None,
    )

    for epoch in range(cfg.epochs):
        batches = _epoch_batches(n, cfg.batch_size, rng_from(cfg.seed, "batches", epoch))
        losses = []
        skipped = 0
        for batch in batches:
            z_b, trace = nn.mlp_forward(x[batch], params)
            logits = trace.tensors["logits"]
            nc = _graphmlp_nc_term(cfg, z_b, batch, a_hat_r, table)
            labeled = np.flatnonzero(train_mask[batch])
            if labeled.size:
                ce = cross_entropy(logits, y[batch], labeled)
            else:
                ce = LossResult(0.0, {"logits": np.zeros_like(logits)})
            total = combined_loss(ce, nc, cfg.objective.lambda_nc)
            losses.append(total.value)
            skipped += total.skipped
            grads = nn.mlp_backward(
                trace, total.grads.get("embeddings"), params, total.grads.get("logits")
            )
            nn.adam_step(params, grads, cfg.learning_rate)
        epoch_loss = float(np.mean(losses))
        if not np.isfinite(epoch_loss):
            raise NumericalError(f"non-finite loss at epoch {epoch}")
        report.epoch_losses.append(epoch_loss)
        report.epoch_skips.append(skipped)

    _, trace = nn.mlp_forward(x, params)
    preds = trace.tensors["logits"].argmax(axis=1)
    report.accuracy = float((preds[split.test] == y[split.test]).mean())
    report.wall_clock_s = time.perf_counter() - started
    return params, report


def linear_probe(embeddings, labels, split: DataSplit, probe: ProbeConfig = ProbeConfig()) -> float:
    """Frozen-embedding evaluation by multinomial logistic regression.

    Full-batch gradient descent with L2 regularization on the training
    indices; the iterate with the best validation accuracy is evaluated on
    the test indices.  The input embeddings are never modified.
    """
    x = np.asarray(embeddings, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    missing = np.setdiff1d(np.unique(y), np.unique(y[split.train]))
    if missing.size:
        raise ValueError(f"classes {missing.tolist()} missing from the training split")
    n_classes = int(y.max()) + 1

    xb = np.concatenate([x, np.ones((x.shape[0], 1))], axis=1)
    w = np.zeros((xb.shape[1], n_classes))
    x_train = xb[split.train]
    y_train = y[split.train]

    def accuracy(idx, weights):
        if idx.size == 0:
            return 0.0
        return float(((xb[idx] @ weights).argmax(axis=1) == y[idx]).mean())

    best_val = -1.0
    best_w = w.copy()
    for _ in range(probe.iters):
        logits = x_train @ w
        shifted = logits - logits.max(axis=1, keepdims=True)
        soft = np.exp(shifted)
        soft /= soft.sum(axis=1, keepdims=True)
        soft[np.arange(y_train.size), y_train] -= 1.0
        grad = x_train.T @ soft / y_train.size
        grad[:-1] += probe.l2 * w[:-1]  # no penalty on the bias row
        w -= probe.lr * grad
        val_acc = accuracy(split.val, w)
        if val_acc > best_val:
            best_val = val_acc
            best_w = w.copy()
    return accuracy(split.test, best_w)


@dataclass
class AblationRow:
    variant: str
    mean_acc: float
    std_acc: float
    seeds: int


def run_ablation(g: Graph, x: np.ndarray, labels, base_cfg: ExperimentConfig, seeds):
    """Run every ablation variant over the given seeds.

    Returns (rows, reports): one row per variant with accuracy mean and
    standard deviation across seeds, plus every individual report.
    """
    seeds = list(seeds)
    if not seeds:
        raise ConfigError("run_ablation needs at least one seed")
    rows: list[AblationRow] = []
    reports: dict[tuple[str, int], RunReport] = {}
    for variant in ABLATION_VARIANTS:
        accs = []
        for seed in seeds:
            cfg = replace(base_cfg, variant=variant, seed=seed)
            if cfg.model == "grace":
                _, report = train_grace(g, x, cfg, labels=labels)
            else:
                split = make_split(
                    g.n,
                    cfg.split_ratios,
                    labels=labels,
                    seed=derive_seed(seed, "split"),
                    stratified=cfg.stratified_split,
                    train_per_class=cfg.train_per_class,
                )
                _, report = train_graphmlp(g, x, labels, split, cfg)
            reports[(variant, seed)] = report
            accs.append(report.accuracy)
        acc_arr = np.asarray(accs, dtype=np.float64)
        rows.append(
            AblationRow(
                variant=variant,
                mean_acc=float(acc_arr.mean()),
                std_acc=float(acc_arr.std(ddof=0)),
                seeds=len(seeds),
            )
        )
    return rows, reports


def write_ablation_csv(path, rows: list[AblationRow]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("variant,mean_acc,std_acc,seeds\n")
        for row in rows:
            fh.write(f"{row.variant},{row.mean_acc:.6f},{row.std_acc:.6f},{row.seeds}\n")
