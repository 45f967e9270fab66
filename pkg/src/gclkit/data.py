"""Dataset files, synthetic block-model generation, and splits.

File formats:

* edges: UTF-8 text, one "u<TAB>v" pair per line, 0-indexed, lines
  starting with '#' ignored;
* features: CSV, one row of comma-separated decimals per node;
* labels: one integer class index per line;
* embeddings: CSV of node id followed by the vector components.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, ParseError
from .graph import Graph, build_graph
from .rng import rng_from


@dataclass(frozen=True)
class DataSplit:
    """Disjoint train/validation/test index sets."""

    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        for name in ("train", "val", "test"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.int64))
        combined = np.concatenate([self.train, self.val, self.test])
        if np.unique(combined).size != combined.size:
            raise ValueError("split index sets overlap")


@dataclass(frozen=True)
class SbmSpec:
    """Stochastic block model with class-mean Gaussian features.

    Class means are drawn orthogonal to each other (when the feature
    dimension permits) and scaled by ``mean_scale``; per-node features add
    isotropic Gaussian noise of ``noise_scale``.  ``means`` may be given
    explicitly to override the generated ones.
    """

    block_sizes: tuple[int, ...]
    p_in: float = 0.1
    p_out: float = 0.01
    feat_dim: int = 16
    mean_scale: float = 1.0
    noise_scale: float = 1.0
    seed: int = 0
    means: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if not self.block_sizes or any(b < 1 for b in self.block_sizes):
            raise ConfigError("block sizes must all be >= 1")
        for name, p in (("p_in", self.p_in), ("p_out", self.p_out)):
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {p}")

    @property
    def n(self) -> int:
        return sum(self.block_sizes)


def gen_sbm(spec: SbmSpec) -> tuple[Graph, np.ndarray, np.ndarray]:
    """Sample (graph, features, labels) from the block model, deterministically."""
    n = spec.n
    labels = np.repeat(np.arange(len(spec.block_sizes)), spec.block_sizes)

    edge_rng = rng_from(spec.seed, "sbm-edges")
    iu, ju = np.triu_indices(n, k=1)
    p = np.where(labels[iu] == labels[ju], spec.p_in, spec.p_out)
    keep = edge_rng.random(iu.size) < p
    edges = np.stack([iu[keep], ju[keep]], axis=1)
    graph = build_graph(edges, n)

    feat_rng = rng_from(spec.seed, "sbm-features")
    k = len(spec.block_sizes)
    if spec.means is not None:
        means = np.asarray(spec.means, dtype=np.float64)
        if means.shape != (k, spec.feat_dim):
            raise ConfigError(f"means must have shape ({k}, {spec.feat_dim}), got {means.shape}")
    else:
        means = _orthogonal_means(k, spec.feat_dim, spec.mean_scale, feat_rng)
    noise = spec.noise_scale * feat_rng.standard_normal((n, spec.feat_dim))
    features = means[labels] + noise
    return graph, features, labels


def _orthogonal_means(k: int, dim: int, scale: float, rng: np.random.Generator) -> np.ndarray:
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    if k <= dim:
        return scale * q[:k]
    # more classes than dimensions: reuse directions with sign flips
    reps = [q[i % dim] * (-1.0) ** (i // dim) for i in range(k)]
    return scale * np.stack(reps)


def make_split(
    n: int,
    ratios: tuple[float, float, float],
    labels=None,
    seed: int = 0,
    stratified: bool = False,
    train_per_class: int | None = None,
) -> DataSplit:
    """Random disjoint train/val/test indices.

    ``ratios`` is (train, val, test) and may sum to less than 1 (leftover
    nodes are unused).  Stratified mode keeps class proportions within one
    node per class.  ``train_per_class`` switches the training set to a
    fixed number of samples per class (the limited-label regime); val and
    test are then drawn from the remainder by their ratios.
    """
    r_train, r_val, r_test = ratios
    if min(ratios) < 0 or r_train + r_val + r_test > 1.0 + 1e-9:
        raise ConfigError(f"ratios must be nonnegative and sum to <= 1, got {ratios}")
    rng = rng_from(seed, "split")

    if train_per_class is not None:
        if labels is None:
            raise ConfigError("train_per_class requires labels")
        y = np.asarray(labels)
        train_parts = []
        for cls in np.unique(y):
            members = np.flatnonzero(y == cls)
            if members.size < train_per_class:
                raise ConfigError(
                    f"class {cls} has {members.size} nodes, fewer than "
                    f"train_per_class={train_per_class}"
                )
            train_parts.append(rng.permutation(members)[:train_per_class])
        train = np.sort(np.concatenate(train_parts))
        rest = rng.permutation(np.setdiff1d(np.arange(n), train))
        n_val = int(round(r_val * n))
        n_test = int(round(r_test * n))
        if n_val + n_test > rest.size:
            raise ConfigError("val/test ratios exceed the nodes left after per-class training set")
        return DataSplit(train=train, val=np.sort(rest[:n_val]), test=np.sort(rest[n_val:n_val + n_test]))

    if stratified:
        if labels is None:
            raise ConfigError("stratified split requires labels")
        y = np.asarray(labels)
        parts: dict[str, list[np.ndarray]] = {"train": [], "val": [], "test": []}
        for cls in np.unique(y):
            members = rng.permutation(np.flatnonzero(y == cls))
            c = members.size
            n_train = int(round(r_train * c))
            n_val = int(round(r_val * c))
            n_test = min(int(round(r_test * c)), c - n_train - n_val)
            if min(n_train, n_val, n_test) < 0 or n_train + n_val + n_test > c:
                raise ConfigError(f"class {cls} too small for stratified ratios {ratios}")
            parts["train"].append(members[:n_train])
            parts["val"].append(members[n_train:n_train + n_val])
            parts["test"].append(members[n_train + n_val:n_train + n_val + n_test])
        return DataSplit(
            train=np.sort(np.concatenate(parts["train"])),
            val=np.sort(np.concatenate(parts["val"])),
            test=np.sort(np.concatenate(parts["test"])),
        )

    perm = rng.permutation(n)
    n_train = int(round(r_train * n))
    n_val = int(round(r_val * n))
    n_test = min(int(round(r_test * n)), n - n_train - n_val)
    return DataSplit(
        train=np.sort(perm[:n_train]),
        val=np.sort(perm[n_train:n_train + n_val]),
        test=np.sort(perm[n_train + n_val:n_train + n_val + n_test]),
    )


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------

def read_edge_list(path) -> list[tuple[int, int]]:
    edges = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ParseError(f"{path}:{lineno}: expected 'u<TAB>v', got {line!r}")
            try:
                edges.append((int(parts[0]), int(parts[1])))
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: non-integer node id in {line!r}") from exc
    return edges


def write_edge_list(path, graph: Graph) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {graph.n} nodes, {graph.num_edges} undirected edges\n")
        for i, j in graph.edges:
            fh.write(f"{i}\t{j}\n")


def read_features(path) -> np.ndarray:
    rows = []
    width = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if width is None:
                width = len(parts)
            elif len(parts) != width:
                raise ParseError(f"{path}:{lineno}: expected {width} columns, got {len(parts)}")
            try:
                rows.append([float(v) for v in parts])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: non-numeric feature value") from exc
    return np.asarray(rows, dtype=np.float64)


def write_features(path, x: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in np.asarray(x, dtype=np.float64):
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def read_labels(path) -> np.ndarray:
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                values.append(int(line))
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: non-integer label {line!r}") from exc
    return np.asarray(values, dtype=np.int64)


def write_labels(path, labels) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for y in np.asarray(labels, dtype=np.int64):
            fh.write(f"{y}\n")


def load_dataset(edge_path, feature_path, label_path) -> tuple[Graph, np.ndarray, np.ndarray]:
    """Load and cross-check the three dataset files.

    Node count is taken from the feature file (one row per node, in node
    order); edge indices must fit it and the label file must match it.
    """
    features = read_features(feature_path)
    labels = read_labels(label_path)
    n = features.shape[0]
    if labels.shape[0] != n:
        raise ParseError(
            f"row-count mismatch: {feature_path} has {n} nodes but "
            f"{label_path} has {labels.shape[0]} labels"
        )
    edges = read_edge_list(edge_path)
    try:
        graph = build_graph(edges, n)
    except ValueError as exc:
        raise ParseError(f"{edge_path}: {exc}") from exc
    if not np.all(np.isfinite(features)):
        raise ParseError(f"{feature_path}: non-finite feature values")
    return graph, features, labels


def save_dataset(out_dir, graph: Graph, features: np.ndarray, labels) -> dict[str, Path]:
    """Write the three dataset files into ``out_dir``; returns their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "edges": out / "edges.tsv",
        "features": out / "features.csv",
        "labels": out / "labels.txt",
    }
    write_edge_list(paths["edges"], graph)
    write_features(paths["features"], features)
    write_labels(paths["labels"], labels)
    return paths


def write_embeddings(path, embeddings: np.ndarray) -> None:
    """CSV of node id followed by the embedding vector, stable formatting."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, row in enumerate(np.asarray(embeddings, dtype=np.float64)):
            fh.write(str(i) + "," + ",".join(format(v, ".17g") for v in row) + "\n")


def read_embeddings(path) -> np.ndarray:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            try:
                rows.append([float(v) for v in parts[1:]])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: non-numeric embedding value") from exc
    return np.asarray(rows, dtype=np.float64)
