"""GRACE-style view generation: edge removing and feature masking.

Two perturbed copies of the graph act as views; node i in a view is the
counterpart of node i in the other, which is what makes the cross-view
positive pair well-defined.  Feature masking zeroes whole feature
dimensions (one mask shared by all nodes); edge dropping removes each
undirected edge independently.  Everything is deterministic given the
config seed, with independent sub-streams for edges and features.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .graph import Graph, build_graph
from .rng import rng_from


@dataclass(frozen=True)
class AugmentConfig:
    p_edge: float = 0.2
    p_feat: float = 0.2
    seed: int = 0

    def __post_init__(self):
        for name, p in (("p_edge", self.p_edge), ("p_feat", self.p_feat)):
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {p}")


@dataclass(frozen=True)
class View:
    """One augmented view: perturbed graph + masked features + its seed."""

    graph: Graph
    features: np.ndarray
    seed: int


def drop_edges(g: Graph, p: float, rng: np.random.Generator) -> Graph:
    """Remove each undirected edge independently with probability p."""
    if not 0.0 <= p <= 1.0:
        raise ConfigError(f"p must be in [0, 1], got {p}")
    if g.num_edges == 0 or p == 0.0:
        return build_graph(g.edges, g.n)
    keep = rng.random(g.num_edges) >= p
    return build_graph(g.edges[keep], g.n)


def mask_features(x: np.ndarray, p: float, rng: np.random.Generator) -> np.ndarray:
    """Zero each feature dimension (column) with probability p, all rows alike."""
    if not 0.0 <= p <= 1.0:
        raise ConfigError(f"p must be in [0, 1], got {p}")
    x = np.asarray(x, dtype=np.float64)
    mask = rng.random(x.shape[1]) >= p
    return x * mask[None, :]


def make_view(g: Graph, x: np.ndarray, cfg: AugmentConfig) -> View:
    """Apply edge dropping then feature masking under cfg's seed."""
    g_aug = drop_edges(g, cfg.p_edge, rng_from(cfg.seed, "edges"))
    x_aug = mask_features(x, cfg.p_feat, rng_from(cfg.seed, "features"))
    return View(graph=g_aug, features=x_aug, seed=cfg.seed)


def make_views(g: Graph, x: np.ndarray, cfg1: AugmentConfig, cfg2: AugmentConfig) -> tuple[View, View]:
    """Two independent augmentations of the same graph."""
    return make_view(g, x, cfg1), make_view(g, x, cfg2)
