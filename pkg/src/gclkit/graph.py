"""Undirected graph representation and symmetric normalization.

The graph is immutable after construction: a deduplicated, canonically
ordered list of undirected edges plus a CSR adjacency matrix with both
directions materialized.  Everything downstream (PPR, encoders, losses)
consumes either the CSR adjacency or the symmetric normalization
D^{-1/2} A D^{-1/2}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class Graph:
    """Immutable undirected graph.

    Attributes
    ----------
    n : int
        Number of nodes, indices 0..n-1.
    edges : ndarray of shape (m, 2)
        Canonical undirected edges with i < j, sorted lexicographically.
    adj : scipy.sparse.csr_matrix
        n x n symmetric 0/1 adjacency, no self-loops.
    """

    n: int
    edges: np.ndarray
    adj: sp.csr_matrix = field(repr=False)

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return np.asarray(self.adj.sum(axis=1)).ravel()


@dataclass(frozen=True)
class NormalizedAdjacency:
    """Symmetrically normalized adjacency D^{-1/2} A D^{-1/2}.

    Rows and columns of degree-0 nodes are exactly zero.  ``self_loops``
    records whether I was added to A before normalization.
    """

    matrix: sp.csr_matrix = field(repr=False)
    self_loops: bool = False

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def build_graph(edge_list, n: int) -> Graph:
    """Build a :class:`Graph` from raw index pairs.

    Self-loops are dropped, duplicates and reversed duplicates collapse to
    one undirected edge, and the edge order is canonical (i < j,
    lexicographic), so identical inputs always produce identical graphs.

    Raises
    ------
    ValueError
        If any index falls outside [0, n).
    """
    if n < 0:
        raise ValueError(f"node count must be nonnegative, got {n}")
    pairs = np.asarray(list(edge_list), dtype=np.int64).reshape(-1, 2)
    if pairs.size:
        if pairs.min() < 0 or pairs.max() >= n:
            bad = pairs[(pairs < 0).any(axis=1) | (pairs >= n).any(axis=1)][0]
            raise ValueError(f"edge {tuple(bad)} out of range for n={n}")
        keep = pairs[:, 0] != pairs[:, 1]
        pairs = pairs[keep]
    if pairs.size:
        lo = pairs.min(axis=1)
        hi = pairs.max(axis=1)
        canon = np.unique(np.stack([lo, hi], axis=1), axis=0)
    else:
        canon = np.empty((0, 2), dtype=np.int64)
    canon.setflags(write=False)

    if canon.size:
        rows = np.concatenate([canon[:, 0], canon[:, 1]])
        cols = np.concatenate([canon[:, 1], canon[:, 0]])
        data = np.ones(rows.shape[0], dtype=np.float64)
        adj = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
    else:
        adj = sp.csr_matrix((n, n), dtype=np.float64)
    adj.sum_duplicates()
    return Graph(n=n, edges=canon, adj=adj)


def normalized_adjacency(g: Graph, add_self_loops: bool = False) -> NormalizedAdjacency:
    """Compute D^{-1/2} A D^{-1/2}, optionally over A + I.

    Degree-0 nodes get all-zero rows and columns; no renormalization is
    applied, which keeps the matrix well-defined on graphs with isolated
    nodes (their random-walk mass stays at the teleport term in PPR).
    """
    a = g.adj
    if add_self_loops:
        a = (a + sp.eye(g.n, format="csr")).tocsr()
    deg = np.asarray(a.sum(axis=1)).ravel()
    inv_sqrt = np.zeros_like(deg)
    nz = deg > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
    d_inv = sp.diags(inv_sqrt)
    mat = (d_inv @ a @ d_inv).tocsr()
    return NormalizedAdjacency(matrix=mat, self_loops=add_self_loops)


def spmm(a: NormalizedAdjacency, x: np.ndarray) -> np.ndarray:
    """Sparse-dense product ``a.matrix @ x``.

    Raises
    ------
    ValueError
        If the inner dimensions disagree.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if a.matrix.shape[1] != x.shape[0]:
        raise ValueError(
            f"dimension mismatch: adjacency is {a.matrix.shape}, input has {x.shape[0]} rows"
        )
    return a.matrix @ x
