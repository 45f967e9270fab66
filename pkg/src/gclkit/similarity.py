"""Pairwise node similarity: PPR-based structural, feature cosine, and fusion.

Structural similarity comes from the personalized PageRank matrix
P = alpha (I - (1-alpha) A_hat)^{-1}, either entrywise or as cosine between
PPR rows.  Feature similarity is plain cosine over input features.  The two
are fused as ``beta * sim_f * gamma + (1-beta) * sim_g`` where gamma puts
both on the same scale.

Similarities are computed once on the unperturbed graph and features; view
augmentation never changes them.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import ConfigError
from .graph import NormalizedAdjacency

STRUCTURAL_MODES = ("ppr-entry", "ppr-row-cosine")
GAMMA_MODES = ("auto", "fixed")

CACHE_MAGIC = b"GCLS"
CACHE_VERSION = 1


@dataclass(frozen=True)
class SimilarityConfig:
    """Knobs for the similarity computation.

    alpha_ppr : teleport probability in (0, 1).
    ppr_iters : number of iterations K for the PPR approximation (>= 0).
    structural_mode : "ppr-entry" uses P_hat[i, j] directly,
        "ppr-row-cosine" uses cos(P_hat[i, :], P_hat[j, :]).
    beta : balance in [0, 1]; 0 = structural only, 1 = feature only.
    gamma_mode : "auto" sets gamma = sum(sim_g) / sum(sim_f) over all
        off-diagonal ordered pairs; "fixed" uses ``gamma_value``.
    clamp_nonnegative : zero out negative fused entries so the positive
        transform exp(s/tau_p) - 1 stays nonnegative.
    """

    alpha_ppr: float = 0.15
    ppr_iters: int = 100
    structural_mode: str = "ppr-entry"
    beta: float = 0.5
    gamma_mode: str = "auto"
    gamma_value: float = 1.0
    clamp_nonnegative: bool = True

    def __post_init__(self):
        if not 0.0 < self.alpha_ppr < 1.0:
            raise ConfigError(f"alpha_ppr must be in (0, 1), got {self.alpha_ppr}")
        if self.ppr_iters < 0:
            raise ConfigError(f"ppr_iters must be >= 0, got {self.ppr_iters}")
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigError(f"beta must be in [0, 1], got {self.beta}")
        if self.structural_mode not in STRUCTURAL_MODES:
            raise ConfigError(f"structural_mode must be one of {STRUCTURAL_MODES}")
        if self.gamma_mode not in GAMMA_MODES:
            raise ConfigError(f"gamma_mode must be one of {GAMMA_MODES}")


@dataclass(frozen=True)
class SimilarityMatrix:
    """Dense n x n pairwise scores with a provenance tag."""

    values: np.ndarray = field(repr=False)
    kind: str = "fused"  # structural | feature | fused

    @property
    def n(self) -> int:
        return self.values.shape[0]


def ppr_exact(a: NormalizedAdjacency, alpha: float) -> np.ndarray:
    """Personalized PageRank by direct linear solve.

    Returns alpha (I - (1-alpha) A_hat)^{-1}.  The system is always
    nonsingular for alpha in (0, 1) because the spectral radius of
    (1-alpha) A_hat is below 1.  Oracle-scale only (dense solve).
    """
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must be in (0, 1), got {alpha}")
    n = a.n
    system = np.eye(n) - (1.0 - alpha) * a.dense()
    return alpha * scipy.linalg.solve(system, np.eye(n))


def ppr_iterative(a: NormalizedAdjacency, alpha: float, K: int) -> np.ndarray:
    """Truncated PPR: (1-alpha)^K A_hat^K + sum_{k<K} alpha (1-alpha)^k A_hat^k.

    Computed by the Horner-style recurrence P_{k+1} = (1-alpha) A_hat P_k
    + alpha I from P_0 = I, which is algebraically identical to the sum but
    needs K sparse products instead of K dense matrix powers.  Converges to
    :func:`ppr_exact` geometrically in K.
    """
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must be in (0, 1), got {alpha}")
    if K < 0:
        raise ConfigError(f"K must be >= 0, got {K}")
    n = a.n
    p = np.eye(n)
    alpha_eye = alpha * np.eye(n)
    for _ in range(K):
        p = (1.0 - alpha) * (a.matrix @ p) + alpha_eye
    return p


def structural_similarity(p: np.ndarray, mode: str = "ppr-entry") -> SimilarityMatrix:
    """Turn a PPR matrix into pairwise structural similarity.

    "ppr-entry" returns the matrix itself; "ppr-row-cosine" returns the
    cosine between PPR rows (diagonal included), a more global measure.
    Pairs involving an all-zero row get similarity 0, never NaN.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ValueError(f"PPR matrix must be square, got shape {p.shape}")
    if mode == "ppr-entry":
        return SimilarityMatrix(values=p.copy(), kind="structural")
    if mode == "ppr-row-cosine":
        return SimilarityMatrix(values=_row_cosine(p), kind="structural")
    raise ConfigError(f"unknown structural mode {mode!r}")


def feature_similarity(x: np.ndarray) -> SimilarityMatrix:
    """Pairwise cosine similarity of feature rows; zero rows score 0."""
    x = np.asarray(x, dtype=np.float64)
    return SimilarityMatrix(values=_row_cosine(x), kind="feature")


def _row_cosine(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    unit = x / safe[:, None]
    sims = unit @ unit.T
    zero = norms == 0
    sims[zero, :] = 0.0
    sims[:, zero] = 0.0
    return np.clip(sims, -1.0, 1.0)


def auto_gamma(sim_g: np.ndarray, sim_f: np.ndarray) -> float:
    """Scale factor sum(sim_g) / sum(sim_f) over off-diagonal ordered pairs.

    The diagonal is excluded because self-similarity is 1 by construction
    on the feature side and would dominate the ratio.
    """
    n = sim_g.shape[0]
    off = ~np.eye(n, dtype=bool)
    denom = float(sim_f[off].sum())
    if denom == 0.0:
        raise ConfigError(
            "feature similarity sums to zero over off-diagonal pairs; "
            "use gamma_mode='fixed' with an explicit gamma_value"
        )
    return float(sim_g[off].sum()) / denom


def fuse(sim_g: SimilarityMatrix, sim_f: SimilarityMatrix, cfg: SimilarityConfig) -> SimilarityMatrix:
    """Combine structural and feature similarity.

    fused = beta * sim_f * gamma + (1 - beta) * sim_g, with gamma either
    fixed or chosen so both terms are on the same scale.  Negative fused
    entries are clamped to 0 when ``cfg.clamp_nonnegative`` so downstream
    positive weights stay nonnegative.
    """
    g = sim_g.values
    f = sim_f.values
    if g.shape != f.shape:
        raise ValueError(f"shape mismatch: {g.shape} vs {f.shape}")
    if cfg.gamma_mode == "auto":
        gamma = auto_gamma(g, f)
    else:
        gamma = cfg.gamma_value
    fused = cfg.beta * f * gamma + (1.0 - cfg.beta) * g
    if cfg.clamp_nonnegative:
        fused = np.maximum(fused, 0.0)
    return SimilarityMatrix(values=fused, kind="fused")


def compute_similarity(a_hat: NormalizedAdjacency, x: np.ndarray, cfg: SimilarityConfig) -> SimilarityMatrix:
    """Full pipeline: PPR -> structural, features -> cosine, then fusion.

    ``a_hat`` should be the normalization of the original graph without
    self-loops.  beta = 0 or 1 short-circuits to a single source but keeps
    the clamp behavior identical.
    """
    p_hat = ppr_iterative(a_hat, cfg.alpha_ppr, cfg.ppr_iters)
    sim_g = structural_similarity(p_hat, cfg.structural_mode)
    sim_f = feature_similarity(x)
    return fuse(sim_g, sim_f, cfg)


# ---------------------------------------------------------------------------
# Binary cache: magic | version | n | kind | config hash | row-major float64
# ---------------------------------------------------------------------------

def similarity_config_hash(cfg: SimilarityConfig, n: int) -> str:
    payload = (
        f"{cfg.alpha_ppr!r}|{cfg.ppr_iters}|{cfg.structural_mode}|{cfg.beta!r}|"
        f"{cfg.gamma_mode}|{cfg.gamma_value!r}|{cfg.clamp_nonnegative}|{n}"
    )
    return hashlib.sha256(payload.encode()).hexdigest()


def save_similarity(path, sim: SimilarityMatrix, config_hash: str) -> None:
    kind = sim.kind.encode()
    digest = config_hash.encode()
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<IQ", CACHE_VERSION, sim.n))
        fh.write(struct.pack("<I", len(kind)))
        fh.write(kind)
        fh.write(struct.pack("<I", len(digest)))
        fh.write(digest)
        fh.write(np.ascontiguousarray(sim.values, dtype=np.float64).tobytes())


def load_similarity(path, config_hash: str) -> SimilarityMatrix | None:
    """Load a cached similarity matrix; returns None when the cache was
    written under a different configuration (caller should recompute)."""
    with open(path, "rb") as fh:
        if fh.read(4) != CACHE_MAGIC:
            raise ValueError(f"{path}: not a similarity cache file")
        version, n = struct.unpack("<IQ", fh.read(12))
        if version != CACHE_VERSION:
            return None
        (kind_len,) = struct.unpack("<I", fh.read(4))
        kind = fh.read(kind_len).decode()
        (digest_len,) = struct.unpack("<I", fh.read(4))
        digest = fh.read(digest_len).decode()
        if digest != config_hash:
            return None
        values = np.frombuffer(fh.read(8 * n * n), dtype=np.float64).reshape(n, n).copy()
    return SimilarityMatrix(values=values, kind=kind)
