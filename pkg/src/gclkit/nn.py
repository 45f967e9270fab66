"""Minimal encoder/projector stack with hand-written reverse-mode gradients.

Two architectures, both in float64 so gradients are verifiable to tight
tolerances:

* a 2-layer graph-convolution encoder (propagate, linear, ReLU, propagate,
  linear, row-normalize) followed by a 2-layer ReLU projector, for
  two-view contrastive training;
* a 2-layer MLP trunk with a row-normalized embedding head for the
  contrastive term and a raw linear head for classification.

Row L2-normalization maps zero rows to zero rows (no epsilon appears in
the output); its backward uses the guarded Jacobian, zero on zero rows.
Every forward caches exactly the intermediates its backward needs in a
:class:`ForwardTrace`.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError
from .graph import NormalizedAdjacency

CHECKPOINT_MAGIC = b"GCLP"
CHECKPOINT_VERSION = 1


@dataclass
class ParamStore:
    """Named parameter matrices plus Adam state, shapes fixed at creation."""

    params: dict[str, np.ndarray]
    adam_m: dict[str, np.ndarray] = field(default_factory=dict)
    adam_v: dict[str, np.ndarray] = field(default_factory=dict)
    adam_t: int = 0

    def __post_init__(self):
        for name, w in self.params.items():
            self.adam_m.setdefault(name, np.zeros_like(w))
            self.adam_v.setdefault(name, np.zeros_like(w))

    def copy(self) -> "ParamStore":
        return ParamStore(
            params={k: v.copy() for k, v in self.params.items()},
            adam_m={k: v.copy() for k, v in self.adam_m.items()},
            adam_v={k: v.copy() for k, v in self.adam_v.items()},
            adam_t=self.adam_t,
        )


@dataclass
class ForwardTrace:
    """Cached activations of one forward pass, keyed by tensor name."""

    kind: str  # "gcn" | "mlp"
    tensors: dict[str, np.ndarray] = field(default_factory=dict)
    a_hat: NormalizedAdjacency | None = None


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_gcn_params(d_in: int, d1: int, d2: int, rng: np.random.Generator) -> ParamStore:
    """Encoder weights W1 (d_in x d1), W2 (d1 x d1); projector U1 (d1 x d2),
    U2 (d2 x d2)."""
    return ParamStore(
        params={
            "W1": glorot(rng, d_in, d1),
            "W2": glorot(rng, d1, d1),
            "U1": glorot(rng, d1, d2),
            "U2": glorot(rng, d2, d2),
        }
    )


def init_mlp_params(d_in: int, d1: int, d2: int, n_classes: int, rng: np.random.Generator) -> ParamStore:
    """Trunk weights V1 (d_in x d1), V2 (d1 x d2) and classifier head V3 (d2 x C)."""
    return ParamStore(
        params={
            "V1": glorot(rng, d_in, d1),
            "V2": glorot(rng, d1, d2),
            "V3": glorot(rng, d2, n_classes),
        }
    )


def row_normalize(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise L2 normalization; zero rows stay zero.  Returns (output, norms)."""
    norms = np.linalg.norm(x, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    return x / safe[:, None], norms


def row_normalize_backward(grad_out: np.ndarray, x: np.ndarray, norms: np.ndarray) -> np.ndarray:
    """Backward of row L2-normalization: project out the radial component.

    For a nonzero row, d/dx of x/|x| applied to g is (g - y (y.g)) / |x|
    with y = x/|x|; zero rows get zero gradient (guarded Jacobian).
    """
    safe = np.where(norms > 0, norms, 1.0)
    y = x / safe[:, None]
    radial = (y * grad_out).sum(axis=1, keepdims=True)
    grad = (grad_out - y * radial) / safe[:, None]
    grad[norms == 0] = 0.0
    return grad


def _check_finite(name: str, x: np.ndarray) -> None:
    if not np.all(np.isfinite(x)):
        raise NumericalError(
            f"non-finite values in {name}; training aborted "
            "(try a smaller learning rate or fewer propagation steps)"
        )


def gcn_forward(a_hat: NormalizedAdjacency, x: np.ndarray, params: ParamStore) -> tuple[np.ndarray, ForwardTrace]:
    """Two-layer GCN encoder plus two-layer projector.

    Encoder: H = rownorm( A (relu(A X W1)) W2 ); projector:
    Z = rownorm( relu(H U1) U2 ).  Returns the projector output Z (the
    representation entering contrastive losses) and a trace carrying the
    encoder output under ``tensors["H"]`` for downstream use.
    """
    x = np.asarray(x, dtype=np.float64)
    w = params.params
    s1 = a_hat.matrix @ x
    p1 = s1 @ w["W1"]
    r1 = np.maximum(p1, 0.0)
    s2 = a_hat.matrix @ r1
    p2 = s2 @ w["W2"]
    h, h_norms = row_normalize(p2)
    q1 = h @ w["U1"]
    rq = np.maximum(q1, 0.0)
    q2 = rq @ w["U2"]
    z, z_norms = row_normalize(q2)
    _check_finite("projector output", z)
    trace = ForwardTrace(
        kind="gcn",
        tensors={
            "S1": s1, "P1": p1, "R1": r1, "S2": s2, "P2": p2,
            "H": h, "H_norms": h_norms,
            "Q1": q1, "RQ": rq, "Q2": q2, "Z": z, "Z_norms": z_norms,
        },
        a_hat=a_hat,
    )
    return z, trace


def gcn_backward(trace: ForwardTrace, d_z: np.ndarray, params: ParamStore) -> dict[str, np.ndarray]:
    """Exact gradients of the GCN stack given dLoss/dZ."""
    t = trace.tensors
    w = params.params
    a = trace.a_hat.matrix

    d_q2 = row_normalize_backward(d_z, t["Q2"], t["Z_norms"])
    d_u2 = t["RQ"].T @ d_q2
    d_rq = d_q2 @ w["U2"].T
    d_q1 = d_rq * (t["Q1"] > 0)
    d_u1 = t["H"].T @ d_q1
    d_h = d_q1 @ w["U1"].T

    d_p2 = row_normalize_backward(d_h, t["P2"], t["H_norms"])
    d_w2 = t["S2"].T @ d_p2
    d_s2 = d_p2 @ w["W2"].T
    d_r1 = a @ d_s2  # A is symmetric
    d_p1 = d_r1 * (t["P1"] > 0)
    d_w1 = t["S1"].T @ d_p1
    return {"W1": d_w1, "W2": d_w2, "U1": d_u1, "U2": d_u2}


def mlp_forward(x: np.ndarray, params: ParamStore) -> tuple[np.ndarray, ForwardTrace]:
    """Two-layer MLP with a normalized embedding head and a raw logits head.

    Z = rownorm(relu(X V1) V2) feeds the contrastive term; the trace also
    carries ``tensors["logits"]`` = relu(X V1) V2 V3 for classification.
    """
    x = np.asarray(x, dtype=np.float64)
    w = params.params
    a1 = x @ w["V1"]
    r1 = np.maximum(a1, 0.0)
    e = r1 @ w["V2"]
    z, z_norms = row_normalize(e)
    logits = e @ w["V3"]
    _check_finite("mlp output", logits)
    trace = ForwardTrace(
        kind="mlp",
        tensors={"X": x, "A1": a1, "R1": r1, "E": e, "Z": z, "Z_norms": z_norms, "logits": logits},
    )
    return z, trace


def mlp_backward(
    trace: ForwardTrace,
    d_z: np.ndarray | None,
    params: ParamStore,
    d_logits: np.ndarray | None = None,
) -> dict[str, np.ndarray]:
    """Exact gradients of the MLP given dLoss/dZ and/or dLoss/dlogits."""
    t = trace.tensors
    w = params.params
    d_e = np.zeros_like(t["E"])
    grads = {"V3": np.zeros_like(w["V3"])}
    if d_z is not None:
        d_e += row_normalize_backward(d_z, t["E"], t["Z_norms"])
    if d_logits is not None:
        grads["V3"] = t["E"].T @ d_logits
        d_e += d_logits @ w["V3"].T
    d_r1 = d_e @ w["V2"].T
    grads["V2"] = t["R1"].T @ d_e
    d_a1 = d_r1 * (t["A1"] > 0)
    grads["V1"] = t["X"].T @ d_a1
    return grads


def backward(
    trace: ForwardTrace,
    upstream_grad: np.ndarray | None,
    params: ParamStore,
    d_logits: np.ndarray | None = None,
) -> dict[str, np.ndarray]:
    """Dispatch to the matching backward pass for ``trace``."""
    if trace.kind == "gcn":
        return gcn_backward(trace, upstream_grad, params)
    if trace.kind == "mlp":
        return mlp_backward(trace, upstream_grad, params, d_logits)
    raise ValueError(f"unknown trace kind {trace.kind!r}")


def grad_check(loss_closure, params: ParamStore, epsilon: float = 1e-5, *,
               max_coords: int = 200, rng: np.random.Generator | None = None) -> float:
    """Compare analytic gradients against central finite differences.

    ``loss_closure(params)`` must return ``(value, grads)`` with grads keyed
    like ``params.params``.  Checks a random subset of at least
    ``max_coords`` coordinates (all of them when there are fewer) and
    returns the maximum relative error
    |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
    """
    if rng is None:
        rng = np.random.default_rng(0)
    _, analytic = loss_closure(params)

    coords = []
    for name, w in params.params.items():
        for flat_idx in range(w.size):
            coords.append((name, flat_idx))
    if len(coords) > max_coords:
        chosen = rng.choice(len(coords), size=max_coords, replace=False)
        coords = [coords[i] for i in chosen]

    worst = 0.0
    for name, flat_idx in coords:
        w = params.params[name]
        orig = w.flat[flat_idx]
        w.flat[flat_idx] = orig + epsilon
        up, _ = loss_closure(params)
        w.flat[flat_idx] = orig - epsilon
        down, _ = loss_closure(params)
        w.flat[flat_idx] = orig
        numeric = (up - down) / (2.0 * epsilon)
        ana = analytic[name].flat[flat_idx]
        rel = abs(ana - numeric) / max(1e-8, abs(ana) + abs(numeric))
        worst = max(worst, rel)
    return worst


def adam_step(
    params: ParamStore,
    grads: dict[str, np.ndarray],
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> ParamStore:
    """One Adam update, in place; aborts on non-finite parameters."""
    params.adam_t += 1
    t = params.adam_t
    bias1 = 1.0 - beta1 ** t
    bias2 = 1.0 - beta2 ** t
    for name, w in params.params.items():
        g = grads.get(name)
        if g is None:
            continue
        m = params.adam_m[name]
        v = params.adam_v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        w -= lr * (m / bias1) / (np.sqrt(v / bias2) + eps)
        _check_finite(f"parameter {name}", w)
    return params


# ---------------------------------------------------------------------------
# Checkpoints: magic | version | config hash | per-parameter name/shape/data
# ---------------------------------------------------------------------------

def save_checkpoint(path, params: ParamStore, config_hash: str = "") -> None:
    digest = config_hash.encode()
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", CHECKPOINT_VERSION))
        fh.write(struct.pack("<I", len(digest)))
        fh.write(digest)
        fh.write(struct.pack("<I", len(params.params)))
        for name, w in params.params.items():
            encoded = name.encode()
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<I", w.ndim))
            fh.write(struct.pack(f"<{w.ndim}Q", *w.shape))
            fh.write(np.ascontiguousarray(w, dtype=np.float64).tobytes())


def load_checkpoint(path) -> tuple[ParamStore, str]:
    with open(path, "rb") as fh:
        if fh.read(4) != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        (digest_len,) = struct.unpack("<I", fh.read(4))
        config_hash = fh.read(digest_len).decode()
        (count,) = struct.unpack("<I", fh.read(4))
        tensors: dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<I", fh.read(4))
            name = fh.read(name_len).decode()
            (ndim,) = struct.unpack("<I", fh.read(4))
            shape = struct.unpack(f"<{ndim}Q", fh.read(8 * ndim))
            size = int(np.prod(shape))
            tensors[name] = np.frombuffer(fh.read(8 * size), dtype=np.float64).reshape(shape).copy()
    return ParamStore(params=tensors), config_hash
