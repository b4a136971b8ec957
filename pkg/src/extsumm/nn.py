"""Neural sentence scorer built from scratch: GRU cells, bidirectional layers,
a dense+softmax head, and exact reverse-mode gradients.

Cell equations (update gate z, reset gate r, candidate state c):

    z = sigmoid(W_z x + U_z h_prev + b_z)
    r = sigmoid(W_r x + U_r h_prev + b_r)
    c = tanh(W_c x + U_c (r * h_prev) + b_c)
    h = (1 - z) * h_prev + z * c

Three architectures share this machinery. "st" runs one bidirectional layer
into the summarization head. "mt_shared" adds a rhetorical head on the same
layer. "mt_hierarchical" stacks a second bidirectional layer that only the
summarization head sees, so rhetorical gradients never touch it.

All math is float64. Dropout is applied to head inputs only, with inverted
scaling and seeded masks, so a fixed seed reproduces a training run bit for
bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .corpus import Document
from .validation import ValidationError

ARCHITECTURES = ("st", "mt_shared", "mt_hierarchical")
TASKS = ("summarization", "rhetorical")

CHECKPOINT_MAGIC = "extsumm-checkpoint"
CHECKPOINT_VERSION = 1

_GATES = ("update", "reset", "candidate")


def _sigmoid(x):
    # tanh form avoids exp overflow for large negative inputs
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass
class GruDirectionParams:
    """Weights for one scan direction: per gate, an input matrix (H, d_in),
    a recurrent matrix (H, H) and a bias (H,)."""

    w_update: np.ndarray
    u_update: np.ndarray
    b_update: np.ndarray
    w_reset: np.ndarray
    u_reset: np.ndarray
    b_reset: np.ndarray
    w_candidate: np.ndarray
    u_candidate: np.ndarray
    b_candidate: np.ndarray

    def blocks(self):
        for gate in _GATES:
            yield f"w_{gate}", getattr(self, f"w_{gate}")
            yield f"u_{gate}", getattr(self, f"u_{gate}")
            yield f"b_{gate}", getattr(self, f"b_{gate}")


@dataclass
class GruLayerParams:
    forward: GruDirectionParams
    backward: GruDirectionParams
    hidden_size: int
    input_dim: int

    def blocks(self):
        for name, arr in self.forward.blocks():
            yield f"fwd.{name}", arr
        for name, arr in self.backward.blocks():
            yield f"bwd.{name}", arr


@dataclass
class HeadParams:
    weight: np.ndarray  # (2, d_head)
    bias: np.ndarray  # (2,)

    def blocks(self):
        yield "weight", self.weight
        yield "bias", self.bias


@dataclass
class ModelParams:
    architecture: str
    shared_gru: GruLayerParams
    summ_head: HeadParams
    upper_gru: GruLayerParams | None = None
    rhet_head: HeadParams | None = None
    dropout: dict = field(default_factory=lambda: {"summarization": 0.0, "rhetorical": 0.0})

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise ValidationError(f"unknown architecture {self.architecture!r}")
        if self.architecture == "mt_hierarchical" and self.upper_gru is None:
            raise ValidationError("mt_hierarchical requires an upper recurrent layer")
        if self.architecture != "mt_hierarchical" and self.upper_gru is not None:
            raise ValidationError("only mt_hierarchical takes an upper recurrent layer")
        if self.architecture == "st" and self.rhet_head is not None:
            raise ValidationError("st has no rhetorical head")
        if self.architecture != "st" and self.rhet_head is None:
            raise ValidationError(f"{self.architecture} requires a rhetorical head")

    def blocks(self):
        """All trainable tensors in the fixed checkpoint/optimizer order."""
        for name, arr in self.shared_gru.blocks():
            yield f"shared.{name}", arr
        if self.upper_gru is not None:
            for name, arr in self.upper_gru.blocks():
                yield f"upper.{name}", arr
        for name, arr in self.summ_head.blocks():
            yield f"summ_head.{name}", arr
        if self.rhet_head is not None:
            for name, arr in self.rhet_head.blocks():
                yield f"rhet_head.{name}", arr

    def block_dict(self) -> dict:
        return dict(self.blocks())

    def zero_grads(self) -> dict:
        return {name: np.zeros_like(arr) for name, arr in self.blocks()}

    def input_dim(self) -> int:
        return self.shared_gru.input_dim


# ---------------------------------------------------------------------------
# forward
# ---------------------------------------------------------------------------


def gru_cell(x, h_prev, p: GruDirectionParams) -> np.ndarray:
    """One recurrence step; returns the new hidden state."""
    x = np.asarray(x, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    if x.shape[0] != p.w_update.shape[1] or h_prev.shape[0] != p.u_update.shape[0]:
        raise ValidationError(
            f"gru_cell shape mismatch: x {x.shape}, h_prev {h_prev.shape}, "
            f"W {p.w_update.shape}"
        )
    z = _sigmoid(p.w_update @ x + p.u_update @ h_prev + p.b_update)
    r = _sigmoid(p.w_reset @ x + p.u_reset @ h_prev + p.b_reset)
    c = np.tanh(p.w_candidate @ x + p.u_candidate @ (r * h_prev) + p.b_candidate)
    return (1.0 - z) * h_prev + z * c


@dataclass
class _DirectionCache:
    xs: np.ndarray  # (n, d_in) in processing order
    hs: np.ndarray  # (n + 1, H); hs[0] is the zero initial state
    zs: np.ndarray
    rs: np.ndarray
    cs: np.ndarray


def _direction_forward(xs: np.ndarray, p: GruDirectionParams) -> _DirectionCache:
    n = xs.shape[0]
    hidden = p.u_update.shape[0]
    hs = np.zeros((n + 1, hidden))
    zs = np.zeros((n, hidden))
    rs = np.zeros((n, hidden))
    cs = np.zeros((n, hidden))
    # input contributions do not depend on the recurrence; batch them
    wx_z = xs @ p.w_update.T + p.b_update
    wx_r = xs @ p.w_reset.T + p.b_reset
    wx_c = xs @ p.w_candidate.T + p.b_candidate
    for t in range(n):
        h_prev = hs[t]
        z = _sigmoid(wx_z[t] + p.u_update @ h_prev)
        r = _sigmoid(wx_r[t] + p.u_reset @ h_prev)
        c = np.tanh(wx_c[t] + p.u_candidate @ (r * h_prev))
        hs[t + 1] = (1.0 - z) * h_prev + z * c
        zs[t], rs[t], cs[t] = z, r, c
    return _DirectionCache(xs=xs, hs=hs, zs=zs, rs=rs, cs=cs)


def _direction_backward(cache: _DirectionCache, p: GruDirectionParams, dh_out: np.ndarray):
    """BPTT for one direction. dh_out[t] is the loss gradient at output h_t."""
    n, hidden = dh_out.shape
    da_z = np.zeros((n, hidden))
    da_r = np.zeros((n, hidden))
    da_c = np.zeros((n, hidden))
    dh_next = np.zeros(hidden)
    for t in range(n - 1, -1, -1):
        dh = dh_out[t] + dh_next
        h_prev = cache.hs[t]
        z, r, c = cache.zs[t], cache.rs[t], cache.cs[t]
        dz = dh * (c - h_prev)
        dc = dh * z
        dh_prev = dh * (1.0 - z)
        ac = dc * (1.0 - c * c)
        drh = p.u_candidate.T @ ac
        dr = drh * h_prev
        dh_prev = dh_prev + drh * r
        az = dz * z * (1.0 - z)
        ar = dr * r * (1.0 - r)
        dh_prev = dh_prev + p.u_update.T @ az + p.u_reset.T @ ar
        da_z[t], da_r[t], da_c[t] = az, ar, ac
        dh_next = dh_prev
    h_prevs = cache.hs[:-1]
    grads = {
        "w_update": da_z.T @ cache.xs,
        "u_update": da_z.T @ h_prevs,
        "b_update": da_z.sum(axis=0),
        "w_reset": da_r.T @ cache.xs,
        "u_reset": da_r.T @ h_prevs,
        "b_reset": da_r.sum(axis=0),
        "w_candidate": da_c.T @ cache.xs,
        "u_candidate": da_c.T @ (cache.rs * h_prevs),
        "b_candidate": da_c.sum(axis=0),
    }
    dxs = da_z @ p.w_update + da_r @ p.w_reset + da_c @ p.w_candidate
    return grads, dxs


@dataclass
class _BiGruCache:
    fwd: _DirectionCache
    bwd: _DirectionCache
    output: np.ndarray  # (n, 2H)


def _bigru_forward_cached(xs: np.ndarray, p: GruLayerParams) -> _BiGruCache:
    n = xs.shape[0]
    fwd = _direction_forward(xs, p.forward)
    bwd = _direction_forward(xs[::-1], p.backward)
    # position t pairs the forward state after x_0..x_t with the backward
    # state after x_{n-1}..x_t
    out = np.concatenate([fwd.hs[1:], bwd.hs[1:][::-1]], axis=1)
    assert out.shape == (n, 2 * p.hidden_size)
    return _BiGruCache(fwd=fwd, bwd=bwd, output=out)


def bigru_forward(seq, p: GruLayerParams) -> np.ndarray:
    """Run both directions over a sequence; output width is exactly 2H."""
    xs = np.asarray(seq, dtype=np.float64)
    if xs.ndim != 2 or xs.shape[0] == 0:
        raise ValidationError("bigru_forward requires a nonempty (n, d_in) sequence")
    return _bigru_forward_cached(xs, p).output


def _bigru_backward(cache: _BiGruCache, p: GruLayerParams, dout: np.ndarray):
    hidden = p.hidden_size
    fwd_grads, dxs_f = _direction_backward(cache.fwd, p.forward, dout[:, :hidden])
    bwd_grads, dxs_b = _direction_backward(cache.bwd, p.backward, dout[:, hidden:][::-1])
    dxs = dxs_f + dxs_b[::-1]
    grads = {f"fwd.{k}": v for k, v in fwd_grads.items()}
    grads.update({f"bwd.{k}": v for k, v in bwd_grads.items()})
    return grads, dxs


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    return expd / expd.sum(axis=1, keepdims=True)


@dataclass
class _HeadCache:
    features: np.ndarray  # post-dropout features actually fed to the head
    mask: np.ndarray | None
    probs: np.ndarray


def _head_forward_cached(features, hp: HeadParams, drop, training, rng) -> _HeadCache:
    feats = np.asarray(features, dtype=np.float64)
    if feats.shape[1] != hp.weight.shape[1]:
        raise ValidationError(
            f"head expects feature dim {hp.weight.shape[1]}, got {feats.shape[1]}"
        )
    mask = None
    if training and drop > 0.0:
        if not 0.0 <= drop < 1.0:
            raise ValidationError(f"dropout rate must lie in [0, 1), got {drop}")
        if rng is None:
            raise ValidationError("training-mode dropout requires a seeded rng")
        mask = (rng.random(feats.shape) >= drop) / (1.0 - drop)
        feats = feats * mask
    logits = feats @ hp.weight.T + hp.bias
    probs = _softmax_rows(logits)
    return _HeadCache(features=feats, mask=mask, probs=probs)


def head_forward(features, hp: HeadParams, drop: float = 0.0, training: bool = False, rng=None):
    """Classification head: optional dropout, dense layer, stable softmax.

    Returns (positive-class scores, full probability rows).
    """
    cache = _head_forward_cached(features, hp, drop, training, rng)
    return cache.probs[:, 1].copy(), cache.probs


def _head_backward(cache: _HeadCache, hp: HeadParams, dlogits: np.ndarray):
    grads = {
        "weight": dlogits.T @ cache.features,
        "bias": dlogits.sum(axis=0),
    }
    dfeats = dlogits @ hp.weight
    if cache.mask is not None:
        dfeats = dfeats * cache.mask
    return grads, dfeats


@dataclass
class ForwardState:
    """Everything model_backward needs from the matching forward pass."""

    task: str
    shared: _BiGruCache
    head: _HeadCache
    upper: _BiGruCache | None = None

    @property
    def probs(self) -> np.ndarray:
        return self.head.probs

    @property
    def scores(self) -> np.ndarray:
        return self.head.probs[:, 1]


def _as_input_matrix(doc) -> np.ndarray:
    if isinstance(doc, Document):
        return doc.embedding_matrix()
    xs = np.asarray(doc, dtype=np.float64)
    if xs.ndim != 2:
        raise ValidationError("model input must be a Document or an (n, d) matrix")
    return xs


def _check_task(m: ModelParams, task: str) -> None:
    if task not in TASKS:
        raise ValidationError(f"unknown task {task!r}")
    if task == "rhetorical" and m.architecture == "st":
        raise ValidationError("st models only score the summarization task")


def model_forward(doc, m: ModelParams, task: str = "summarization", training: bool = False, rng=None, return_state: bool = False):
    """Score a document's sentences under the given task.

    Returns the positive-class score vector; with ``return_state`` also the
    cached activations required by model_backward.
    """
    _check_task(m, task)
    xs = _as_input_matrix(doc)
    shared = _bigru_forward_cached(xs, m.shared_gru)
    upper = None
    if task == "summarization":
        head_params = m.summ_head
        feats = shared.output
        if m.architecture == "mt_hierarchical":
            upper = _bigru_forward_cached(shared.output, m.upper_gru)
            feats = upper.output
        drop = m.dropout.get("summarization", 0.0)
    else:
        head_params = m.rhet_head
        feats = shared.output
        drop = m.dropout.get("rhetorical", 0.0)
    head = _head_forward_cached(feats, head_params, drop, training, rng)
    state = ForwardState(task=task, shared=shared, head=head, upper=upper)
    if return_state:
        return state.scores.copy(), state
    return state.scores.copy()


def model_backward(doc, m: ModelParams, task: str, loss_grad, state: ForwardState | None = None) -> dict:
    """Exact gradients of the scalar loss w.r.t. every parameter block.

    ``loss_grad`` is the (n, 2) gradient of the loss w.r.t. each position's
    pre-softmax logits. Parameters unreachable from the task's output get
    zero gradient. Requires the ForwardState of a matching forward pass so
    training-mode dropout masks are replayed exactly.
    """
    _check_task(m, task)
    if state is None:
        raise ValidationError("model_backward requires the cached forward state")
    if state.task != task:
        raise ValidationError(f"cached state is for task {state.task!r}, not {task!r}")
    dlogits = np.asarray(loss_grad, dtype=np.float64)
    if dlogits.shape != state.head.probs.shape:
        raise ValidationError(
            f"loss_grad has shape {dlogits.shape}, expected {state.head.probs.shape}"
        )

    grads = m.zero_grads()
    if task == "summarization":
        head_grads, dfeats = _head_backward(state.head, m.summ_head, dlogits)
        for k, v in head_grads.items():
            grads[f"summ_head.{k}"] = v
        if m.architecture == "mt_hierarchical":
            upper_grads, dfeats = _bigru_backward(state.upper, m.upper_gru, dfeats)
            for k, v in upper_grads.items():
                grads[f"upper.{k}"] = v
    else:
        head_grads, dfeats = _head_backward(state.head, m.rhet_head, dlogits)
        for k, v in head_grads.items():
            grads[f"rhet_head.{k}"] = v
    shared_grads, _ = _bigru_backward(state.shared, m.shared_gru, dfeats)
    for k, v in shared_grads.items():
        grads[f"shared.{k}"] = v
    return grads


# ---------------------------------------------------------------------------
# initialization and checkpoints
# ---------------------------------------------------------------------------


def _glorot(rng, rows: int, cols: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


def _init_direction(rng, d_in: int, hidden: int) -> GruDirectionParams:
    kwargs = {}
    for gate in _GATES:
        kwargs[f"w_{gate}"] = _glorot(rng, hidden, d_in)
        kwargs[f"u_{gate}"] = _glorot(rng, hidden, hidden)
        kwargs[f"b_{gate}"] = np.zeros(hidden)
    return GruDirectionParams(**kwargs)


def _init_layer(rng, d_in: int, hidden: int) -> GruLayerParams:
    return GruLayerParams(
        forward=_init_direction(rng, d_in, hidden),
        backward=_init_direction(rng, d_in, hidden),
        hidden_size=hidden,
        input_dim=d_in,
    )


def _init_head(rng, d_head: int) -> HeadParams:
    return HeadParams(weight=_glorot(rng, 2, d_head), bias=np.zeros(2))


def init_params(
    arch: str,
    d_in: int,
    hidden: int,
    seed: int,
    upper_hidden: int | None = None,
    dropout: dict | None = None,
) -> ModelParams:
    """Seeded Glorot-uniform weights (bound sqrt(6 / (fan_in + fan_out)) per
    matrix), zero biases. The generation order is fixed, so a seed pins every
    tensor."""
    if arch not in ARCHITECTURES:
        raise ValidationError(f"unknown architecture {arch!r}")
    if d_in < 1 or hidden < 1:
        raise ValidationError("dimensions must be positive")
    rng = np.random.default_rng(seed)
    shared = _init_layer(rng, d_in, hidden)
    upper = None
    summ_feat_dim = 2 * hidden
    if arch == "mt_hierarchical":
        upper_hidden = upper_hidden or hidden
        upper = _init_layer(rng, 2 * hidden, upper_hidden)
        summ_feat_dim = 2 * upper_hidden
    summ_head = _init_head(rng, summ_feat_dim)
    rhet_head = _init_head(rng, 2 * hidden) if arch != "st" else None
    drop = {"summarization": 0.0, "rhetorical": 0.0}
    if dropout:
        drop.update(dropout)
    return ModelParams(
        architecture=arch,
        shared_gru=shared,
        upper_gru=upper,
        summ_head=summ_head,
        rhet_head=rhet_head,
        dropout=drop,
    )


def save_checkpoint(m: ModelParams, path, seed=None, train_config=None) -> None:
    """JSON header line plus little-endian float64 blocks in blocks() order."""
    blocks = list(m.blocks())
    header = {
        "format": CHECKPOINT_MAGIC,
        "version": CHECKPOINT_VERSION,
        "architecture": m.architecture,
        "input_dim": m.shared_gru.input_dim,
        "hidden_size": m.shared_gru.hidden_size,
        "upper_hidden_size": m.upper_gru.hidden_size if m.upper_gru else None,
        "dropout": m.dropout,
        "seed": seed,
        "train_config": train_config,
        "blocks": [[name, list(arr.shape)] for name, arr in blocks],
    }
    with open(path, "wb") as fh:
        fh.write((json.dumps(header) + "\n").encode("utf-8"))
        for _, arr in blocks:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path):
    """Inverse of save_checkpoint; returns (ModelParams, header dict)."""
    with open(path, "rb") as fh:
        header_line = fh.readline()
        payload = fh.read()
    header = json.loads(header_line.decode("utf-8"))
    if header.get("format") != CHECKPOINT_MAGIC or header.get("version") != CHECKPOINT_VERSION:
        raise ValidationError(f"{path} is not a supported checkpoint")
    arrays = {}
    offset = 0
    for name, shape in header["blocks"]:
        count = int(np.prod(shape)) if shape else 1
        arrays[name] = np.frombuffer(
            payload, dtype="<f8", count=count, offset=offset
        ).reshape(shape).copy()
        offset += count * 8
    if offset != len(payload):
        raise ValidationError(f"{path}: trailing bytes in checkpoint payload")

    def direction(prefix: str) -> GruDirectionParams:
        kwargs = {}
        for gate in _GATES:
            for kind in ("w", "u", "b"):
                key = f"{kind}_{gate}"
                kwargs[key] = arrays[f"{prefix}.{key}"]
        return GruDirectionParams(**kwargs)

    def layer(prefix: str, d_in: int, hidden: int) -> GruLayerParams:
        return GruLayerParams(
            forward=direction(f"{prefix}.fwd"),
            backward=direction(f"{prefix}.bwd"),
            hidden_size=hidden,
            input_dim=d_in,
        )

    arch = header["architecture"]
    shared = layer("shared", header["input_dim"], header["hidden_size"])
    upper = None
    if arch == "mt_hierarchical":
        upper = layer("upper", 2 * header["hidden_size"], header["upper_hidden_size"])
    summ_head = HeadParams(weight=arrays["summ_head.weight"], bias=arrays["summ_head.bias"])
    rhet_head = None
    if arch != "st":
        rhet_head = HeadParams(weight=arrays["rhet_head.weight"], bias=arrays["rhet_head.bias"])
    model = ModelParams(
        architecture=arch,
        shared_gru=shared,
        upper_gru=upper,
        summ_head=summ_head,
        rhet_head=rhet_head,
        dropout=header.get("dropout") or {"summarization": 0.0, "rhetorical": 0.0},
    )
    return model, header
