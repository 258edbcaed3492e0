"""From-scratch target models: multinomial LR, ReLU MLP and a two-layer GCN.

All training goes through stacked implementations that fit ``M``
independent models at once (leading axis of every parameter tensor).
Each model owns an RNG seeded from its own seed, so a model's result
does not depend on which other models share its stack.  Weight decay
is an L2 penalty ``wd/2 * ||theta||^2`` added to the loss.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .data import GraphDataset

LR, MLP, GCN = "lr", "mlp", "gcn"

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class TrainingDiverged(ArithmeticError):
    """Loss became non-finite; lowering the learning rate usually helps."""


@dataclass(frozen=True)
class Hyperparameters:
    learning_rate: float = 0.01
    weight_decay: float = 1e-4
    epochs: int = 200
    batch_size: int | None = 64  # None trains full-batch
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be non-negative")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    def with_seed(self, seed: int) -> "Hyperparameters":
        return replace(self, seed=int(seed))


GCN_DEFAULTS = Hyperparameters(learning_rate=0.01, weight_decay=5e-4, epochs=200, batch_size=None)


@dataclass(eq=False)
class GraphInputs:
    """What a GCN needs at inference time: normalised adjacency and features."""

    n_nodes: int
    edges: np.ndarray
    features: np.ndarray
    adj: sp.csr_matrix = field(repr=False, default=None)

    def __post_init__(self):
        if self.adj is None:
            self.adj = normalized_adjacency(self.n_nodes, self.edges)

    @classmethod
    def from_graph(cls, g: GraphDataset) -> "GraphInputs":
        return cls(g.n_nodes, g.edges, g.node_features)


@dataclass(eq=False)
class TrainedModel:
    arch: str
    params: dict[str, np.ndarray]
    n_classes: int
    input_width: int
    hidden: tuple[int, ...] = ()
    hp: Hyperparameters | None = None
    graph: GraphInputs | None = field(default=None, repr=False)
    loss_history: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self.params.values())

    @property
    def kind(self) -> str:
        return "graph" if self.arch == GCN else "tabular"


def param_shapes(arch: str, input_width: int, n_classes: int, hidden: Sequence[int] = ()) -> list[tuple[str, tuple[int, ...]]]:
    """Named parameter shapes in flattening order."""
    if arch == LR:
        hidden = ()
    if arch in (LR, MLP):
        widths = [input_width, *hidden, n_classes]
        shapes = []
        for i in range(len(widths) - 1):
            shapes.append((f"W{i}", (widths[i], widths[i + 1])))
            shapes.append((f"b{i}", (widths[i + 1],)))
        return shapes
    if arch == GCN:
        if len(hidden) != 1:
            raise ValueError("GCN takes exactly one hidden width")
        return [("W0", (input_width, hidden[0])), ("W1", (hidden[0], n_classes))]
    raise ValueError(f"unknown architecture {arch!r}")


def _glorot_init(shapes, rng: np.random.Generator) -> list[np.ndarray]:
    out = []
    for name, shape in shapes:
        if len(shape) == 2:
            limit = math.sqrt(6.0 / (shape[0] + shape[1]))
            out.append(rng.uniform(-limit, limit, size=shape))
        else:
            out.append(np.zeros(shape))
    return out


def _rowmax(z: np.ndarray) -> np.ndarray:
    # numpy reductions over a short trailing axis are slow; fold slices instead
    m = z[..., 0].copy()
    for k in range(1, z.shape[-1]):
        np.maximum(m, z[..., k], out=m)
    return m[..., None]


def _log_softmax(z: np.ndarray) -> np.ndarray:
    z = z - _rowmax(z)
    return z - np.log(np.exp(z) @ np.ones((z.shape[-1], 1)))


def softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - _rowmax(z))
    return e / (e @ np.ones((z.shape[-1], 1)))


# ---------------------------------------------------------------------------
# Dense networks (LR = no hidden layer)
# ---------------------------------------------------------------------------


def dense_forward(params: list[np.ndarray], X: np.ndarray) -> np.ndarray:
    """Logits for stacked params (leading axis M) on X of shape (M, B, w)."""
    h = X
    n_layers = len(params) // 2
    for i in range(n_layers):
        W, b = params[2 * i], params[2 * i + 1]
        z = h @ W + b[:, None, :]
        h = np.maximum(z, 0.0) if i < n_layers - 1 else z
    return h


def dense_loss_grad(params: list[np.ndarray], X: np.ndarray, Y: np.ndarray, wd: float):
    """Mean cross-entropy plus L2 penalty, and its gradient.

    X: (M, B, w); Y: one-hot (M, B, l).  Returns (loss (M,), grads).
    """
    n_layers = len(params) // 2
    B = X.shape[1]
    acts = [X]
    pre = []
    h = X
    for i in range(n_layers):
        z = h @ params[2 * i] + params[2 * i + 1][:, None, :]
        if i < n_layers - 1:
            pre.append(z)
            h = np.maximum(z, 0.0)
            acts.append(h)
        else:
            h = z
    logp = _log_softmax(h)
    loss = -np.einsum("mbl,mbl->m", Y, logp) / B
    penalty = sum((p * p).reshape(p.shape[0], -1).sum(axis=1) for p in params)
    loss = loss + 0.5 * wd * penalty

    grads: list[np.ndarray] = [None] * len(params)
    delta = (np.exp(logp) - Y) / B
    for i in reversed(range(n_layers)):
        a = acts[i]
        grads[2 * i] = a.transpose(0, 2, 1) @ delta + wd * params[2 * i]
        grads[2 * i + 1] = delta.sum(axis=1) + wd * params[2 * i + 1]
        if i > 0:
            delta = (delta @ params[2 * i].transpose(0, 2, 1)) * (pre[i - 1] > 0)
    return loss, grads


class _Adam:
    def __init__(self, params: list[np.ndarray], lr: float):
        self.lr = lr
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - ADAM_BETA1**self.t
        c2 = 1.0 - ADAM_BETA2**self.t
        step = self.lr / c1
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * (g * g)
            p -= step * m / (np.sqrt(v / c2) + ADAM_EPS)


def _check_labels(y: np.ndarray, n_classes: int) -> None:
    if y.size and (y.min() < 0 or y.max() >= n_classes):
        raise ValueError("class ids outside [0, n_classes)")


def train_dense_many(
    Xs: np.ndarray,
    ys: np.ndarray,
    hidden: Sequence[int],
    hp: Hyperparameters,
    seeds: Sequence[int],
    n_classes: int,
    arch: str | None = None,
) -> list[TrainedModel | None]:
    """Train ``M`` dense models in one stack.

    ``Xs`` is (M, n, w) and ``ys`` is (M, n); model ``m`` is initialised
    and shuffled from ``seeds[m]``.  Diverged models come back as None.
    """
    Xs = np.asarray(Xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.int64)
    if Xs.ndim != 3 or ys.shape != Xs.shape[:2]:
        raise ValueError(f"shape mismatch: X {Xs.shape} vs y {ys.shape}")
    M, n, w = Xs.shape
    if len(seeds) != M:
        raise ValueError("need one seed per model")
    if n_classes < 2:
        raise ValueError("need at least two classes")
    _check_labels(ys, n_classes)
    hidden = tuple(int(h) for h in hidden)
    arch = arch or (MLP if hidden else LR)
    shapes = param_shapes(arch, w, n_classes, hidden)
    rngs = [np.random.default_rng(int(s)) for s in seeds]
    inits = [_glorot_init(shapes, r) for r in rngs]
    params = [np.stack([init[j] for init in inits]) for j in range(len(shapes))]
    Y = np.zeros((M, n, n_classes))
    np.put_along_axis(Y, ys[:, :, None], 1.0, axis=2)
    opt = _Adam(params, hp.learning_rate)
    B = n if hp.batch_size is None else min(hp.batch_size, n)
    offsets = (np.arange(M) * n)[:, None]
    X_flat, Y_flat = Xs.reshape(M * n, w), Y.reshape(M * n, n_classes)
    history = np.zeros((M, hp.epochs))
    failed = np.zeros(M, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(hp.epochs):
            if B < n:
                flat_idx = (np.stack([r.permutation(n) for r in rngs]) + offsets).ravel()
                Xp = np.take(X_flat, flat_idx, axis=0).reshape(M, n, w)
                Yp = np.take(Y_flat, flat_idx, axis=0).reshape(M, n, n_classes)
            else:
                Xp, Yp = Xs, Y
            total = np.zeros(M)
            n_batches = 0
            for start in range(0, n, B):
                loss, grads = dense_loss_grad(params, Xp[:, start : start + B], Yp[:, start : start + B], hp.weight_decay)
                opt.step(params, grads)
                total += loss
                n_batches += 1
            history[:, epoch] = total / n_batches
            bad = ~np.isfinite(history[:, epoch])
            if bad.any():
                failed |= bad
                for p in params:
                    p[bad] = 0.0
    out: list[TrainedModel | None] = []
    for m in range(M):
        if failed[m] or not all(np.all(np.isfinite(p[m])) for p in params):
            out.append(None)
            continue
        out.append(
            TrainedModel(
                arch,
                {name: p[m].copy() for (name, _), p in zip(shapes, params)},
                n_classes,
                w,
                hidden if arch == MLP else (),
                hp.with_seed(seeds[m]),
                loss_history=history[m].copy(),
            )
        )
    return out


def _single(models: list[TrainedModel | None]) -> TrainedModel:
    if models[0] is None:
        raise TrainingDiverged("training loss became non-finite")
    return models[0]


def _n_classes(y: np.ndarray, n_classes: int | None) -> int:
    return int(n_classes) if n_classes is not None else int(np.max(y)) + 1


def train_logreg(X, y, hp: Hyperparameters = Hyperparameters(), n_classes: int | None = None) -> TrainedModel:
    """Multinomial logistic regression trained with Adam + L2."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != len(y):
        raise ValueError(f"dimension mismatch: X {X.shape} vs y {y.shape}")
    return _single(train_dense_many(X[None], y[None], (), hp, [hp.seed], _n_classes(y, n_classes)))


def train_mlp(X, y, hidden: int | Sequence[int], hp: Hyperparameters = Hyperparameters(), n_classes: int | None = None) -> TrainedModel:
    """ReLU MLP; ``hidden`` is one width or a sequence of widths."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != len(y):
        raise ValueError(f"dimension mismatch: X {X.shape} vs y {y.shape}")
    widths = (hidden,) if isinstance(hidden, (int, np.integer)) else tuple(hidden)
    return _single(train_dense_many(X[None], y[None], widths, hp, [hp.seed], _n_classes(y, n_classes), arch=MLP))


# ---------------------------------------------------------------------------
# GCN
# ---------------------------------------------------------------------------


def normalized_adjacency(n_nodes: int, edges: np.ndarray) -> sp.csr_matrix:
    """D^-1/2 (A + I) D^-1/2 for an undirected edge list."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    rows = np.concatenate([edges[:, 0], edges[:, 1], np.arange(n_nodes)])
    cols = np.concatenate([edges[:, 1], edges[:, 0], np.arange(n_nodes)])
    A = sp.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n_nodes, n_nodes)).tocsr()
    A.data[:] = 1.0  # collapse duplicate edges
    deg = np.asarray(A.sum(axis=1)).ravel()
    d = 1.0 / np.sqrt(deg)
    return sp.csr_matrix(sp.diags(d) @ A @ sp.diags(d))


def _spmm_stack(adj: sp.csr_matrix, H: np.ndarray) -> np.ndarray:
    """adj @ H[m] for every m, with H of shape (M, N, k)."""
    M, N, k = H.shape
    flat = H.transpose(1, 0, 2).reshape(N, M * k)
    return (adj @ flat).reshape(N, M, k).transpose(1, 0, 2)


def gcn_forward(params: list[np.ndarray], ax: np.ndarray, adj: sp.csr_matrix) -> np.ndarray:
    """Logits (M, N, l); ``ax`` is the precomputed product adj @ X."""
    W0, W1 = params
    H = np.maximum(ax[None] @ W0, 0.0)
    return _spmm_stack(adj, H @ W1)


def gcn_loss_grad(params: list[np.ndarray], ax: np.ndarray, adj: sp.csr_matrix, Y: np.ndarray, weights: np.ndarray, wd: float):
    """Weighted cross-entropy over nodes plus L2 penalty, and its gradient.

    ``weights`` (M, N) is 1/|mask| on supervised nodes, 0 elsewhere.
    """
    W0, W1 = params
    pre = ax[None] @ W0
    H = np.maximum(pre, 0.0)
    logits = _spmm_stack(adj, H @ W1)
    logp = _log_softmax(logits)
    loss = -((Y * logp).sum(axis=2) * weights).sum(axis=1)
    loss = loss + 0.5 * wd * ((W0 * W0).sum(axis=(1, 2)) + (W1 * W1).sum(axis=(1, 2)))
    dlogits = (np.exp(logp) - Y) * weights[:, :, None]
    dHW = _spmm_stack(adj.T.tocsr(), dlogits)
    gW1 = H.transpose(0, 2, 1) @ dHW + wd * W1
    dpre = (dHW @ W1.transpose(0, 2, 1)) * (pre > 0)
    gW0 = ax.T[None] @ dpre + wd * W0
    return loss, [gW0, gW1]


def train_gcn_many(
    g: GraphDataset | GraphInputs,
    labels: np.ndarray,
    masks: Sequence[np.ndarray],
    hidden: int,
    hp: Hyperparameters,
    seeds: Sequence[int],
    n_classes: int,
) -> list[TrainedModel | None]:
    """Train one full-batch GCN per mask on the same graph."""
    gi = g if isinstance(g, GraphInputs) else GraphInputs.from_graph(g)
    labels = np.asarray(labels, dtype=np.int64)
    _check_labels(labels, n_classes)
    M, N = len(masks), gi.n_nodes
    if len(seeds) != M:
        raise ValueError("need one seed per model")
    weights = np.zeros((M, N))
    for m, mask in enumerate(masks):
        mask = np.asarray(mask, dtype=np.int64)
        if mask.size == 0:
            raise ValueError("train_mask must be nonempty")
        np.add.at(weights[m], mask, 1.0)
        weights[m] /= mask.size
    shapes = param_shapes(GCN, gi.features.shape[1], n_classes, (hidden,))
    inits = [_glorot_init(shapes, np.random.default_rng(int(s))) for s in seeds]
    params = [np.stack([init[j] for init in inits]) for j in range(len(shapes))]
    Y = np.zeros((N, n_classes))
    Y[np.arange(N), labels] = 1.0
    Y = np.broadcast_to(Y, (M, N, n_classes))
    ax = np.asarray(gi.adj @ gi.features)
    opt = _Adam(params, hp.learning_rate)
    history = np.zeros((M, hp.epochs))
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(hp.epochs):
            loss, grads = gcn_loss_grad(params, ax, gi.adj, Y, weights, hp.weight_decay)
            opt.step(params, grads)
            history[:, epoch] = loss
    out: list[TrainedModel | None] = []
    for m in range(M):
        if not np.all(np.isfinite(history[m])) or not all(np.all(np.isfinite(p[m])) for p in params):
            out.append(None)
            continue
        out.append(
            TrainedModel(
                GCN,
                {name: p[m].copy() for (name, _), p in zip(shapes, params)},
                n_classes,
                gi.features.shape[1],
                (hidden,),
                hp.with_seed(seeds[m]),
                graph=gi,
                loss_history=history[m].copy(),
            )
        )
    return out


def train_gcn(g: GraphDataset, hidden: int = 16, hp: Hyperparameters = GCN_DEFAULTS, train_mask=None) -> TrainedModel:
    """Two-layer GCN, softmax(Â ReLU(Â X W0) W1), supervised on ``train_mask``."""
    if train_mask is None:
        if not g.masks:
            raise ValueError("train_mask must be given or the graph must carry party masks")
        train_mask = np.concatenate(list(g.masks.values()))
    return _single(train_gcn_many(g, g.node_labels, [train_mask], hidden, hp, [hp.seed], g.n_classes))


# ---------------------------------------------------------------------------
# Inference and parameter vectors
# ---------------------------------------------------------------------------


def _stack_params(models: Sequence[TrainedModel]) -> list[np.ndarray]:
    first = models[0]
    for m in models[1:]:
        if m.arch != first.arch or [p.shape for p in m.params.values()] != [p.shape for p in first.params.values()]:
            raise ValueError("models in a stack must share architecture and shapes")
    return [np.stack([m.params[k] for m in models]) for k in first.params]


def predict_proba_many(models: Sequence[TrainedModel], inputs) -> np.ndarray:
    """Posteriors of several same-shaped models on one query set: (M, k, l)."""
    first = models[0]
    params = _stack_params(models)
    if first.arch == GCN:
        ids = np.asarray(inputs, dtype=np.int64)
        gi = first.graph
        if gi is None:
            raise ValueError("GCN model carries no graph")
        if any(m.graph is not gi for m in models[1:]):
            return np.stack([predict_proba(m, ids) for m in models])
        if ids.size and (ids.min() < 0 or ids.max() >= gi.n_nodes):
            raise ValueError("node id out of range")
        logits = gcn_forward(params, np.asarray(gi.adj @ gi.features), gi.adj)
        return softmax(logits[:, ids])
    X = np.asarray(inputs, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != first.input_width:
        raise ValueError(f"width mismatch: model expects {first.input_width} features, got {X.shape}")
    return softmax(dense_forward(params, np.broadcast_to(X, (len(models), *X.shape))))


def predict_proba(m: TrainedModel, inputs) -> np.ndarray:
    """Posterior matrix: one row per query (feature row or node id)."""
    return predict_proba_many([m], inputs)[0]


def flatten_params(m: TrainedModel) -> np.ndarray:
    return np.concatenate([p.ravel() for p in m.params.values()])


def unflatten_params(template: TrainedModel, vector: np.ndarray) -> TrainedModel:
    vector = np.asarray(vector, dtype=np.float64)
    if vector.size != template.n_params:
        raise ValueError(f"expected {template.n_params} values, got {vector.size}")
    params, i = {}, 0
    for name, p in template.params.items():
        params[name] = vector[i : i + p.size].reshape(p.shape).copy()
        i += p.size
    return replace(template, params=params, loss_history=None)


def loss_and_grad(m: TrainedModel, X, y, weight_decay: float = 0.0, train_mask=None) -> tuple[float, np.ndarray]:
    """Training objective of ``m`` at its current parameters and the flat
    gradient, in :func:`flatten_params` order.  For a GCN ``X`` is ignored
    (the model's graph is used) and ``y`` holds all node labels."""
    params = [p[None].copy() for p in m.params.values()]
    if m.arch == GCN:
        gi = m.graph
        Y = np.zeros((1, gi.n_nodes, m.n_classes))
        Y[0, np.arange(gi.n_nodes), np.asarray(y)] = 1.0
        w = np.zeros((1, gi.n_nodes))
        mask = np.arange(gi.n_nodes) if train_mask is None else np.asarray(train_mask)
        w[0, mask] = 1.0 / len(mask)
        loss, grads = gcn_loss_grad(params, np.asarray(gi.adj @ gi.features), gi.adj, Y, w, weight_decay)
    else:
        X = np.asarray(X, dtype=np.float64)[None]
        Y = np.zeros((1, X.shape[1], m.n_classes))
        Y[0, np.arange(X.shape[1]), np.asarray(y)] = 1.0
        loss, grads = dense_loss_grad(params, X, Y, weight_decay)
    return float(loss[0]), np.concatenate([g[0].ravel() for g in grads])


# ---------------------------------------------------------------------------
# Serialisation
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def dumps_model(m: TrainedModel) -> str:
    out = io.StringIO()
    out.write("format: propleak-model/1\n")
    out.write(f"arch: {m.arch}\n")
    out.write(f"hidden: {','.join(map(str, m.hidden))}\n")
    out.write(f"n_classes: {m.n_classes}\n")
    out.write(f"input_width: {m.input_width}\n")
    if m.hp is not None:
        out.write(f"seed: {m.hp.seed}\n")
        out.write(f"learning_rate: {_fmt(m.hp.learning_rate)}\n")
        out.write(f"weight_decay: {_fmt(m.hp.weight_decay)}\n")
        out.write(f"epochs: {m.hp.epochs}\n")
        out.write(f"batch_size: {'' if m.hp.batch_size is None else m.hp.batch_size}\n")
    for name, p in m.params.items():
        out.write(f"param: {name} {'x'.join(map(str, p.shape))}\n")
    if m.graph is not None:
        out.write(f"graph_nodes: {m.graph.n_nodes}\n")
        out.write(f"graph_edges: {len(m.graph.edges)}\n")
        out.write(f"graph_feature_width: {m.graph.features.shape[1]}\n")
    out.write("---\n")
    for p in m.params.values():
        for v in p.ravel():
            out.write(_fmt(v) + "\n")
    if m.graph is not None:
        for i, j in m.graph.edges:
            out.write(f"{i} {j}\n")
        for row in m.graph.features:
            out.write(" ".join(_fmt(v) for v in row) + "\n")
    return out.getvalue()


def loads_model(text: str) -> TrainedModel:
    head, _, body = text.partition("\n---\n")
    meta: dict[str, str] = {}
    shapes: list[tuple[str, tuple[int, ...]]] = []
    for line in head.splitlines():
        key, _, value = line.partition(":")
        value = value.strip()
        if key == "param":
            name, shape = value.split()
            shapes.append((name, tuple(int(s) for s in shape.split("x"))))
        else:
            meta[key] = value
    if meta.get("format") != "propleak-model/1":
        raise ValueError("not a propleak model file")
    lines = body.splitlines()
    params, i = {}, 0
    for name, shape in shapes:
        size = int(np.prod(shape))
        params[name] = np.array([float(v) for v in lines[i : i + size]]).reshape(shape)
        i += size
    hp = None
    if "seed" in meta:
        hp = Hyperparameters(
            learning_rate=float(meta["learning_rate"]),
            weight_decay=float(meta["weight_decay"]),
            epochs=int(meta["epochs"]),
            batch_size=int(meta["batch_size"]) if meta["batch_size"] else None,
            seed=int(meta["seed"]),
        )
    graph = None
    if "graph_nodes" in meta:
        n_edges = int(meta["graph_edges"])
        edges = np.array([[int(t) for t in l.split()] for l in lines[i : i + n_edges]], dtype=np.int64).reshape(-1, 2)
        i += n_edges
        n_nodes = int(meta["graph_nodes"])
        feats = np.array([[float(t) for t in l.split()] for l in lines[i : i + n_nodes]]).reshape(n_nodes, int(meta["graph_feature_width"]))
        graph = GraphInputs(n_nodes, edges, feats)
    hidden = tuple(int(h) for h in meta["hidden"].split(",") if h)
    return TrainedModel(meta["arch"], params, int(meta["n_classes"]), int(meta["input_width"]), hidden, hp, graph)


def save_model(m: TrainedModel, path: str | Path) -> None:
    Path(path).write_text(dumps_model(m), encoding="utf-8")


def load_model(path: str | Path) -> TrainedModel:
    return loads_model(Path(path).read_text(encoding="utf-8"))
