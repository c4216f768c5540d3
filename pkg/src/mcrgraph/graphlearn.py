"""Graph learning engine: node features, GCN/GAT layers, task heads, losses,
Adam, deterministic training loops, and checkpoint persistence.

All numerics run on the float64 autodiff tensors from :mod:`.tensor`;
every random draw comes from one seeded generator so equal seeds give
bit-identical checkpoints.
"""

from __future__ import annotations

import enum
import hashlib
import json
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import tensor as T
from .astgraph import KIND_ORDER, AstGraph, to_adjacency
from .errors import ConfigMismatch, DimensionMismatch, EmptyDataset, EmptyMask
from .labeling import TOPIC_ORDER, Commented, LabeledGraph
from .tensor import Tensor
from .textrep import EmbeddingTable, Vocabulary, embed_comment, vocab_from_json, vocab_to_json

log = logging.getLogger(__name__)

N_KINDS = len(KIND_ORDER)
N_TOPICS = len(TOPIC_ORDER)

CHECKPOINT_FORMAT_VERSION = 1


class LayerType(enum.Enum):
    GCN = "GCN"
    GAT = "GAT"


class TaskKind(enum.Enum):
    LIKELIHOOD = "LIKELIHOOD"
    TOPIC = "TOPIC"
    QUALITY = "QUALITY"


# Class index conventions for the two node-classification tasks.
LIKELIHOOD_CLASSES = ("NEGATIVE", "POSITIVE")
TOPIC_CLASSES = tuple(t.value for t in TOPIC_ORDER)


@dataclass(frozen=True)
class ModelConfig:
    task: TaskKind
    layer_type: LayerType = LayerType.GCN
    layer_dims: tuple[int, ...] = (64, 64)
    dropout: float = 0.5
    token_dim: int = 32
    token_hash_size: int = 1024
    feature_seed: int = 0
    heads: int = 4  # GAT only
    leaky_slope: float = 0.2  # GAT only
    comment_dim: int = 32  # QUALITY only: word-embedding width
    context_dim: int = 64  # QUALITY only: width of the frozen graph embedding

    @property
    def in_dim(self) -> int:
        return N_KINDS + self.token_dim

    @property
    def n_classes(self) -> int:
        return {TaskKind.LIKELIHOOD: 2, TaskKind.TOPIC: N_TOPICS, TaskKind.QUALITY: 2}[self.task]

    def validate(self) -> None:
        if not self.layer_dims or any(d < 1 for d in self.layer_dims):
            raise ConfigMismatch(f"layer_dims must be positive, got {self.layer_dims}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigMismatch(f"dropout must be in [0, 1), got {self.dropout}")
        if self.token_dim < 0 or self.token_hash_size < 1:
            raise ConfigMismatch("token feature dims must be positive")
        if self.layer_type is LayerType.GAT:
            if self.heads < 1:
                raise ConfigMismatch("heads must be >= 1")
            for d in self.layer_dims:
                if d % self.heads:
                    raise ConfigMismatch(f"hidden width {d} not divisible by {self.heads} heads")


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.01
    epochs: int = 200
    seed: int = 0
    weight_decay: float = 5e-4
    class_weights: tuple[float, ...] | None = None  # None -> inverse frequency
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def validate(self) -> None:
        if self.lr <= 0 or self.epochs < 1 or self.eps <= 0:
            raise ValueError("lr, epochs, and eps must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("betas must lie in (0, 1)")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")


# --- node features -----------------------------------------------------------------

_FEATURE_TABLES: dict[tuple[int, int, int], np.ndarray] = {}


def _token_table(seed: int, size: int, dim: int) -> np.ndarray:
    key = (seed, size, dim)
    if key not in _FEATURE_TABLES:
        rng = np.random.default_rng(seed)
        _FEATURE_TABLES[key] = rng.standard_normal((size, dim)) / np.sqrt(max(dim, 1))
    return _FEATURE_TABLES[key]


def _token_bucket(token: str, size: int) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % size


def node_features(graph: AstGraph, config: ModelConfig) -> np.ndarray:
    """(n, 20 + token_dim) matrix: one-hot kind plus a fixed hashed token
    embedding (zero rows for token-less nodes)."""
    kind_index = {kind: i for i, kind in enumerate(KIND_ORDER)}
    table = _token_table(config.feature_seed, config.token_hash_size, config.token_dim)
    out = np.zeros((len(graph.nodes), config.in_dim))
    for node in graph.nodes:
        out[node.id, kind_index[node.kind]] = 1.0
        if node.token is not None and config.token_dim:
            out[node.id, N_KINDS:] = table[_token_bucket(node.token, config.token_hash_size)]
    return out


def dense_adjacency(graph: AstGraph) -> np.ndarray:
    """Symmetric 0/1 adjacency over both edge kinds, self-loops included."""
    n = len(graph.nodes)
    adj = np.zeros((n, n))
    for i, j, w in to_adjacency(graph, symmetric=True, self_loops=True):
        adj[i, j] = w
    return adj


# --- layers ----------------------------------------------------------------------

def _glorot(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


@dataclass
class GcnLayer:
    W: Tensor  # in_dim x out_dim
    b: Tensor  # out_dim

    @classmethod
    def init(cls, in_dim: int, out_dim: int, rng: np.random.Generator) -> "GcnLayer":
        return cls(W=Tensor(_glorot(rng, in_dim, out_dim), requires_grad=True),
                   b=Tensor(np.zeros(out_dim), requires_grad=True))

    def parameters(self) -> dict[str, Tensor]:
        return {"W": self.W, "b": self.b}


@dataclass
class GatHead:
    W: Tensor  # in_dim x head_dim
    a_src: Tensor  # head_dim x 1 } together the 2*head_dim attention vector
    a_dst: Tensor  # head_dim x 1 } a.T [Wh_i || Wh_j] = a_src.T Wh_i + a_dst.T Wh_j


@dataclass
class GatLayer:
    heads: list[GatHead]
    b: Tensor  # out_dim (= heads * head_dim)
    leaky_slope: float = 0.2

    @classmethod
    def init(cls, in_dim: int, out_dim: int, n_heads: int, rng: np.random.Generator,
             leaky_slope: float = 0.2) -> "GatLayer":
        if out_dim % n_heads:
            raise DimensionMismatch(f"out_dim {out_dim} not divisible by {n_heads} heads")
        head_dim = out_dim // n_heads
        heads = [
            GatHead(
                W=Tensor(_glorot(rng, in_dim, head_dim), requires_grad=True),
                a_src=Tensor(_glorot(rng, head_dim, 1), requires_grad=True),
                a_dst=Tensor(_glorot(rng, head_dim, 1), requires_grad=True),
            )
            for _ in range(n_heads)
        ]
        return cls(heads=heads, b=Tensor(np.zeros(out_dim), requires_grad=True),
                   leaky_slope=leaky_slope)

    def parameters(self) -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for h, head in enumerate(self.heads):
            out[f"head{h}.W"] = head.W
            out[f"head{h}.a_src"] = head.a_src
            out[f"head{h}.a_dst"] = head.a_dst
        out["b"] = self.b
        return out


def normalized_adjacency(adj: np.ndarray) -> np.ndarray:
    """D^{-1/2} (A + I) D^{-1/2} with the self-loops in place."""
    a_hat = adj.copy()
    np.fill_diagonal(a_hat, 1.0)
    inv_sqrt = 1.0 / np.sqrt(a_hat.sum(axis=1))
    return a_hat * inv_sqrt[:, None] * inv_sqrt[None, :]


def gcn_forward(h: Tensor, adj: np.ndarray, layer: GcnLayer,
                activation: str = "identity") -> Tensor:
    """Symmetric-normalized propagation: sigma(D^{-1/2} A_hat D^{-1/2} H W + b)."""
    n = h.shape[0]
    if adj.shape != (n, n):
        raise DimensionMismatch(f"adjacency {adj.shape} does not match {n} nodes")
    if h.shape[1] != layer.W.shape[0]:
        raise DimensionMismatch(f"features {h.shape} do not match W {layer.W.shape}")
    out = T.matmul(Tensor(normalized_adjacency(adj)), T.matmul(h, layer.W)) + layer.b
    return T.relu(out) if activation == "relu" else out


def _gat_head_attention(z: Tensor, adj: np.ndarray, head: GatHead, slope: float) -> Tensor:
    scores_src = T.matmul(z, head.a_src)  # n x 1
    scores_dst = T.matmul(z, head.a_dst)  # n x 1
    e = T.leaky_relu(scores_src + T.transpose(scores_dst), slope)
    mask = np.zeros_like(adj)
    np.fill_diagonal(mask, 1.0)
    mask = np.maximum(adj, mask)
    # Non-neighbors get a -1e30 additive penalty so softmax ignores them.
    e = e * Tensor(mask) + Tensor((1.0 - mask) * -1e30)
    return T.row_softmax(e)


def gat_forward(h: Tensor, adj: np.ndarray, layer: GatLayer,
                activation: str = "identity") -> Tensor:
    """Multi-head attention aggregation; head outputs concatenated."""
    n = h.shape[0]
    if adj.shape != (n, n):
        raise DimensionMismatch(f"adjacency {adj.shape} does not match {n} nodes")
    parts = []
    for head in layer.heads:
        if h.shape[1] != head.W.shape[0]:
            raise DimensionMismatch(f"features {h.shape} do not match W {head.W.shape}")
        z = T.matmul(h, head.W)
        alpha = _gat_head_attention(z, adj, head, layer.leaky_slope)
        parts.append(T.matmul(alpha, z))
    out = T.concat(parts, axis=1) + layer.b
    return T.relu(out) if activation == "relu" else out


def gat_attention(h: np.ndarray, adj: np.ndarray, layer: GatLayer) -> list[np.ndarray]:
    """Per-head attention coefficient matrices (rows sum to 1), for inspection."""
    ht = Tensor(h)
    out = []
    for head in layer.heads:
        z = T.matmul(ht, head.W)
        out.append(_gat_head_attention(z, adj, head, layer.leaky_slope).values)
    return out


# --- model -----------------------------------------------------------------------

@dataclass
class Model:
    config: ModelConfig
    layers: list  # GcnLayer | GatLayer, empty for QUALITY
    head_w: Tensor
    head_b: Tensor
    embedding: EmbeddingTable | None = None  # QUALITY only

    def parameters(self) -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for i, layer in enumerate(self.layers):
            for name, p in layer.parameters().items():
                out[f"layer{i}.{name}"] = p
        out["head.W"] = self.head_w
        out["head.b"] = self.head_b
        if self.embedding is not None:
            out["embedding.weights"] = self.embedding.weights
        return out


def build_model(config: ModelConfig, rng: np.random.Generator,
                vocab: Vocabulary | None = None) -> Model:
    config.validate()
    if config.task is TaskKind.QUALITY:
        if vocab is None:
            raise ConfigMismatch("QUALITY model needs a vocabulary")
        table = EmbeddingTable(vocab, config.comment_dim, rng)
        in_dim = config.comment_dim + config.context_dim
        return Model(
            config=config,
            layers=[],
            head_w=Tensor(_glorot(rng, in_dim, config.n_classes), requires_grad=True),
            head_b=Tensor(np.zeros(config.n_classes), requires_grad=True),
            embedding=table,
        )
    layers: list = []
    dims = [config.in_dim, *config.layer_dims]
    for in_dim, out_dim in zip(dims[:-1], dims[1:]):
        if config.layer_type is LayerType.GCN:
            layers.append(GcnLayer.init(in_dim, out_dim, rng))
        else:
            layers.append(GatLayer.init(in_dim, out_dim, config.heads, rng, config.leaky_slope))
    return Model(
        config=config,
        layers=layers,
        head_w=Tensor(_glorot(rng, dims[-1], config.n_classes), requires_grad=True),
        head_b=Tensor(np.zeros(config.n_classes), requires_grad=True),
    )


def _dropout(t: Tensor, rate: float, rng: np.random.Generator | None, training: bool) -> Tensor:
    if not training or rate == 0.0:
        return t
    if rng is None:
        raise ValueError("training-mode dropout needs an rng")
    keep = (rng.random(t.shape) >= rate) / (1.0 - rate)
    return t * Tensor(keep)


def forward_nodes(model: Model, features: np.ndarray, adj: np.ndarray,
                  training: bool = False,
                  rng: np.random.Generator | None = None) -> tuple[Tensor, Tensor]:
    """Per-node logits and the final-layer node embeddings."""
    if model.config.task is TaskKind.QUALITY:
        raise ConfigMismatch("forward_nodes is for graph tasks; use forward_quality")
    if features.shape[1] != model.config.in_dim:
        raise DimensionMismatch(
            f"feature width {features.shape[1]} != configured {model.config.in_dim}")
    h = Tensor(features)
    for layer in model.layers:
        h = _dropout(h, model.config.dropout, rng, training)
        if isinstance(layer, GcnLayer):
            h = gcn_forward(h, adj, layer, activation="relu")
        else:
            h = gat_forward(h, adj, layer, activation="relu")
    logits = T.matmul(_dropout(h, model.config.dropout, rng, training), model.head_w) + model.head_b
    return logits, h


@dataclass(frozen=True)
class QualitySample:
    comment_id: str
    pr_id: str
    tokens: tuple[str, ...]
    context: tuple[float, ...]  # frozen graph embedding of the anchored node
    actionability: float
    clarity: float


def forward_quality(model: Model, samples: list[QualitySample]) -> Tensor:
    """(batch, 2) sigmoid outputs: actionability probability, clarity estimate."""
    if model.config.task is not TaskKind.QUALITY or model.embedding is None:
        raise ConfigMismatch("model is not a QUALITY model")
    rows = []
    for s in samples:
        if len(s.context) != model.config.context_dim:
            raise DimensionMismatch(
                f"context width {len(s.context)} != configured {model.config.context_dim}")
        emb = embed_comment(list(s.tokens), model.embedding)
        ctx = Tensor(np.asarray(s.context))
        rows.append(T.reshape(T.concat([emb, ctx], axis=0), (1, -1)))
    x = T.concat(rows, axis=0)
    return T.sigmoid(T.matmul(x, model.head_w) + model.head_b)


def forward_task(model: Model, inputs) -> Tensor:
    """Dispatch on the configured task.

    Graph tasks take (features, adjacency) and return per-node logits;
    QUALITY takes a list of samples and returns per-comment sigmoid pairs.
    """
    if model.config.task is TaskKind.QUALITY:
        return forward_quality(model, inputs)
    features, adj = inputs
    logits, _ = forward_nodes(model, features, adj)
    return logits


# --- losses ----------------------------------------------------------------------

def masked_cross_entropy(logits: Tensor, labels: np.ndarray, mask: np.ndarray,
                         class_weights: np.ndarray | None = None) -> Tensor:
    """Mean negative log-softmax over unmasked rows, optionally class-weighted."""
    labels = np.asarray(labels, dtype=np.int64)
    mask = np.asarray(mask, dtype=bool)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        raise EmptyMask("no labeled entries under the mask")
    picked = T.take_rows(logits, idx)
    log_probs = T.log_softmax(picked)
    n_classes = logits.shape[1]
    one_hot = np.zeros((idx.size, n_classes))
    one_hot[np.arange(idx.size), labels[idx]] = 1.0
    nll = -T.reduce_sum(log_probs * Tensor(one_hot), axis=1)
    if class_weights is None:
        return T.reduce_mean(nll)
    w = np.asarray(class_weights, dtype=np.float64)[labels[idx]]
    return T.reduce_sum(nll * Tensor(w / w.sum()))


_LOG_EPS = 1e-12  # keeps log finite when a sigmoid saturates to exactly 0/1


def bce_loss(p: Tensor, y: np.ndarray) -> Tensor:
    y = np.asarray(y, dtype=np.float64)
    term = Tensor(y) * T.log(p + _LOG_EPS) + Tensor(1.0 - y) * T.log(1.0 - p + _LOG_EPS)
    return T.reduce_mean(term) * -1.0


def mse_loss(pred: Tensor, y: np.ndarray) -> Tensor:
    diff = pred - Tensor(np.asarray(y, dtype=np.float64))
    return T.reduce_mean(diff * diff)


# --- optimizer --------------------------------------------------------------------

@dataclass
class AdamState:
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: dict[str, Tensor], grads: dict[str, np.ndarray],
              state: AdamState, config: TrainConfig) -> tuple[dict[str, Tensor], AdamState]:
    """Bias-corrected Adam with uniform L2 weight decay; updates in place."""
    state.step += 1
    t = state.step
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            continue
        g = g + config.weight_decay * p.values
        m = state.m.setdefault(name, np.zeros_like(p.values))
        v = state.v.setdefault(name, np.zeros_like(p.values))
        m += (1.0 - config.beta1) * (g - m)
        v += (1.0 - config.beta2) * (g * g - v)
        m_hat = m / (1.0 - config.beta1**t)
        v_hat = v / (1.0 - config.beta2**t)
        p.values -= config.lr * m_hat / (np.sqrt(v_hat) + config.eps)
    return params, state


# --- checkpoints ------------------------------------------------------------------

@dataclass
class Checkpoint:
    format_version: int
    model_config: ModelConfig
    vocabulary: Vocabulary | None
    tensors: dict[str, np.ndarray]
    metadata: dict


def config_to_json(config: ModelConfig) -> dict:
    return {
        "task": config.task.value,
        "layer_type": config.layer_type.value,
        "layer_dims": list(config.layer_dims),
        "dropout": config.dropout,
        "token_dim": config.token_dim,
        "token_hash_size": config.token_hash_size,
        "feature_seed": config.feature_seed,
        "heads": config.heads,
        "leaky_slope": config.leaky_slope,
        "comment_dim": config.comment_dim,
        "context_dim": config.context_dim,
    }


def config_from_json(obj: dict) -> ModelConfig:
    return ModelConfig(
        task=TaskKind(obj["task"]),
        layer_type=LayerType(obj["layer_type"]),
        layer_dims=tuple(int(d) for d in obj["layer_dims"]),
        dropout=float(obj["dropout"]),
        token_dim=int(obj["token_dim"]),
        token_hash_size=int(obj["token_hash_size"]),
        feature_seed=int(obj["feature_seed"]),
        heads=int(obj["heads"]),
        leaky_slope=float(obj["leaky_slope"]),
        comment_dim=int(obj["comment_dim"]),
        context_dim=int(obj["context_dim"]),
    )


def checkpoint_to_json(ckpt: Checkpoint) -> dict:
    return {
        "format_version": ckpt.format_version,
        "model_config": config_to_json(ckpt.model_config),
        "vocabulary": vocab_to_json(ckpt.vocabulary) if ckpt.vocabulary else None,
        "tensors": {
            name: {"shape": list(values.shape), "values": values.reshape(-1).tolist()}
            for name, values in ckpt.tensors.items()
        },
        "metadata": ckpt.metadata,
    }


def checkpoint_from_json(obj: dict) -> Checkpoint:
    version = int(obj["format_version"])
    if version != CHECKPOINT_FORMAT_VERSION:
        raise ConfigMismatch(f"unsupported checkpoint format_version {version}")
    tensors = {
        name: np.asarray(spec["values"], dtype=np.float64).reshape(spec["shape"])
        for name, spec in obj["tensors"].items()
    }
    vocab = vocab_from_json(obj["vocabulary"]) if obj.get("vocabulary") else None
    return Checkpoint(
        format_version=version,
        model_config=config_from_json(obj["model_config"]),
        vocabulary=vocab,
        tensors=tensors,
        metadata=dict(obj.get("metadata", {})),
    )


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(checkpoint_to_json(ckpt), fh, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path) -> Checkpoint:
    with open(path, encoding="utf-8") as fh:
        return checkpoint_from_json(json.load(fh))


def model_to_checkpoint(model: Model, metadata: dict,
                        vocab: Vocabulary | None = None) -> Checkpoint:
    return Checkpoint(
        format_version=CHECKPOINT_FORMAT_VERSION,
        model_config=model.config,
        vocabulary=vocab if vocab is not None else
        (model.embedding.vocab if model.embedding else None),
        tensors={name: p.values.copy() for name, p in model.parameters().items()},
        metadata=metadata,
    )


def model_from_checkpoint(ckpt: Checkpoint) -> Model:
    """Rebuild a model with the exact stored parameters."""
    model = build_model(ckpt.model_config, np.random.default_rng(0), ckpt.vocabulary)
    params = model.parameters()
    if set(params) != set(ckpt.tensors):
        raise ConfigMismatch(
            f"tensor names differ: {sorted(set(params) ^ set(ckpt.tensors))}")
    for name, p in params.items():
        stored = ckpt.tensors[name]
        if stored.shape != p.values.shape:
            raise ConfigMismatch(
                f"tensor {name}: stored shape {stored.shape} != expected {p.values.shape}")
        p.values = stored.copy()
    return model


# --- training ---------------------------------------------------------------------

def graph_arrays(lg: LabeledGraph, config: ModelConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(features, adjacency, labels, mask) for one labeled graph."""
    features = node_features(lg.graph, config)
    adj = dense_adjacency(lg.graph)
    n = len(lg.graph.nodes)
    labels = np.zeros(n, dtype=np.int64)
    mask = np.zeros(n, dtype=bool)
    topic_index = {t: i for i, t in enumerate(TOPIC_ORDER)}
    for lab in lg.labels:
        if config.task is TaskKind.LIKELIHOOD:
            if lab.commented is Commented.POSITIVE:
                labels[lab.node_id], mask[lab.node_id] = 1, True
            elif lab.commented is Commented.NEGATIVE:
                labels[lab.node_id], mask[lab.node_id] = 0, True
        elif lab.commented is Commented.POSITIVE:  # TOPIC: positives only
            labels[lab.node_id], mask[lab.node_id] = topic_index[lab.topic], True
    return features, adj, labels, mask


def inverse_frequency_weights(labels: list[np.ndarray], masks: list[np.ndarray],
                              n_classes: int) -> np.ndarray:
    """w_c = n / (n_classes * count_c) over unmasked labels; absent classes get 0."""
    counts = np.zeros(n_classes)
    for lab, mask in zip(labels, masks):
        for c in lab[mask]:
            counts[c] += 1
    total = counts.sum()
    weights = np.zeros(n_classes)
    present = counts > 0
    weights[present] = total / (n_classes * counts[present])
    return weights


def train(dataset, model_config: ModelConfig, train_config: TrainConfig,
          vocab: Vocabulary | None = None) -> Checkpoint:
    """Deterministic full-batch training; returns a checkpoint with per-epoch
    mean losses in its metadata."""
    train_config.validate()
    if model_config.task is TaskKind.QUALITY:
        return _train_quality(dataset, model_config, train_config, vocab)
    return _train_graphs(dataset, model_config, train_config)


def _train_graphs(dataset: list[LabeledGraph], model_config: ModelConfig,
                  train_config: TrainConfig) -> Checkpoint:
    prepared = [graph_arrays(lg, model_config) for lg in dataset]
    prepared = [p for p in prepared if p[3].any()]
    if not prepared:
        raise EmptyDataset("no graphs with labeled nodes")

    if train_config.class_weights is not None:
        weights = np.asarray(train_config.class_weights, dtype=np.float64)
    else:
        weights = inverse_frequency_weights(
            [p[2] for p in prepared], [p[3] for p in prepared], model_config.n_classes)

    rng = np.random.default_rng(train_config.seed)
    model = build_model(model_config, rng)
    params = model.parameters()
    state = AdamState()
    epoch_losses: list[float] = []
    for _ in range(train_config.epochs):
        losses = []
        for features, adj, labels, mask in prepared:
            for p in params.values():
                p.zero_grad()
            logits, _ = forward_nodes(model, features, adj, training=True, rng=rng)
            loss = masked_cross_entropy(logits, labels, mask, weights)
            loss.backward()
            grads = {name: p.grad for name, p in params.items() if p.grad is not None}
            adam_step(params, grads, state, train_config)
            losses.append(loss.item())
        epoch_losses.append(float(np.mean(losses)))

    metadata = {
        "task": model_config.task.value,
        "seed": train_config.seed,
        "epochs": train_config.epochs,
        "epoch_losses": epoch_losses,
        "final_loss": epoch_losses[-1],
        "class_weights": weights.tolist(),
        "n_graphs": len(prepared),
    }
    return model_to_checkpoint(model, metadata)


def _train_quality(samples: list[QualitySample], model_config: ModelConfig,
                   train_config: TrainConfig, vocab: Vocabulary | None) -> Checkpoint:
    if not samples:
        raise EmptyDataset("no quality samples")
    if vocab is None:
        raise ConfigMismatch("QUALITY training needs a vocabulary")
    context_dim = len(samples[0].context)
    if model_config.context_dim != context_dim:
        model_config = replace(model_config, context_dim=context_dim)

    rng = np.random.default_rng(train_config.seed)
    model = build_model(model_config, rng, vocab)
    params = model.parameters()
    state = AdamState()
    act = np.asarray([s.actionability for s in samples])
    clar = np.asarray([s.clarity for s in samples])
    epoch_losses: list[float] = []
    for _ in range(train_config.epochs):
        for p in params.values():
            p.zero_grad()
        out = forward_quality(model, samples)
        n = len(samples)
        loss = bce_loss(T.take_rows(T.transpose(out), [0]), act.reshape(1, n)) + \
            mse_loss(T.take_rows(T.transpose(out), [1]), clar.reshape(1, n))
        loss.backward()
        model.embedding.mask_pad_gradient()
        grads = {name: p.grad for name, p in params.items() if p.grad is not None}
        adam_step(params, grads, state, train_config)
        model.embedding.weights.values[0, :] = 0.0
        epoch_losses.append(loss.item())

    metadata = {
        "task": model_config.task.value,
        "seed": train_config.seed,
        "epochs": train_config.epochs,
        "epoch_losses": epoch_losses,
        "final_loss": epoch_losses[-1],
        "n_samples": len(samples),
    }
    return model_to_checkpoint(model, metadata)
