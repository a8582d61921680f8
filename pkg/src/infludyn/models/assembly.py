"""The ten model assemblies: encoder per snapshot, recurrent decoder, linear head."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import sparse

from .. import numcore as nc
from ..errors import ConfigError, DataError
from ..graph import DynamicNetwork, augment_with_pagerank
from ..numcore import Tensor
from ..rng import stream
from .layers import (
    GatLayerParams,
    GcnLayerParams,
    HeadParams,
    RnnCellParams,
    attention_index,
    gat_layer,
    gcn_forward,
    gcn_norm_adj,
    gru_step,
    head_logits,
    lstm_step,
)

ARCHITECTURES = {
    "gcn_lstm": ("gcn", "lstm"),
    "gcn_gru": ("gcn", "gru"),
    "gat_lstm": ("gat", "lstm"),
    "gat_gru": ("gat", "gru"),
    "pagerank_lstm": ("pagerank", "lstm"),
    "pagerank_gru": ("pagerank", "gru"),
    "features_lstm": ("features", "lstm"),
    "features_gru": ("features", "gru"),
    "static_gcn": ("gcn", None),
    "static_gat": ("gat", None),
}
GNN_FIELDS = ("gnn_layers", "gnn_hidden", "embedding_dim")


@dataclass
class ModelConfig:
    """Architecture selector plus hyperparameters.

    ``gnn_layers`` counts hidden graph layers; the encoder always ends with
    one more layer producing ``embedding_dim`` outputs. For GAT,
    ``gnn_hidden`` is the concatenated width of all heads.
    """

    architecture: str
    gnn_layers: int | None = None
    gnn_hidden: int | None = None
    embedding_dim: int | None = None
    rnn_hidden: int | None = None
    heads: int | None = None
    dropout: float = 0.0
    smote_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        # one shared hidden width unless the recurrent width is given
        if (self.rnn_hidden is None and self.gnn_hidden is not None
                and ARCHITECTURES.get(self.architecture, (None, None))[1] is not None):
            self.rnn_hidden = self.gnn_hidden

    @property
    def encoder_kind(self) -> str:
        return ARCHITECTURES[self.architecture][0]

    @property
    def decoder_kind(self) -> str | None:
        return ARCHITECTURES[self.architecture][1]

    @property
    def is_gnn(self) -> bool:
        return self.encoder_kind in ("gcn", "gat")

    def validate(self) -> "ModelConfig":
        if self.architecture not in ARCHITECTURES:
            raise ConfigError(f"unknown architecture {self.architecture!r}; expected one of {sorted(ARCHITECTURES)}")
        arch = self.architecture
        if self.is_gnn:
            for name in GNN_FIELDS:
                if getattr(self, name) is None:
                    raise ConfigError(f"{arch}: {name} is required")
            if self.gnn_layers < 0 or self.embedding_dim < 1:
                raise ConfigError(f"{arch}: gnn_layers must be >= 0 and embedding_dim >= 1")
            if self.gnn_layers > 0 and self.gnn_hidden < 1:
                raise ConfigError(f"{arch}: gnn_hidden must be positive")
        else:
            present = [n for n in GNN_FIELDS + ("heads",) if getattr(self, n) is not None]
            if present:
                raise ConfigError(f"{arch}: GNN fields {present} must be absent")
            if self.dropout != 0.0:
                raise ConfigError(f"{arch}: dropout applies to GNN encoders only")
        if self.encoder_kind == "gat":
            if self.heads is None or self.heads < 1:
                raise ConfigError(f"{arch}: heads must be a positive integer")
            if self.gnn_layers > 0 and self.gnn_hidden % self.heads:
                raise ConfigError(f"{arch}: gnn_hidden {self.gnn_hidden} is not divisible by {self.heads} heads")
        elif self.heads is not None:
            raise ConfigError(f"{arch}: heads only apply to GAT encoders")
        if self.decoder_kind is None:
            if self.rnn_hidden is not None:
                raise ConfigError(f"{arch}: static models have no recurrent decoder; drop rnn_hidden")
        elif self.rnn_hidden is None or self.rnn_hidden < 1:
            raise ConfigError(f"{arch}: rnn_hidden must be a positive integer")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must lie in [0, 1), got {self.dropout}")
        if self.smote_rate < 0:
            raise ConfigError(f"smote_rate must be non-negative, got {self.smote_rate}")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**d)


# Best settings per Table-1 row; GNN/RNN hidden widths share one column there.
REFERENCE_CONFIGS = {
    "gcn_lstm": ModelConfig("gcn_lstm", gnn_layers=1, gnn_hidden=200, embedding_dim=200, rnn_hidden=200, dropout=0.5, smote_rate=0.0),
    "gcn_gru": ModelConfig("gcn_gru", gnn_layers=1, gnn_hidden=200, embedding_dim=200, rnn_hidden=200, dropout=0.5, smote_rate=0.75),
    "gat_lstm": ModelConfig("gat_lstm", gnn_layers=4, gnn_hidden=100, embedding_dim=200, rnn_hidden=100, heads=4, dropout=0.5),
    "gat_gru": ModelConfig("gat_gru", gnn_layers=4, gnn_hidden=100, embedding_dim=200, rnn_hidden=100, heads=4, dropout=0.5),
    "pagerank_lstm": ModelConfig("pagerank_lstm", rnn_hidden=100),
    "pagerank_gru": ModelConfig("pagerank_gru", rnn_hidden=200),
    "features_lstm": ModelConfig("features_lstm", rnn_hidden=100),
    "features_gru": ModelConfig("features_gru", rnn_hidden=200),
    "static_gat": ModelConfig("static_gat", gnn_layers=4, embedding_dim=200, gnn_hidden=100, heads=4, dropout=0.5),
    "static_gcn": ModelConfig("static_gcn", gnn_layers=1, embedding_dim=200, gnn_hidden=200, dropout=0.5),
}


@dataclass(eq=False)
class PreparedSnapshot:
    """Model-ready view of one month: features plus cached graph operators."""

    month: int
    node_ids: np.ndarray
    X: np.ndarray
    labels: np.ndarray
    adj: sparse.csr_matrix | None = None
    att_index: tuple[np.ndarray, np.ndarray] | None = None


def prepare_network(net: DynamicNetwork, encoder_kind: str) -> dict[int, PreparedSnapshot]:
    """Per-month inputs for an encoder kind (adds PageRank for ``pagerank``)."""
    if encoder_kind == "pagerank":
        net = augment_with_pagerank(net)
    out = {}
    for s in net.snapshots:
        p = PreparedSnapshot(s.month, s.node_ids, s.features, s.labels.astype(np.float64))
        if encoder_kind == "gcn":
            p.adj = gcn_norm_adj(s.n_nodes, s.edge_index(), s.edge_weights())
        elif encoder_kind == "gat":
            p.att_index = attention_index(s.n_nodes, s.edge_index())
        out[s.month] = p
    return out


@dataclass
class EmbeddingSequence:
    """Encoder outputs over a window, aligned to the last month's nodes.

    ``steps[k]`` is ``(rows, emb)``: ``emb`` holds embeddings of the nodes
    present in month ``months[k]`` and ``rows`` their positions in
    ``node_ids``. A node's sequence begins at its first month in the window.
    """

    months: list[int]
    node_ids: np.ndarray
    steps: list[tuple[np.ndarray, Tensor]]

    def sequence_length(self, node_id: int) -> int:
        pos = int(np.searchsorted(self.node_ids, node_id))
        return sum(1 for rows, _ in self.steps if np.any(rows == pos))

    def node_sequence(self, node_id: int) -> list[np.ndarray]:
        pos = int(np.searchsorted(self.node_ids, node_id))
        out = []
        for rows, emb in self.steps:
            hit = np.nonzero(rows == pos)[0]
            if len(hit):
                out.append(emb.values[hit[0]])
        return out


class Encoder:
    """Snapshot encoder: GCN, GAT, or the identity on node features."""

    def __init__(self, kind: str, input_dim: int, cfg: ModelConfig | None = None, rng=None):
        self.kind = kind
        self.input_dim = input_dim
        self.gcn: list[GcnLayerParams] = []
        self.gat: list[GatLayerParams] = []
        self.dropout = 0.0
        if kind in ("features", "pagerank"):
            self.output_dim = input_dim
            return
        self.dropout = cfg.dropout
        self.output_dim = cfg.embedding_dim
        if kind == "gcn":
            dims = [input_dim] + [cfg.gnn_hidden] * cfg.gnn_layers + [cfg.embedding_dim]
            self.gcn = [GcnLayerParams.init(rng, a, b, prefix=f"gcn{k}") for k, (a, b) in enumerate(zip(dims, dims[1:]))]
        elif kind == "gat":
            d_in = input_dim
            for k in range(cfg.gnn_layers):
                self.gat.append(GatLayerParams.init(rng, d_in, cfg.gnn_hidden // cfg.heads, cfg.heads, prefix=f"gat{k}"))
                d_in = cfg.gnn_hidden
            self.gat.append(GatLayerParams.init(rng, d_in, cfg.embedding_dim, cfg.heads, prefix=f"gat{cfg.gnn_layers}"))
        else:
            raise ConfigError(f"unknown encoder kind {kind!r}")

    def named_parameters(self) -> dict[str, Tensor]:
        out = {}
        for k, layer in enumerate(self.gcn):
            out.update({f"encoder.gcn{k}.{n}": t for n, t in layer.tensors().items()})
        for k, layer in enumerate(self.gat):
            out.update({f"encoder.gat{k}.{n}": t for n, t in layer.tensors().items()})
        return out

    def __call__(self, snap: PreparedSnapshot, training: bool = False, rng=None, attention_out=None) -> Tensor:
        if snap.X.shape[1] != self.input_dim:
            raise DataError(f"month {snap.month}: feature width {snap.X.shape[1]} but the model expects {self.input_dim}")
        X = Tensor(snap.X)
        if self.kind in ("features", "pagerank"):
            return X
        h = X
        if self.kind == "gcn":
            for k, layer in enumerate(self.gcn):
                last = k == len(self.gcn) - 1
                h = gcn_forward(h, layer=layer, adj=snap.adj, dropout=self.dropout, training=training,
                                rng=rng, activation="identity" if last else "elu")
            return h
        for k, layer in enumerate(self.gat):
            last = k == len(self.gat) - 1
            h = gat_layer(h, snap.att_index, layer, final=last, dropout=self.dropout, training=training,
                          rng=rng, activation="identity" if last else "elu", attention_out=attention_out)
        return h


def encode_window(snaps: dict[int, PreparedSnapshot], window, encoder: Encoder,
                  training: bool = False, rng=None) -> EmbeddingSequence:
    """Apply ``encoder`` to every month of ``window`` independently."""
    window = list(window)
    if not window:
        raise ConfigError("encode_window needs a non-empty window")
    missing = [m for m in window if m not in snaps]
    if missing:
        raise ConfigError(f"window months {missing} are not in the network")
    last_ids = snaps[window[-1]].node_ids
    steps = []
    for m in window:
        s = snaps[m]
        rows = np.searchsorted(last_ids, s.node_ids)
        if np.any(rows >= len(last_ids)) or np.any(last_ids[np.minimum(rows, len(last_ids) - 1)] != s.node_ids):
            raise DataError(f"month {m} has nodes missing from month {window[-1]}")
        steps.append((rows, encoder(s, training=training, rng=rng)))
    return EmbeddingSequence(window, last_ids, steps)


def unroll(seq: EmbeddingSequence, rnn: RnnCellParams) -> Tensor:
    """Final hidden state per node, starting from zeros at its first month."""
    n = len(seq.node_ids)
    h = Tensor(np.zeros((n, rnn.hidden_dim)))
    c = Tensor(np.zeros((n, rnn.hidden_dim))) if rnn.kind == "lstm" else None
    for rows, emb in seq.steps:
        full = len(rows) == n
        x = emb if full else nc.scatter_rows(emb, rows, n)
        if rnn.kind == "lstm":
            h_new, c_new = lstm_step(x, h, c, rnn)
        else:
            h_new, c_new = gru_step(x, h, rnn), None
        if full:
            h, c = h_new, c_new
        else:
            mask = np.zeros((n, 1))
            mask[rows] = 1.0
            keep = 1.0 - mask
            h = h_new * mask + h * keep
            if c is not None:
                c = c_new * mask + c * keep
    return h


def decode_classify(seq: EmbeddingSequence, rnn: RnnCellParams, head: HeadParams) -> np.ndarray:
    """P(influencer) at the window's last month for every node in it."""
    with nc.no_grad():
        return nc.sigmoid(head_logits(unroll(seq, rnn), head)).values


class InfluencerModel:
    """Encoder + optional recurrent decoder + linear/sigmoid head."""

    def __init__(self, cfg: ModelConfig, input_dim: int):
        cfg.validate()
        self.cfg = cfg
        self.input_dim = input_dim
        rng = stream(cfg.seed, "init")
        kind = cfg.encoder_kind
        enc_in = input_dim + 1 if kind == "pagerank" else input_dim
        self.encoder = Encoder(kind, enc_in, cfg, rng)
        self.rnn = None
        if cfg.decoder_kind is not None:
            self.rnn = RnnCellParams.init(rng, cfg.decoder_kind, self.encoder.output_dim, cfg.rnn_hidden)
        self.head = HeadParams.init(rng, self.embedding_width)

    @property
    def embedding_width(self) -> int:
        return self.cfg.rnn_hidden if self.rnn is not None else self.encoder.output_dim

    @property
    def is_static(self) -> bool:
        return self.rnn is None

    def named_parameters(self) -> dict[str, Tensor]:
        out = dict(self.encoder.named_parameters())
        if self.rnn is not None:
            out.update({f"rnn.{n}": t for n, t in self.rnn.tensors().items()})
        out.update({f"head.{n}": t for n, t in self.head.tensors().items()})
        return out

    def parameters(self) -> list[Tensor]:
        return list(self.named_parameters().values())

    def n_parameters(self) -> int:
        return int(sum(p.values.size for p in self.parameters()))

    def prepare(self, net: DynamicNetwork) -> dict[int, PreparedSnapshot]:
        if net.feature_width != self.input_dim:
            raise DataError(f"network feature width {net.feature_width} does not match model input width {self.input_dim}")
        return prepare_network(net, self.cfg.encoder_kind)

    def embed(self, snaps: dict[int, PreparedSnapshot], window, training: bool = False, rng=None) -> tuple[np.ndarray, Tensor]:
        """Pre-head embeddings for the nodes of the window's last month."""
        window = list(window)
        if self.is_static:
            # static encoders only see the month being predicted
            seq = encode_window(snaps, window[-1:], self.encoder, training, rng)
            return seq.node_ids, seq.steps[0][1]
        seq = encode_window(snaps, window, self.encoder, training, rng)
        return seq.node_ids, unroll(seq, self.rnn)

    def logits(self, snaps, window, training: bool = False, rng=None) -> tuple[np.ndarray, Tensor]:
        ids, emb = self.embed(snaps, window, training, rng)
        return ids, head_logits(emb, self.head)

    def predict_proba(self, snaps, window) -> tuple[np.ndarray, np.ndarray]:
        with nc.no_grad():
            ids, z = self.logits(snaps, window, training=False)
        return ids, nc.sigmoid(z).values

    def state(self) -> dict[str, np.ndarray]:
        return {n: p.values.copy() for n, p in self.named_parameters().items()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        params = self.named_parameters()
        if set(state) != set(params):
            raise DataError(f"parameter names differ: {sorted(set(state) ^ set(params))[:5]}")
        for name, p in params.items():
            values = np.asarray(state[name], dtype=np.float64)
            if values.shape != p.shape:
                raise DataError(f"parameter {name}: shape {values.shape} vs expected {p.shape}")
            p.values = values.copy()


def build_model(cfg: ModelConfig, input_dim: int) -> InfluencerModel:
    """Allocate an assembly for ``cfg`` taking ``input_dim`` raw node features."""
    if input_dim < 1:
        raise ConfigError("input_dim must be positive")
    return InfluencerModel(cfg, input_dim)
