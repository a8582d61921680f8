"""GCN and GAT snapshot encoders, LSTM and GRU cells, and the classifier head."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .. import numcore as nc
from ..errors import ShapeError
from ..numcore import Tensor


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape=None, name=None) -> Tensor:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    shape = (fan_in, fan_out) if shape is None else shape
    return Tensor(rng.uniform(-limit, limit, size=shape), requires_grad=True, name=name)


def zeros_param(*shape: int, name=None) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True, name=name)


def _check_edges(edges: np.ndarray, n: int) -> np.ndarray:
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if edges.size and (edges.min() < 0 or edges.max() >= n):
        bad = edges[(edges < 0) | (edges >= n)][0]
        raise IndexError(f"edge endpoint {int(bad)} outside node range 0..{n - 1}")
    return edges


def gcn_norm_adj(n: int, edges, weights=None) -> sparse.csr_matrix:
    """D^-1/2 (A_w + I) D^-1/2 for undirected ``edges`` given as row positions."""
    edges = _check_edges(edges, n)
    w = np.ones(len(edges)) if weights is None else np.asarray(weights, dtype=np.float64)
    rows = np.concatenate([edges[:, 0], edges[:, 1], np.arange(n)])
    cols = np.concatenate([edges[:, 1], edges[:, 0], np.arange(n)])
    vals = np.concatenate([w, w, np.ones(n)])
    A = sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
    d = np.asarray(A.sum(axis=1)).ravel()
    inv_sqrt = 1.0 / np.sqrt(d)
    return sparse.csr_matrix(sparse.diags(inv_sqrt) @ A @ sparse.diags(inv_sqrt))


def attention_index(n: int, edges) -> tuple[np.ndarray, np.ndarray]:
    """(dst, src) pairs covering N(i) and i itself for every node i."""
    edges = _check_edges(edges, n)
    loops = np.arange(n)
    dst = np.concatenate([edges[:, 0], edges[:, 1], loops])
    src = np.concatenate([edges[:, 1], edges[:, 0], loops])
    return dst, src


@dataclass
class GcnLayerParams:
    W: Tensor
    bias: Tensor

    @classmethod
    def init(cls, rng, in_dim: int, out_dim: int, prefix: str = "gcn") -> "GcnLayerParams":
        return cls(glorot(rng, in_dim, out_dim, name=f"{prefix}.W"), zeros_param(out_dim, name=f"{prefix}.bias"))

    def tensors(self) -> dict[str, Tensor]:
        return {"W": self.W, "bias": self.bias}


def gcn_forward(
    X,
    edges=None,
    weights=None,
    layer: GcnLayerParams | None = None,
    dropout: float = 0.0,
    training: bool = False,
    rng=None,
    activation: str = "identity",
    adj: sparse.spmatrix | None = None,
) -> Tensor:
    """One graph convolution: ``act(Â · dropout(X) · W + bias)``.

    ``adj`` may carry a precomputed normalized adjacency; otherwise it is
    built from ``edges`` (row positions) and ``weights``.
    """
    X = nc.as_tensor(X)
    if adj is None:
        adj = gcn_norm_adj(X.shape[0], edges, weights)
    h = nc.dropout(X, dropout, training, rng)
    h = nc.spmm(adj, nc.matmul(h, layer.W)) + layer.bias
    return nc.activate(h, activation)


@dataclass
class GatLayerParams:
    W: list[Tensor]
    a_dst: list[Tensor]
    a_src: list[Tensor]
    bias: list[Tensor]

    @property
    def heads(self) -> int:
        return len(self.W)

    @property
    def head_dim(self) -> int:
        return self.W[0].shape[1]

    @classmethod
    def init(cls, rng, in_dim: int, head_dim: int, heads: int, prefix: str = "gat") -> "GatLayerParams":
        W, a_dst, a_src, bias = [], [], [], []
        for h in range(heads):
            W.append(glorot(rng, in_dim, head_dim, name=f"{prefix}.head{h}.W"))
            a = glorot(rng, 2 * head_dim, 1, shape=(2 * head_dim,))
            a_dst.append(Tensor(a.values[:head_dim], requires_grad=True, name=f"{prefix}.head{h}.a_dst"))
            a_src.append(Tensor(a.values[head_dim:], requires_grad=True, name=f"{prefix}.head{h}.a_src"))
            bias.append(zeros_param(head_dim, name=f"{prefix}.head{h}.bias"))
        return cls(W, a_dst, a_src, bias)

    def tensors(self) -> dict[str, Tensor]:
        out = {}
        for h in range(self.heads):
            out[f"head{h}.W"] = self.W[h]
            out[f"head{h}.a_dst"] = self.a_dst[h]
            out[f"head{h}.a_src"] = self.a_src[h]
            out[f"head{h}.bias"] = self.bias[h]
        return out


def gat_layer(
    X,
    index: tuple[np.ndarray, np.ndarray],
    layer: GatLayerParams,
    final: bool,
    dropout: float = 0.0,
    training: bool = False,
    rng=None,
    activation: str = "elu",
    slope: float = 0.2,
    attention_out: list | None = None,
) -> Tensor:
    """Multi-head attention layer; heads are concatenated, or averaged if ``final``."""
    X = nc.as_tensor(X)
    n = X.shape[0]
    dst, src = index
    x = nc.dropout(X, dropout, training, rng)
    outs = []
    for h in range(layer.heads):
        z = nc.matmul(x, layer.W[h])
        logits = nc.gather_rows(nc.matmul(z, layer.a_dst[h]), dst) + nc.gather_rows(nc.matmul(z, layer.a_src[h]), src)
        alpha = nc.segment_softmax(nc.leaky_relu(logits, slope), dst, n)
        if attention_out is not None:
            attention_out.append(alpha.values.copy())
        alpha = nc.dropout(alpha, dropout, training, rng)
        msg = nc.mul(nc.gather_rows(z, src), nc.reshape(alpha, (len(dst), 1)))
        outs.append(nc.segment_sum(msg, dst, n) + layer.bias[h])
    if final:
        combined = outs[0]
        for o in outs[1:]:
            combined = combined + o
        combined = combined * (1.0 / len(outs)) if len(outs) > 1 else combined
        return nc.activate(combined, activation)
    return nc.activate(nc.concat(outs, axis=1) if len(outs) > 1 else outs[0], activation)


def gat_forward(
    X,
    edges,
    layers: list[GatLayerParams],
    dropout: float = 0.0,
    training: bool = False,
    rng=None,
    hidden_activation: str = "elu",
    output_activation: str = "identity",
    index: tuple[np.ndarray, np.ndarray] | None = None,
    attention_out: list | None = None,
) -> Tensor:
    """Stacked GAT layers over N(i) ∪ {i}; ``attention_out`` collects per-head coefficients."""
    X = nc.as_tensor(X)
    if index is None:
        index = attention_index(X.shape[0], edges)
    h = X
    for k, layer in enumerate(layers):
        last = k == len(layers) - 1
        h = gat_layer(
            h, index, layer, final=last, dropout=dropout, training=training, rng=rng,
            activation=output_activation if last else hidden_activation, attention_out=attention_out,
        )
    return h


LSTM_GATES = ("i", "f", "o", "g")
GRU_GATES = ("z", "r", "h")


@dataclass
class RnnCellParams:
    """Per-gate input weights ``W``, recurrent weights ``U`` and biases ``b``."""

    kind: str
    W: dict[str, Tensor]
    U: dict[str, Tensor]
    b: dict[str, Tensor]

    @property
    def hidden_dim(self) -> int:
        return next(iter(self.U.values())).shape[0]

    @property
    def input_dim(self) -> int:
        return next(iter(self.W.values())).shape[0]

    @classmethod
    def init(cls, rng, kind: str, input_dim: int, hidden_dim: int, prefix: str = "rnn") -> "RnnCellParams":
        gates = LSTM_GATES if kind == "lstm" else GRU_GATES
        W = {g: glorot(rng, input_dim, hidden_dim, name=f"{prefix}.W_{g}") for g in gates}
        U = {g: glorot(rng, hidden_dim, hidden_dim, name=f"{prefix}.U_{g}") for g in gates}
        b = {g: zeros_param(hidden_dim, name=f"{prefix}.b_{g}") for g in gates}
        return cls(kind, W, U, b)

    @classmethod
    def zeros(cls, kind: str, input_dim: int, hidden_dim: int) -> "RnnCellParams":
        gates = LSTM_GATES if kind == "lstm" else GRU_GATES
        return cls(
            kind,
            {g: zeros_param(input_dim, hidden_dim) for g in gates},
            {g: zeros_param(hidden_dim, hidden_dim) for g in gates},
            {g: zeros_param(hidden_dim) for g in gates},
        )

    def tensors(self) -> dict[str, Tensor]:
        out = {}
        for g in self.W:
            out[f"W_{g}"] = self.W[g]
            out[f"U_{g}"] = self.U[g]
            out[f"b_{g}"] = self.b[g]
        return out


def _check_step(x: Tensor, h: Tensor, p: RnnCellParams) -> None:
    if x.values.ndim != 2 or h.values.ndim != 2 or x.shape[0] != h.shape[0]:
        raise ShapeError(f"recurrent step: input {x.shape} and state {h.shape} must be 2-D with equal rows")
    if x.shape[1] != p.input_dim or h.shape[1] != p.hidden_dim:
        raise ShapeError(
            f"recurrent step: input width {x.shape[1]} / state width {h.shape[1]} "
            f"vs cell ({p.input_dim}, {p.hidden_dim})"
        )


def _gate(x: Tensor, h: Tensor, p: RnnCellParams, g: str) -> Tensor:
    return nc.matmul(x, p.W[g]) + nc.matmul(h, p.U[g]) + p.b[g]


def lstm_step(x, h, c, p: RnnCellParams) -> tuple[Tensor, Tensor]:
    x, h, c = nc.as_tensor(x), nc.as_tensor(h), nc.as_tensor(c)
    _check_step(x, h, p)
    if c.shape != h.shape:
        raise ShapeError(f"lstm_step: cell state {c.shape} vs hidden state {h.shape}")
    i = nc.sigmoid(_gate(x, h, p, "i"))
    f = nc.sigmoid(_gate(x, h, p, "f"))
    o = nc.sigmoid(_gate(x, h, p, "o"))
    g = nc.tanh(_gate(x, h, p, "g"))
    c_new = f * c + i * g
    return o * nc.tanh(c_new), c_new


def gru_step(x, h, p: RnnCellParams) -> Tensor:
    x, h = nc.as_tensor(x), nc.as_tensor(h)
    _check_step(x, h, p)
    z = nc.sigmoid(_gate(x, h, p, "z"))
    r = nc.sigmoid(_gate(x, h, p, "r"))
    candidate = nc.tanh(nc.matmul(x, p.W["h"]) + nc.matmul(r * h, p.U["h"]) + p.b["h"])
    return z * h + (1.0 - z) * candidate


@dataclass
class HeadParams:
    w: Tensor
    b: Tensor

    @classmethod
    def init(cls, rng, in_dim: int) -> "HeadParams":
        return cls(glorot(rng, in_dim, 1, shape=(in_dim,), name="head.w"), zeros_param(1, name="head.b"))

    def tensors(self) -> dict[str, Tensor]:
        return {"w": self.w, "b": self.b}


def head_logits(emb, head: HeadParams) -> Tensor:
    """Linear score per row; ``sigmoid`` of it is P(influencer)."""
    return nc.matmul(nc.as_tensor(emb), head.w) + head.b
