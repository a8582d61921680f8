"""
Checking gradients and attention by hand
========================================

Every layer is differentiated by a small tape-based engine. Here we compare
its gradients with central differences and look at GAT attention weights.
"""

import numpy as np

import infludyn.numcore as nc
from infludyn.graph import GeneratorConfig, generate_synthetic
from infludyn.models import ModelConfig, attention_index, build_model
from infludyn.numcore import Tensor, grad_check

# %%
# A scalar function of two matrices.
rng = np.random.default_rng(0)
X = Tensor(rng.standard_normal((4, 3)), requires_grad=True)
W = Tensor(rng.standard_normal((3, 2)), requires_grad=True)
print("tanh(XW) sum, max rel. error:", grad_check(lambda: nc.sum(nc.tanh(X @ W)), [X, W]))

# %%
# A whole GAT+LSTM assembly on a tiny network, loss = binary cross-entropy.
net = generate_synthetic(GeneratorConfig(n_initial_nodes=12, n_months=2, seed=3))
model = build_model(ModelConfig("gat_lstm", gnn_layers=1, gnn_hidden=4, embedding_dim=3, rnn_hidden=3, heads=2),
                    net.feature_width)
snaps = model.prepare(net)


def loss():
    _, z = model.logits(snaps, [0, 1])
    return nc.bce_with_logits(z, snaps[1].labels)


print(f"gat_lstm with {model.n_parameters()} parameters, max rel. error:", grad_check(loss, model.parameters()))

# %%
# Attention weights over each node's neighbourhood (itself included) sum to one.
att = []
model.encoder(snaps[1], attention_out=att)
dst, src = attention_index(len(snaps[1].node_ids), net.snapshots[1].edge_index())
for head, a in enumerate(att[:2]):
    sums = np.bincount(dst, weights=a)
    print(f"layer 0 head {head}: row sums in [{sums.min():.12f}, {sums.max():.12f}]")
node = int(dst[0])
print(f"node {node} attends to", {int(j): round(float(w), 3) for j, w in zip(src[dst == node], att[0][dst == node])})
