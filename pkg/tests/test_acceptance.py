"""Acceptance criteria 1-10; each test records one PASS/FAIL line."""
import json
import time

import numpy as np
import pytest

import infludyn.numcore as nc
from infludyn.cli import main
from infludyn.graph import GeneratorConfig, Snapshot, generate_synthetic, validate_monotone
from infludyn.graph.centrality import component_labels, pagerank_scores
from infludyn.models import (
    ARCHITECTURES, GatLayerParams, GcnLayerParams, HeadParams, ModelConfig, RnnCellParams,
    attention_index, build_model, gat_forward, gcn_forward, gru_step, head_logits, lstm_step,
)
from infludyn.numcore import Tensor, grad_check
from infludyn.pipeline import TrainConfig, WindowSpec, auc, evaluate, smote_oversample, train_model

from conftest import record_acceptance, toy_network
from oracles import pairwise_auc, power_iteration_pagerank
from test_graph import _three_months
from test_models import randomize


def grad_config(arch, seed):
    # smallest widths that still exercise a hidden graph layer and two attention heads
    enc, dec = ARCHITECTURES[arch]
    kw = {}
    if enc in ("gcn", "gat"):
        kw.update(gnn_layers=1, gnn_hidden=2, embedding_dim=2)
    if enc == "gat":
        kw["heads"] = 2
    if dec is not None:
        kw["rnn_hidden"] = 2
    return ModelConfig(arch, seed=seed, **kw)


def _layer_losses(net, rng):
    s = net.snapshots[1]
    X = Tensor(s.features, requires_grad=True)
    w = Tensor(rng.standard_normal(s.n_nodes))
    edges, weights = s.edge_index(), s.edge_weights()
    proj = Tensor(rng.standard_normal(2))
    gcn = GcnLayerParams.init(rng, 3, 2)
    gat = [GatLayerParams.init(rng, 3, 2, heads=2), GatLayerParams.init(rng, 4, 2, heads=2)]
    lstm = RnnCellParams.init(rng, "lstm", 3, 2)
    gru = RnnCellParams.init(rng, "gru", 3, 2)
    head = HeadParams.init(rng, 3)
    h0 = Tensor(rng.standard_normal((s.n_nodes, 2)), requires_grad=True)
    c0 = Tensor(rng.standard_normal((s.n_nodes, 2)), requires_grad=True)
    gat_params = [t for layer in gat for t in layer.tensors().values()]
    for group in (gcn.tensors().values(), gat_params, lstm.tensors().values(), gru.tensors().values(),
                  head.tensors().values()):
        randomize(group, rng)

    def lstm_loss():
        h, c = lstm_step(X, h0, c0, lstm)
        h, c = lstm_step(X, h, c, lstm)
        return nc.sum(h @ proj * w) + nc.sum(c * c)

    y = s.labels.astype(float)
    return {
        "gcn": (lambda: nc.sum(gcn_forward(X, edges, weights, layer=gcn, activation="elu") @ proj * w),
                [X, *gcn.tensors().values()]),
        "gat": (lambda: nc.sum(gat_forward(X, edges, gat) @ proj * w), [X, *gat_params]),
        "lstm": (lstm_loss, [X, h0, c0, *lstm.tensors().values()]),
        "gru": (lambda: nc.sum(gru_step(X, gru_step(X, h0, gru), gru) @ proj * w), [X, h0, *gru.tensors().values()]),
        "head": (lambda: nc.bce_with_logits(head_logits(X, head), y), [X, *head.tensors().values()]),
    }


def test_1_gradient_correctness():
    start = time.perf_counter()
    worst = {}
    for seed in range(20):
        net = toy_network(seed)
        rng = np.random.default_rng(seed)
        for name, (f, params) in _layer_losses(net, rng).items():
            worst[name] = max(worst.get(name, 0.0), grad_check(f, params, eps=1e-5))
        for arch in ARCHITECTURES:
            model = build_model(grad_config(arch, seed), net.feature_width)
            randomize(model.parameters(), rng)
            snaps = model.prepare(net)

            def loss():
                _, z = model.logits(snaps, [0, 1])
                return nc.bce_with_logits(z, snaps[1].labels)

            worst[arch] = max(worst.get(arch, 0.0), grad_check(loss, model.parameters(), eps=1e-5))
    elapsed = time.perf_counter() - start
    top = max(worst, key=worst.get)
    ok = worst[top] < 1e-4 and elapsed < 60
    record_acceptance(1, ok, f"max rel. error {worst[top]:.2e} ({top}) over 20 seeds, "
                             f"{len(worst)} layers/assemblies, {elapsed:.1f}s (limits 1e-4, 60s)")
    assert ok


def test_2_pagerank_oracle():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst_sum = worst_diff = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 51))
        p = rng.uniform(0.01, 0.3)
        edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
        e = np.array(edges, dtype=np.int64).reshape(-1, 2)
        s = Snapshot.build(0, np.arange(n), np.zeros((n, 1)), np.zeros(n), e, np.tile([0, 0, 1], (len(e), 1)))
        pr = pagerank_scores(s, tol=1e-13)
        comp = component_labels(s)
        worst_sum = max(worst_sum, np.abs(np.bincount(comp, weights=pr) - 1.0).max())
        worst_diff = max(worst_diff, np.abs(pr - power_iteration_pagerank(n, edges, tol=1e-12)).max())
    elapsed = time.perf_counter() - start
    ok = worst_sum < 1e-10 and worst_diff < 1e-8 and elapsed < 10
    record_acceptance(2, ok, f"component sums off by {worst_sum:.1e}, oracle diff {worst_diff:.1e}, "
                             f"100 graphs in {elapsed:.1f}s (limits 1e-10, 1e-8, 10s)")
    assert ok


def test_3_auc_oracle():
    start = time.perf_counter()
    rng = np.random.default_rng(3)
    worst = 0.0
    tie_sets = 0
    for i in range(100):
        n = int(rng.integers(2, 201))
        y = rng.integers(0, 2, size=n)
        y[:2] = [0, 1]
        s = rng.integers(0, 6, size=n).astype(float) if i % 2 == 0 else rng.random(n)
        tie_sets += len(np.unique(s)) < n
        worst = max(worst, abs(auc(s, y) - pairwise_auc(s, y)))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-15 and elapsed < 5 and tie_sets >= 50
    record_acceptance(3, ok, f"max |auc - pairwise| {worst:.1e} on 100 sets ({tie_sets} with ties), "
                             f"{elapsed:.2f}s (limits 1e-15, 5s)")
    assert ok


def test_4_attention_normalization():
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 40))
        edges = np.array([(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < 0.15]).reshape(-1, 2)
        layers = [GatLayerParams.init(rng, 5, 3, heads=3), GatLayerParams.init(rng, 9, 4, heads=2)]
        att = []
        gat_forward(rng.standard_normal((n, 5)), edges, layers, dropout=0.5, training=False, attention_out=att)
        dst, _ = attention_index(n, edges)
        for a in att:
            worst = max(worst, np.abs(np.bincount(dst, weights=a, minlength=n) - 1.0).max())
    ok = worst < 1e-6
    record_acceptance(4, ok, f"max |row sum - 1| {worst:.1e} over 50 random graphs, 5 heads each (limit 1e-6)")
    assert ok


def test_5_monotonicity_enforcement():
    clean = all(validate_monotone(generate_synthetic(GeneratorConfig(n_initial_nodes=300, n_months=8, seed=s))) == []
                for s in range(3))

    def drop_node(sizes, edges, colors):
        sizes[2] = 3
        edges[2] = [(0, 1), (1, 2)]
        colors[2] = colors[2][:2]

    def drop_edge(sizes, edges, colors):
        edges[2] = [(0, 1), (2, 3)]
        colors[2] = colors[2][:2]

    def revert(sizes, edges, colors):
        colors[1] = np.array([[1, 0, 1], [0, 0, 1], [0, 0, 1]])
        colors[2] = np.array([[1, 0, 0], [0, 0, 1], [0, 0, 1]])

    kinds = {}
    for kind, fn in (("node", drop_node), ("edge", drop_edge), ("color", revert)):
        found = validate_monotone(_three_months(fn))
        kinds[kind] = [v.kind for v in found]
    ok = clean and all(found == [k] for k, found in kinds.items())
    record_acceptance(5, ok, f"generator outputs clean: {clean}; planted violations flagged {kinds}")
    assert ok


def test_6_generator_imbalance():
    fractions = []
    for seed in range(5):
        last = generate_synthetic(GeneratorConfig(target_influencer_fraction=0.13, seed=seed)).snapshots[-1]
        assert last.n_nodes >= 1990
        fractions.append(float(last.labels.mean()))
    ok = all(0.11 <= f <= 0.15 for f in fractions)
    record_acceptance(6, ok, "final-month influencer fractions " + ", ".join(f"{f:.3f}" for f in fractions)
                      + " (range [0.11, 0.15])")
    assert ok


def test_7_smote_contract():
    rng = np.random.default_rng(7)
    count_ok, worst, passthrough = True, 0.0, True
    for _ in range(50):
        n_min, n_maj = int(rng.integers(2, 60)), int(rng.integers(60, 200))
        emb = rng.standard_normal((n_min + n_maj, 4))
        y = rng.permutation(np.array([1] * n_min + [0] * n_maj))
        rate = float(rng.choice([0.25, 0.5, 0.75, 1.0, 2.5, rng.uniform(0, 3)]))
        out, out_y, sample = smote_oversample(emb, y, rate, rng=rng, return_parents=True)
        count_ok &= len(out) - len(emb) == int(np.floor(rate * n_min))
        if len(out) > len(emb):
            a, b = emb[sample.base], emb[sample.neighbor]
            count_ok &= bool(np.all(y[sample.base] == 1) and np.all(y[sample.neighbor] == 1))
            count_ok &= bool(np.all((sample.gap >= 0) & (sample.gap <= 1)))
            worst = max(worst, np.abs(out[len(emb):] - (a + sample.gap[:, None] * (b - a))).max())
        same, same_y = smote_oversample(emb, y, 0.0)
        passthrough &= same.tobytes() == emb.tobytes() and same_y.tobytes() == y.tobytes()
    ok = count_ok and worst < 1e-12 and passthrough
    record_acceptance(7, ok, f"counts exact: {count_ok}; convexity residual {worst:.1e} (limit 1e-12); "
                             f"rate-0 passthrough bit-identical: {passthrough}")
    assert ok


DESK_MODELS = {
    "features_gru": dict(rnn_hidden=16),
    "static_gcn": dict(gnn_layers=1, gnn_hidden=16, embedding_dim=16),
    "gcn_gru": dict(gnn_layers=1, gnn_hidden=16, embedding_dim=16, rnn_hidden=16),
    "gat_gru": dict(gnn_layers=1, gnn_hidden=16, embedding_dim=16, rnn_hidden=16, heads=2),
}
DESK_TRAIN = dict(max_epochs=150, early_stop_patience=20, lr=0.01)


def _desk_run(arch, seed, homophily):
    net = generate_synthetic(GeneratorConfig(seed=seed, homophily_strength=homophily))
    spec = WindowSpec.default(net.n_months)
    model = build_model(ModelConfig(arch, seed=seed, **DESK_MODELS[arch]), net.feature_width)
    train_model(model, net, spec, TrainConfig(seed=seed, **DESK_TRAIN))
    return evaluate(model, net, spec, B=100, seed=seed).auc_seen.auc


@pytest.mark.slow
def test_8_desk_scale_ordering():
    start = time.perf_counter()
    seen = {a: np.mean([_desk_run(a, s, 0.8) for s in range(5)]) for a in DESK_MODELS}
    null = np.mean([_desk_run("features_gru", s, 0.0) for s in range(5)])
    elapsed = time.perf_counter() - start
    a_ok = min(seen["gcn_gru"], seen["gat_gru"]) >= seen["features_gru"] + 0.05
    b_ok = seen["features_gru"] >= seen["static_gcn"]
    c_ok = abs(null - 0.5) <= 0.05
    ok = a_ok and b_ok and c_ok and elapsed < 1800
    table = ", ".join(f"{a} {v:.3f}" for a, v in seen.items())
    record_acceptance(8, ok, f"mean seen AUC over 5 seeds: {table}; (a) {a_ok} (b) {b_ok}; "
                             f"(c) homophily 0 Features+GRU {null:.3f} {c_ok}; {elapsed / 60:.1f} min (limit 30)")
    assert ok


def test_9_determinism(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({
        "generator": {"n_initial_nodes": 150, "n_months": 9},
        "model": {"architecture": "gat_gru", "gnn_layers": 1, "gnn_hidden": 4, "embedding_dim": 4,
                  "rnn_hidden": 4, "heads": 2, "dropout": 0.3, "smote_rate": 0.5},
        "train": {"max_epochs": 5, "early_stop_patience": 5, "lr": 0.01},
        "n_bootstrap": 200,
    }))
    assert main(["generate", "--config", str(cfg), "--out", str(tmp_path / "g"), "--seed", "11"]) == 0
    data = str(tmp_path / "g" / "network")
    for run in ("a", "b"):
        assert main(["train", "--config", str(cfg), "--data", data, "--out", str(tmp_path / run), "--seed", "11"]) == 0
    a, b = (tmp_path / "a" / "report.json").read_bytes(), (tmp_path / "b" / "report.json").read_bytes()
    ok = a == b
    record_acceptance(9, ok, f"two train runs, report.json byte-identical: {ok} ({len(a)} bytes)")
    assert ok


def test_10_early_stopping():
    net = generate_synthetic(GeneratorConfig(n_initial_nodes=150, n_months=9, seed=5))
    spec = WindowSpec.default(net.n_months)
    model = build_model(ModelConfig("features_gru", rnn_hidden=4), net.feature_width)
    initial = model.state()
    const = train_model(model, net, spec, TrainConfig(max_epochs=500, early_stop_patience=50, lr=0.0))
    restored = all(np.array_equal(initial[k], v) for k, v in model.state().items())
    curve = iter(np.linspace(0.5, 0.99, 500))
    rising = train_model(build_model(ModelConfig("features_gru", rnn_hidden=4), net.feature_width), net, spec,
                         TrainConfig(max_epochs=500, early_stop_patience=50, lr=0.0),
                         validate=lambda m, s: {"val_score": float(next(curve))})
    ok = const.epochs_run == 51 and const.best_epoch == 1 and restored and rising.epochs_run == 500
    record_acceptance(10, ok, f"constant model stopped after {const.epochs_run} epochs (expect 51), "
                              f"epoch-1 parameters restored: {restored}; improving curve ran {rising.epochs_run}/500")
    assert ok
