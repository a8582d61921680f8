"""
A synthetic referral network, month by month
============================================

Grow a customer network with a planted influencer mechanism, look at how
it evolves, and check the properties the models rely on.
"""

import numpy as np

from infludyn.graph import (
    GeneratorConfig, augment_with_pagerank, connected_components, generate_synthetic,
    label_nodes, validate_monotone,
)

cfg = GeneratorConfig(n_initial_nodes=400, n_months=9, seed=1)
net = generate_synthetic(cfg)

# %%
# Size, density and class balance per month. The influencer share is
# calibrated to land near 13% by the final month.
for s in net.snapshots:
    comps = len(set(connected_components(s).values()))
    print(f"month {s.month}: {s.n_nodes:4d} nodes  {s.n_edges:5d} edges  "
          f"{comps:3d} components  influencers {s.labels.mean():.3f}")

# %%
# Edges carry three color flags. Their sum is the weight a GCN sees.
last = net.snapshots[-1]
weights = last.edge_weights()
print("edge weight histogram:", dict(zip(*np.unique(weights, return_counts=True))))

# %%
# Nodes, edges and color flags never disappear.
print("monotonicity violations:", validate_monotone(net))

# %%
# A referral at month m shows up as a contacts edge at month m + 1.
e = next(ev for ev in net.referral_events if ev.month + 1 < net.n_months)
key = tuple(sorted((e.referrer, e.referred)))
print(f"referral {e}: edge present at month {e.month}?",
      key in {tuple(p) for p in net.snapshot(e.month).edges.tolist()},
      f"| at month {e.month + 1}?", key in {tuple(p) for p in net.snapshot(e.month + 1).edges.tolist()})

# %%
# Two labelings: "has referred by t" and "will refer within h months".
cumulative = label_nodes(net, "ex_post_cumulative")
future = label_nodes(net, "future_horizon(2)")
print("positives per month (cumulative):", [int(y.sum()) for y in cumulative])
print("positives per month (next 2 months):", [int(y.sum()) for y in future])

# %%
# PageRank within each connected component becomes one extra feature for
# the PageRank baselines.
aug = augment_with_pagerank(net)
pr = aug.snapshots[-1].features[:, -1]
y = aug.snapshots[-1].labels
print(f"mean PageRank: influencers {pr[y == 1].mean():.5f}  others {pr[y == 0].mean():.5f}")
