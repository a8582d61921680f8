"""Connected components and component-restricted PageRank."""
from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components as _cc

from ..errors import ConfigError, NumericError
from .network import DynamicNetwork, Snapshot


def _adjacency(s: Snapshot) -> sparse.csr_matrix:
    n = s.n_nodes
    if s.n_edges == 0:
        return sparse.csr_matrix((n, n))
    idx = s.edge_index()
    rows = np.concatenate([idx[:, 0], idx[:, 1]])
    cols = np.concatenate([idx[:, 1], idx[:, 0]])
    return sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))


def component_labels(s: Snapshot) -> np.ndarray:
    """Component id per row of ``s.node_ids``, numbered by smallest member id."""
    if s.n_nodes == 0:
        return np.zeros(0, dtype=np.int64)
    _, raw = _cc(_adjacency(s), directed=False)
    # node_ids are sorted, so first occurrence order is smallest-id order
    _, first = np.unique(raw, return_index=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first)] = np.arange(len(first))
    return rank[raw]


def connected_components(s: Snapshot) -> dict[int, int]:
    labels = component_labels(s)
    return dict(zip(s.node_ids.tolist(), labels.tolist()))


def pagerank_scores(
    s: Snapshot, damping: float = 0.85, tol: float = 1e-10, max_iter: int = 1000
) -> np.ndarray:
    """PageRank per row of ``s.node_ids``, normalized within each component.

    Edges are unweighted and bidirectional. Teleportation and dangling
    mass are spread uniformly over the node's own component, so every
    component's scores sum to one.
    """
    if not 0.0 < damping < 1.0:
        raise ConfigError(f"damping must lie in (0, 1), got {damping}")
    n = s.n_nodes
    if n == 0:
        return np.zeros(0)
    comp = component_labels(s)
    n_comp = comp.max() + 1
    size = np.bincount(comp, minlength=n_comp).astype(np.float64)
    A = _adjacency(s)
    deg = np.asarray(A.sum(axis=1)).ravel()
    dangling = deg == 0
    inv_deg = np.where(dangling, 0.0, 1.0 / np.where(dangling, 1.0, deg))
    # A is symmetric, so A @ (x / deg) pushes each node's mass to its neighbours
    x = 1.0 / size[comp]
    residual = np.inf
    for _ in range(max_iter):
        dangling_mass = np.bincount(comp, weights=x * dangling, minlength=n_comp)
        spread = (damping * dangling_mass + (1.0 - damping)) / size
        x_new = damping * (A @ (x * inv_deg)) + spread[comp]
        residual = np.abs(x_new - x).sum()
        x = x_new
        if residual < tol:
            return x
    raise NumericError(f"PageRank did not converge in {max_iter} iterations (L1 residual {residual:.3e})")


def pagerank_per_component(
    s: Snapshot, damping: float = 0.85, tol: float = 1e-10, max_iter: int = 1000
) -> dict[int, float]:
    scores = pagerank_scores(s, damping=damping, tol=tol, max_iter=max_iter)
    return dict(zip(s.node_ids.tolist(), scores.tolist()))


def augment_with_pagerank(net: DynamicNetwork, damping: float = 0.85) -> DynamicNetwork:
    """Copy of ``net`` with each snapshot's PageRank appended as a last feature column."""
    snaps = [
        s.with_features(np.column_stack([s.features, pagerank_scores(s, damping=damping)]))
        for s in net.snapshots
    ]
    return DynamicNetwork(
        snaps,
        referral_events=list(net.referral_events),
        feature_names=list(net.feature_names) + ["pagerank"],
        label_mode=net.label_mode,
    )
