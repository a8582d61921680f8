"""Monthly snapshots of a growing, edge-colored customer network."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from ..errors import DataError, RaggedWidthError, UnknownNodeError

COLOR_NAMES = ("credit_card", "geohash", "contacts")


@dataclass(frozen=True)
class EdgeColor:
    """Connection-type flags carried by an undirected edge."""

    credit_card: int = 0
    geohash: int = 0
    contacts: int = 0

    def __post_init__(self):
        for name in COLOR_NAMES:
            if getattr(self, name) not in (0, 1):
                raise DataError(f"edge color flag {name} must be 0 or 1, got {getattr(self, name)!r}")

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.credit_card, self.geohash, self.contacts)

    def __or__(self, other: "EdgeColor") -> "EdgeColor":
        return EdgeColor(*(max(a, b) for a, b in zip(self.as_tuple(), other.as_tuple())))


def edge_weight(color: EdgeColor) -> float:
    """Number of active connection types on an edge (1, 2 or 3)."""
    w = color.credit_card + color.geohash + color.contacts
    if w == 0:
        raise DataError("edge with no active color flag has no weight")
    return float(w)


class ReferralEvent(NamedTuple):
    referrer: int
    referred: int
    month: int


@dataclass(frozen=True, eq=False)
class Snapshot:
    """State of the network in one month.

    ``node_ids`` is sorted and unique; ``features`` and ``labels`` are
    aligned with it. ``edges`` holds node-id pairs with ``u < v`` in
    lexicographic order and ``colors`` the matching 0/1 flag rows.
    """

    month: int
    node_ids: np.ndarray
    features: np.ndarray
    labels: np.ndarray
    edges: np.ndarray
    colors: np.ndarray

    @classmethod
    def build(cls, month, node_ids, features, labels, edges=None, colors=None) -> "Snapshot":
        """Canonicalize ordering (sorted ids, ``u < v`` edges) and validate."""
        node_ids = np.asarray(node_ids, dtype=np.int64)
        features = np.asarray(features, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int8)
        if features.ndim == 1:
            features = features.reshape(len(node_ids), -1)
        order = np.argsort(node_ids, kind="stable")
        node_ids, features, labels = node_ids[order], features[order], labels[order]
        edges = np.zeros((0, 2), dtype=np.int64) if edges is None else np.asarray(edges, dtype=np.int64)
        edges = edges.reshape(-1, 2)
        colors = np.zeros((0, 3), dtype=np.int8) if colors is None else np.asarray(colors, dtype=np.int8)
        colors = colors.reshape(-1, 3)
        if len(edges):
            edges = np.sort(edges, axis=1)
            eorder = np.lexsort((edges[:, 1], edges[:, 0]))
            edges, colors = edges[eorder], colors[eorder]
        snap = cls(int(month), node_ids, features, labels, edges, colors)
        check_snapshot(snap)
        return snap

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def feature_width(self) -> int:
        return self.features.shape[1]

    def positions(self, ids) -> np.ndarray:
        """Row positions of ``ids`` in this snapshot."""
        ids = np.asarray(ids, dtype=np.int64)
        pos = np.searchsorted(self.node_ids, ids)
        pos = np.clip(pos, 0, max(self.n_nodes - 1, 0))
        if self.n_nodes == 0 or np.any(self.node_ids[pos] != ids):
            missing = ids[(self.n_nodes == 0) | (self.node_ids[pos] != ids)]
            raise UnknownNodeError(f"month {self.month}: unknown node id {int(missing[0])}")
        return pos

    def edge_index(self) -> np.ndarray:
        """Edges as (E, 2) row positions into ``node_ids``."""
        if self.n_edges == 0:
            return np.zeros((0, 2), dtype=np.int64)
        return self.positions(self.edges.reshape(-1)).reshape(-1, 2)

    def edge_weights(self) -> np.ndarray:
        return self.colors.sum(axis=1).astype(np.float64)

    def edge_colors(self) -> dict[tuple[int, int], EdgeColor]:
        return {
            (int(u), int(v)): EdgeColor(*map(int, c)) for (u, v), c in zip(self.edges, self.colors)
        }

    def with_features(self, features: np.ndarray) -> "Snapshot":
        return replace(self, features=np.asarray(features, dtype=np.float64))

    def with_labels(self, labels: np.ndarray) -> "Snapshot":
        return replace(self, labels=np.asarray(labels, dtype=np.int8))

    def equals(self, other: "Snapshot") -> bool:
        return (
            self.month == other.month
            and np.array_equal(self.node_ids, other.node_ids)
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.colors, other.colors)
        )


def check_snapshot(s: Snapshot) -> None:
    """Raise on any structural defect inside a single snapshot."""
    m = s.month
    if s.node_ids.ndim != 1:
        raise DataError(f"month {m}: node_ids must be one-dimensional")
    if len(np.unique(s.node_ids)) != len(s.node_ids):
        dup = s.node_ids[np.nonzero(np.diff(np.sort(s.node_ids)) == 0)[0][0]]
        raise DataError(f"month {m}: duplicate node id {int(dup)}")
    if s.features.ndim != 2 or s.features.shape[0] != s.n_nodes:
        raise RaggedWidthError(f"month {m}: feature matrix shape {s.features.shape} for {s.n_nodes} nodes")
    if not np.all(np.isfinite(s.features)):
        bad = s.node_ids[np.nonzero(~np.all(np.isfinite(s.features), axis=1))[0][0]]
        raise DataError(f"month {m}: non-finite features for node {int(bad)}")
    if s.labels.shape != (s.n_nodes,) or not np.all(np.isin(s.labels, (0, 1))):
        raise DataError(f"month {m}: labels must be 0/1, one per node")
    if s.edges.shape[0] != s.colors.shape[0]:
        raise DataError(f"month {m}: {len(s.edges)} edges but {len(s.colors)} color rows")
    if s.n_edges == 0:
        return
    self_loops = s.edges[:, 0] == s.edges[:, 1]
    if np.any(self_loops):
        raise DataError(f"month {m}: self-edge on node {int(s.edges[self_loops][0, 0])}")
    same = np.all(s.edges[1:] == s.edges[:-1], axis=1)
    if np.any(same):
        u, v = s.edges[1:][same][0]
        raise DataError(f"month {m}: duplicate edge ({int(u)}, {int(v)})")
    if not np.all(np.isin(s.colors, (0, 1))):
        raise DataError(f"month {m}: color flags must be 0/1")
    blank = s.colors.sum(axis=1) == 0
    if np.any(blank):
        u, v = s.edges[blank][0]
        raise DataError(f"month {m}: edge ({int(u)}, {int(v)}) has no active color flag")
    known = np.isin(s.edges, s.node_ids)
    if not np.all(known):
        raise UnknownNodeError(f"month {m}: edge endpoint {int(s.edges[~known][0])} is not a node")


class Violation(NamedTuple):
    kind: str  # "node", "edge" or "color"
    month: int
    entity: object


@dataclass(eq=False)
class DynamicNetwork:
    snapshots: list[Snapshot]
    referral_events: list[ReferralEvent] = field(default_factory=list)
    feature_names: list[str] | None = None
    label_mode: str = "ex_post_cumulative"

    def __post_init__(self):
        if not self.snapshots:
            raise DataError("a dynamic network needs at least one snapshot")
        widths = {s.feature_width for s in self.snapshots}
        if len(widths) > 1:
            for prev, cur in zip(self.snapshots, self.snapshots[1:]):
                if cur.feature_width != prev.feature_width:
                    raise RaggedWidthError(
                        f"month {cur.month}: feature width {cur.feature_width} "
                        f"differs from {prev.feature_width} at month {prev.month}"
                    )
        for i, s in enumerate(self.snapshots):
            if s.month != self.snapshots[0].month + i:
                raise DataError(f"snapshot months must be consecutive; found month {s.month} at position {i}")
        if self.feature_names is None:
            self.feature_names = [f"f_{i}" for i in range(self.feature_width)]
        if len(self.feature_names) != self.feature_width:
            raise RaggedWidthError(
                f"{len(self.feature_names)} feature names for feature width {self.feature_width}"
            )
        self.referral_events = [ReferralEvent(*map(int, e)) for e in self.referral_events]

    @property
    def n_months(self) -> int:
        return len(self.snapshots)

    @property
    def months(self) -> range:
        return range(self.snapshots[0].month, self.snapshots[0].month + self.n_months)

    @property
    def feature_width(self) -> int:
        return self.snapshots[0].feature_width

    def snapshot(self, month: int) -> Snapshot:
        i = month - self.snapshots[0].month
        if not 0 <= i < self.n_months:
            raise DataError(f"month {month} is outside the network's range {self.months}")
        return self.snapshots[i]

    def first_month(self) -> dict[int, int]:
        """Month of first appearance of every node."""
        born: dict[int, int] = {}
        for s in self.snapshots:
            for nid in s.node_ids.tolist():
                born.setdefault(nid, s.month)
        return born

    def equals(self, other: "DynamicNetwork") -> bool:
        return (
            self.n_months == other.n_months
            and all(a.equals(b) for a, b in zip(self.snapshots, other.snapshots))
            and self.referral_events == other.referral_events
            and self.feature_names == other.feature_names
            and self.label_mode == other.label_mode
        )


def _edge_keys(s: Snapshot) -> np.ndarray:
    return s.edges[:, 0] * (2**31) + s.edges[:, 1] if s.n_edges else np.zeros(0, dtype=np.int64)


def validate_monotone(net: DynamicNetwork) -> list[Violation]:
    """Report every place where a node, edge or color flag disappears.

    An edge lost only because one of its endpoints vanished is attributed
    to the node violation, not reported again.
    """
    out: list[Violation] = []
    for prev, cur in zip(net.snapshots, net.snapshots[1:]):
        lost = np.setdiff1d(prev.node_ids, cur.node_ids)
        out.extend(Violation("node", cur.month, int(n)) for n in lost)
        prev_keys, cur_keys = _edge_keys(prev), _edge_keys(cur)
        present = np.isin(prev_keys, cur_keys)
        for (u, v) in prev.edges[~present]:
            if u in cur.node_ids and v in cur.node_ids:
                out.append(Violation("edge", cur.month, (int(u), int(v))))
        if np.any(present):
            pos = np.searchsorted(cur_keys, prev_keys[present])
            before = prev.colors[present]
            after = cur.colors[pos]
            reverted = np.any((before == 1) & (after == 0), axis=1)
            for (u, v) in prev.edges[present][reverted]:
                out.append(Violation("color", cur.month, (int(u), int(v))))
    return out
