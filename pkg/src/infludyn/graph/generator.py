"""Synthetic referral networks with a planted influencer mechanism.

The generator grows a customer network month by month:

* a cohort of new customers joins every month (geometric growth), each
  tied to ``initial_degree`` existing customers;
* a fixed share of every cohort is latently "influential"; each month an
  influential customer refers someone with probability ``referral_rate``;
* with probability ``homophily_strength`` the referred customer is a new
  recruit joining next month, otherwise an existing neighbour;
* a referral at month m adds a contacts-colored reference edge in month
  m + 1; non-influencers gain ties to ordinary newcomers at the same rate,
  so degree alone says nothing about the label;
* contacts and credit-card edges pick partners of the same latent class
  with probability ``homophily_strength * assortativity`` (otherwise
  uniformly); geohash edges join customers whose latent 2-D positions lie
  within ``geohash_radius`` of each other.

Node features are unit-variance Gaussian noise plus three mean shifts,
all scaled by ``homophily_strength``:

* influential customers carry ``feature_signal`` along a fixed direction;
* a recruit carries ``referral_signal`` along an orthogonal direction in
  its first month only, which exposes the referrer through its
  neighbourhood;
* a referrer carries ``activity_signal`` in every month it refers.

With zero homophily the features are independent of the labels. The
latent share is calibrated so the expected fraction of labeled influencers
(customers who have referred at least once) in the final month equals
``target_influencer_fraction``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import ConfigError
from .labels import label_nodes
from .network import COLOR_NAMES, DynamicNetwork, ReferralEvent, Snapshot

CC, GEO, CONTACTS = range(3)


def _default_edge_probabilities() -> dict[str, float]:
    return {"credit_card": 0.02, "geohash": 0.05, "contacts": 0.15}


@dataclass
class GeneratorConfig:
    n_initial_nodes: int = 950
    n_months: int = 12
    node_growth_rate: float = 0.07
    edge_probabilities: dict[str, float] = field(default_factory=_default_edge_probabilities)
    referral_rate: float = 0.3
    target_influencer_fraction: float = 0.13
    feature_width: int = 8
    homophily_strength: float = 0.8
    feature_signal: float = 0.6
    assortativity: float = 0.1
    referral_signal: float = 25.0
    activity_signal: float = 0.4
    initial_degree: int = 2
    geohash_radius: float = 0.02
    seed: int = 0

    def validate(self) -> None:
        if self.n_months < 2:
            raise ConfigError(f"n_months must be at least 2, got {self.n_months}")
        if self.n_initial_nodes < 2:
            raise ConfigError(f"n_initial_nodes must be at least 2, got {self.n_initial_nodes}")
        if self.node_growth_rate < 0:
            raise ConfigError("node_growth_rate must be non-negative")
        if set(self.edge_probabilities) != set(COLOR_NAMES):
            raise ConfigError(f"edge_probabilities needs exactly the keys {COLOR_NAMES}")
        probs = dict(self.edge_probabilities, referral_rate=self.referral_rate,
                     homophily_strength=self.homophily_strength, assortativity=self.assortativity)
        for name, p in probs.items():
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {p}")
        if not 0.0 < self.target_influencer_fraction < 0.5:
            raise ConfigError("target_influencer_fraction must lie in (0, 0.5)")
        if self.referral_rate == 0:
            raise ConfigError("referral_rate 0 cannot produce any influencer")
        if self.feature_width < 1:
            raise ConfigError("feature_width must be positive")
        if self.initial_degree < 0 or self.geohash_radius < 0 or self.feature_signal < 0:
            raise ConfigError("initial_degree, geohash_radius and feature_signal must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown generator config keys: {sorted(unknown)}")
        return cls(**d)


def cohort_sizes(cfg: GeneratorConfig) -> list[int]:
    sizes = [cfg.n_initial_nodes]
    total = cfg.n_initial_nodes
    for _ in range(1, cfg.n_months):
        new = int(round(total * cfg.node_growth_rate))
        sizes.append(new)
        total += new
    return sizes


def latent_share(cfg: GeneratorConfig) -> float:
    """Share of each cohort that must be influential to hit the target label rate."""
    sizes = np.array(cohort_sizes(cfg), dtype=np.float64)
    remaining = cfg.n_months - np.arange(cfg.n_months)
    p_referred = 1.0 - (1.0 - cfg.referral_rate) ** remaining
    share = cfg.target_influencer_fraction * sizes.sum() / (sizes * p_referred).sum()
    if share > 1.0:
        raise ConfigError(
            f"referral_rate {cfg.referral_rate} is too low to reach influencer fraction "
            f"{cfg.target_influencer_fraction} in {cfg.n_months} months"
        )
    return share


class _Builder:
    def __init__(self, cfg: GeneratorConfig):
        self.cfg = cfg
        self.rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0x5EED]))
        self.latent: list[int] = []
        self.pos: list[np.ndarray] = []
        self.by_class: tuple[list[int], list[int]] = ([], [])
        self.neighbors: list[set[int]] = []
        self.edges: dict[tuple[int, int], list[int]] = {}

    @property
    def n(self) -> int:
        return len(self.latent)

    def add_node(self, latent: int) -> int:
        nid = self.n
        self.latent.append(latent)
        self.pos.append(self.rng.random(2))
        self.by_class[latent].append(nid)
        self.neighbors.append(set())
        return nid

    def connect(self, u: int, v: int, color: int) -> None:
        if u == v:
            return
        key = (u, v) if u < v else (v, u)
        flags = self.edges.setdefault(key, [0, 0, 0])
        flags[color] = 1
        self.neighbors[u].add(v)
        self.neighbors[v].add(u)

    def partner(self, u: int, limit: int) -> int | None:
        """Homophilous partner among nodes ``< limit``."""
        if limit < 2:
            return None
        rng = self.rng
        if rng.random() < self.cfg.homophily_strength * self.cfg.assortativity:
            pool = self.by_class[self.latent[u]]
            # class lists are in id order, so the usable prefix ends before ``limit``
            k = int(np.searchsorted(pool, limit))
            if k > 1 or (k == 1 and pool[0] != u):
                for _ in range(8):
                    v = pool[int(rng.integers(k))]
                    if v != u:
                        return v
        v = int(rng.integers(limit - 1))
        return v if v < u else v + 1

    def geohash_partner(self, u: int, positions: np.ndarray) -> int | None:
        d = np.abs(positions - positions[u]).max(axis=1)
        near = np.nonzero(d <= self.cfg.geohash_radius)[0]
        near = near[near != u]
        if len(near) == 0:
            return None
        return int(near[self.rng.integers(len(near))])


def generate_synthetic(cfg: GeneratorConfig) -> DynamicNetwork:
    """Build a monotone :class:`DynamicNetwork` from ``cfg`` (deterministic in the seed)."""
    cfg.validate()
    sizes = cohort_sizes(cfg)
    share = latent_share(cfg)
    b = _Builder(cfg)
    rng = b.rng
    p = cfg.edge_probabilities
    events: list[ReferralEvent] = []
    pending: list[ReferralEvent] = []
    recruits: set[int] = set()
    born: dict[int, int] = {}
    graph_state = []
    cum_nodes, cum_latent = 0, 0
    for t, cohort in enumerate(sizes):
        # exact per-cohort quota keeps the influencer share on target
        cum_nodes += cohort
        quota = int(round(share * cum_nodes)) - cum_latent
        cum_latent += quota
        flags = np.zeros(cohort, dtype=int)
        flags[rng.choice(cohort, size=quota, replace=False)] = 1
        start = b.n
        for f in flags:
            u = b.add_node(int(f))
            limit = u if t == 0 else start
            for _ in range(cfg.initial_degree):
                v = b.partner(u, limit)
                if v is not None:
                    b.connect(u, v, CONTACTS)
        for e in pending:
            b.connect(e.referrer, e.referred, CONTACTS)
        pending = []
        # non-influencers befriend organic newcomers at the recruit rate so degree carries no label
        if t > 0 and b.n > start:
            organic = [v for v in range(start, b.n) if v not in recruits]
            for u in range(start):
                if organic and not b.latent[u] and rng.random() < cfg.referral_rate * cfg.homophily_strength:
                    b.connect(u, organic[int(rng.integers(len(organic)))], CONTACTS)
        n = b.n
        positions = np.array(b.pos)
        draws = rng.random((n, 3))
        for u in range(n):
            if draws[u, CONTACTS] < p["contacts"]:
                v = b.partner(u, n)
                if v is not None:
                    b.connect(u, v, CONTACTS)
            if draws[u, CC] < p["credit_card"]:
                v = b.partner(u, n)
                if v is not None:
                    b.connect(u, v, CC)
            if draws[u, GEO] < p["geohash"]:
                v = b.geohash_partner(u, positions)
                if v is not None:
                    b.connect(u, v, GEO)
        keys = sorted(b.edges)
        graph_state.append((n, np.array(keys, dtype=np.int64).reshape(-1, 2),
                            np.array([b.edges[k] for k in keys], dtype=np.int8).reshape(-1, 3)))
        # next month's cohort occupies ids n .. n + budget - 1
        budget = sizes[t + 1] if t + 1 < len(sizes) else 0
        next_id = n
        for u in b.by_class[1]:
            if rng.random() >= cfg.referral_rate:
                continue
            if next_id < n + budget and rng.random() < cfg.homophily_strength:
                v = next_id
                next_id += 1
                recruits.add(v)
                born[v] = t + 1
            elif b.neighbors[u]:
                ordered = sorted(b.neighbors[u])
                v = ordered[int(rng.integers(len(ordered)))]
            else:
                v = int(rng.integers(n - 1))
                v = v if v < u else v + 1
            ev = ReferralEvent(u, v, t)
            events.append(ev)
            pending.append(ev)

    latent = np.array(b.latent, dtype=np.float64)
    width = cfg.feature_width
    influencer_dir = np.ones(width) / np.sqrt(width)
    # orthogonal to influencer_dir whenever the width is even
    referred_dir = np.where(np.arange(width) % 2 == 0, 1.0, -1.0) / np.sqrt(width)
    onboarding = np.zeros((b.n, cfg.n_months))
    for v in recruits:
        onboarding[v, born[v]] = 1.0
    referred_at = np.zeros((b.n, cfg.n_months))
    for e in events:
        referred_at[e.referrer, e.month] = 1.0
    h = cfg.homophily_strength
    snapshots = []
    for t, (n, edges, colors) in enumerate(graph_state):
        noise = rng.standard_normal((n, width))
        features = (
            noise
            + h * cfg.feature_signal * latent[:n, None] * influencer_dir
            + h * cfg.referral_signal * onboarding[:n, t, None] * referred_dir
            + h * cfg.activity_signal * referred_at[:n, t, None] * influencer_dir
        )
        snapshots.append(Snapshot.build(t, np.arange(n), features, np.zeros(n, dtype=np.int8), edges, colors))
    net = DynamicNetwork(snapshots, referral_events=events)
    labels = label_nodes(net, "ex_post_cumulative")
    net.snapshots = [s.with_labels(y) for s, y in zip(net.snapshots, labels)]
    return net
