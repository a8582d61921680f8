"""Influencer labels derived from referral events."""
from __future__ import annotations

import re

import numpy as np

from ..errors import ConfigError
from .network import DynamicNetwork

LABEL_MODES = ("ex_post_cumulative", "future_horizon")


def parse_label_mode(mode: str) -> tuple[str, int]:
    """Split ``"future_horizon(3)"`` into ``("future_horizon", 3)``."""
    m = re.fullmatch(r"\s*(\w+)\s*(?:\(\s*(\d+)\s*\))?\s*", mode)
    if not m or m.group(1) not in LABEL_MODES:
        raise ConfigError(f"unknown label mode {mode!r}; expected one of {LABEL_MODES}")
    name, horizon = m.group(1), m.group(2)
    if name == "future_horizon":
        h = int(horizon) if horizon is not None else 1
        if h < 1:
            raise ConfigError("future_horizon needs a horizon of at least 1 month")
        return name, h
    if horizon is not None:
        raise ConfigError("ex_post_cumulative takes no horizon")
    return name, 0


def label_nodes(net: DynamicNetwork, mode: str = "ex_post_cumulative", horizon: int | None = None) -> list[np.ndarray]:
    """Per-snapshot 0/1 labels aligned with each snapshot's ``node_ids``.

    ``ex_post_cumulative``: 1 at month t iff the node referred someone at
    any month <= t. ``future_horizon``: 1 at month t iff it refers in
    (t, t + horizon].
    """
    name, parsed_h = parse_label_mode(mode)
    h = horizon if horizon is not None else parsed_h
    if name == "future_horizon" and h < 1:
        raise ConfigError("future_horizon needs a horizon of at least 1 month")
    months_by_referrer: dict[int, list[int]] = {}
    for e in net.referral_events:
        months_by_referrer.setdefault(e.referrer, []).append(e.month)
    out = []
    for s in net.snapshots:
        t = s.month
        labels = np.zeros(s.n_nodes, dtype=np.int8)
        for i, nid in enumerate(s.node_ids.tolist()):
            months = months_by_referrer.get(nid)
            if not months:
                continue
            if name == "ex_post_cumulative":
                hit = any(m <= t for m in months)
            else:
                hit = any(t < m <= t + h for m in months)
            labels[i] = hit
        out.append(labels)
    return out


def relabel(net: DynamicNetwork, mode: str = "ex_post_cumulative", horizon: int | None = None) -> DynamicNetwork:
    labels = label_nodes(net, mode, horizon)
    name, parsed_h = parse_label_mode(mode)
    h = horizon if horizon is not None else parsed_h
    mode_str = name if name == "ex_post_cumulative" else f"{name}({h})"
    return DynamicNetwork(
        [s.with_labels(y) for s, y in zip(net.snapshots, labels)],
        referral_events=list(net.referral_events),
        feature_names=list(net.feature_names),
        label_mode=mode_str,
    )
