"""Test-period evaluation: seen/unseen AUC with bootstrap intervals."""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..graph import DynamicNetwork
from ..models import InfluencerModel
from ..rng import stream
from .metrics import auc, bootstrap_ci
from .training import window_scores
from .windows import WindowSpec, split_seen_unseen


@dataclass
class AucSummary:
    auc: float
    mean: float
    half_width: float
    n_pos: int
    n_neg: int
    samples: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "auc": self.auc,
            "mean": self.mean,
            "half_width": self.half_width,
            "n_pos": self.n_pos,
            "n_neg": self.n_neg,
            "samples": list(self.samples),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AucSummary":
        return cls(**d)


@dataclass
class EvalReport:
    """Test AUC on seen and unseen nodes; either may be absent (``None``) with a reason."""

    architecture: str
    auc_seen: AucSummary | None
    auc_unseen: AucSummary | None
    n_bootstrap: int
    config: dict = field(default_factory=dict)
    absent: dict = field(default_factory=dict)
    wall_time_seconds: float | None = None

    def to_dict(self, include_timing: bool = False) -> dict:
        d = {
            "architecture": self.architecture,
            "test_auc_seen": None if self.auc_seen is None else self.auc_seen.to_dict(),
            "test_auc_unseen": None if self.auc_unseen is None else self.auc_unseen.to_dict(),
            "absent": dict(self.absent),
            "n_bootstrap": self.n_bootstrap,
            "config": self.config,
        }
        if include_timing:
            d["total_time_seconds"] = self.wall_time_seconds
        return d

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        def summary(v):
            return None if v is None else AucSummary.from_dict(v)

        return cls(
            architecture=d["architecture"],
            auc_seen=summary(d["test_auc_seen"]),
            auc_unseen=summary(d["test_auc_unseen"]),
            n_bootstrap=d["n_bootstrap"],
            config=d.get("config", {}),
            absent=d.get("absent", {}),
            wall_time_seconds=d.get("total_time_seconds"),
        )

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_json(), encoding="utf-8")
        return path

    def summary_line(self) -> str:
        def fmt(s):
            return "n/a" if s is None else f"{s.mean:.3f}±{s.half_width:.3f}"

        return f"{self.architecture}: seen {fmt(self.auc_seen)}  unseen {fmt(self.auc_unseen)}"


def _summarize(scores: np.ndarray, labels: np.ndarray, B: int, rng) -> tuple[AucSummary | None, str | None]:
    if len(scores) == 0:
        return None, "no nodes in group"
    if len(np.unique(labels)) < 2:
        return None, "single class in group"
    ci = bootstrap_ci(scores, labels, B=B, rng=rng)
    return AucSummary(
        auc=auc(scores, labels), mean=ci.mean, half_width=ci.half_width,
        n_pos=int(labels.sum()), n_neg=int(len(labels) - labels.sum()), samples=ci.samples.tolist(),
    ), None


def score_table(model: InfluencerModel, net: DynamicNetwork, spec: WindowSpec, snaps=None) -> list[dict]:
    """One row per (test window, node): month, node id, group, label, score."""
    snaps = model.prepare(net) if snaps is None else snaps
    seen, unseen = split_seen_unseen(net, spec)
    rows = []
    for month, ids, labels, probs in window_scores(model, snaps, spec.windows("test")):
        for nid, y, p in zip(ids.tolist(), labels.tolist(), probs.tolist()):
            group = "seen" if nid in seen else "unseen" if nid in unseen else "excluded"
            rows.append({"month": month, "node_id": nid, "group": group, "label": int(y), "score": p})
    return rows


def report_from_scores(rows: list[dict], architecture: str, B: int = 1000, seed: int = 0,
                       config: dict | None = None) -> EvalReport:
    rng = stream(seed, "bootstrap")
    out, absent = {}, {}
    for group in ("seen", "unseen"):
        sel = [r for r in rows if r["group"] == group]
        scores = np.array([r["score"] for r in sel], dtype=np.float64)
        labels = np.array([r["label"] for r in sel], dtype=np.int64)
        out[group], reason = _summarize(scores, labels, B, rng)
        if reason:
            absent[group] = reason
    return EvalReport(architecture, out["seen"], out["unseen"], B, config=config or {}, absent=absent)


def evaluate(model: InfluencerModel, net: DynamicNetwork, spec: WindowSpec, B: int = 1000,
             seed: int = 0, snaps=None) -> EvalReport:
    """Score the test windows and summarize seen and unseen nodes separately."""
    start = time.perf_counter()
    rows = score_table(model, net, spec, snaps)
    report = report_from_scores(rows, model.cfg.architecture, B=B, seed=seed, config=model.cfg.to_dict())
    report.wall_time_seconds = time.perf_counter() - start
    return report
