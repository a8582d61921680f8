"""Exhaustive hyperparameter grid search with the (seen + unseen) / 2 selection rule."""
from __future__ import annotations

import csv
import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from ..errors import ConfigError, InfludynError
from ..graph import DynamicNetwork
from ..models import ModelConfig, build_model
from .training import TrainConfig, train_model
from .windows import WindowSpec

GRID_FIELDS = ("gnn_hidden", "rnn_hidden", "embedding_dim", "gnn_layers", "heads", "smote_rate", "dropout")
_GNN_ONLY = {"gnn_hidden", "embedding_dim", "gnn_layers", "heads", "dropout"}


@dataclass
class GridSpec:
    gnn_hidden: list = field(default_factory=lambda: [None])
    rnn_hidden: list = field(default_factory=lambda: [None])
    embedding_dim: list = field(default_factory=lambda: [None])
    gnn_layers: list = field(default_factory=lambda: [None])
    heads: list = field(default_factory=lambda: [None])
    smote_rate: list = field(default_factory=lambda: [0.0])
    dropout: list = field(default_factory=lambda: [0.0])

    def __post_init__(self):
        for name in GRID_FIELDS:
            if not list(getattr(self, name)):
                raise ConfigError(f"grid list {name} is empty")

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        unknown = set(d) - set(GRID_FIELDS)
        if unknown:
            raise ConfigError(f"unknown grid keys: {sorted(unknown)}")
        return cls(**{k: list(v) for k, v in d.items()})

    def relevant_fields(self, architecture: str) -> list[str]:
        probe = ModelConfig(architecture)
        fields = []
        for name in GRID_FIELDS:
            if name in _GNN_ONLY and not probe.is_gnn:
                continue
            if name == "heads" and probe.encoder_kind != "gat":
                continue
            if name == "rnn_hidden" and probe.decoder_kind is None:
                continue
            fields.append(name)
        return fields

    def points(self, architecture: str) -> list[dict]:
        """Cross product over the fields that apply to ``architecture``, in a fixed order."""
        names = self.relevant_fields(architecture)
        lists = [list(getattr(self, n)) for n in names]
        return [dict(zip(names, combo)) for combo in itertools.product(*lists)]


def config_for(architecture: str, point: dict, seed: int) -> ModelConfig:
    return ModelConfig(architecture, seed=seed, **point).validate()


def select_best(rows: list[dict]) -> int:
    """Index of the row with maximal mean validation AUC; earliest wins ties."""
    best, best_score = None, None
    for i, r in enumerate(rows):
        score = r.get("val_score")
        if score is None:
            continue
        if best_score is None or score > best_score:
            best, best_score = i, score
    if best is None:
        raise InfludynError("no grid configuration trained successfully")
    return best


def val_score(seen: float | None, unseen: float | None) -> float | None:
    vals = [v for v in (seen, unseen) if v is not None]
    return sum(vals) / len(vals) if vals else None


def _run_cell(args) -> dict:
    index, cfg, net, spec, train_cfg = args
    start = time.perf_counter()
    model = build_model(cfg, net.feature_width)
    res = train_model(model, net, spec, train_cfg)
    seen, unseen = res.best_val.get("val_auc_seen"), res.best_val.get("val_auc_unseen")
    return {
        "val_auc_seen": seen,
        "val_auc_unseen": unseen,
        "val_score": val_score(seen, unseen),
        "best_epoch": res.best_epoch,
        "epochs_run": res.epochs_run,
        "wall_time_seconds": time.perf_counter() - start,
    }


@dataclass
class GridResult:
    best_config: ModelConfig
    best_index: int
    rows: list[dict]


def grid_search(
    grid: GridSpec,
    architecture: str,
    net: DynamicNetwork,
    spec: WindowSpec,
    train_cfg: TrainConfig,
    seed: int = 0,
    jobs: int = 1,
    on_error: str = "raise",
    trainer: Callable[[int, ModelConfig], dict] | None = None,
) -> GridResult:
    """Train one model per grid point and pick the best by mean validation AUC.

    Cell ``i`` uses model seed ``seed + i``. ``trainer(i, cfg)`` may
    replace real training and must return the validation AUCs.
    ``on_error="record"`` keeps failed cells as rows with an ``error``.
    """
    if on_error not in ("raise", "record"):
        raise ConfigError("on_error must be 'raise' or 'record'")
    points = grid.points(architecture)
    configs = [config_for(architecture, p, seed + i) for i, p in enumerate(points)]
    rows = [{"index": i, "architecture": architecture, **p, "seed": c.seed} for i, (p, c) in enumerate(zip(points, configs))]

    def collect(i, fn):
        try:
            out = fn()
        except InfludynError as exc:
            if on_error == "raise":
                raise type(exc)(f"grid config {i} {points[i]}: {exc}") from exc
            out = {"val_score": None, "error": f"{type(exc).__name__}: {exc}"}
        if "val_score" not in out:
            out["val_score"] = val_score(out.get("val_auc_seen"), out.get("val_auc_unseen"))
        rows[i].update(out)

    if trainer is not None:
        for i, c in enumerate(configs):
            collect(i, lambda i=i, c=c: trainer(i, c))
    elif jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_cell, (i, c, net, spec, train_cfg)) for i, c in enumerate(configs)]
            # reduce in enumeration order so results do not depend on scheduling
            for i, fut in enumerate(futures):
                collect(i, fut.result)
    else:
        for i, c in enumerate(configs):
            collect(i, lambda i=i, c=c: _run_cell((i, c, net, spec, train_cfg)))
    best = select_best(rows)
    for i, r in enumerate(rows):
        r["best"] = int(i == best)
    return GridResult(configs[best], best, rows)


def write_results_csv(rows: list[dict], path) -> Path:
    columns = ["index", "architecture", *GRID_FIELDS, "seed", "val_auc_seen", "val_auc_unseen",
               "val_score", "best_epoch", "epochs_run", "wall_time_seconds", "error", "best"]
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({c: ("" if r.get(c) is None else r.get(c)) for c in columns})
    return path
