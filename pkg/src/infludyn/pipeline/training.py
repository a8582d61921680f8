"""Window-by-window training with Adam and validation-AUC early stopping."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .. import numcore as nc
from ..errors import ConfigError, DataError, NumericError
from ..graph import DynamicNetwork
from ..models import InfluencerModel, head_logits
from ..numcore import Tensor
from ..numcore.tensor import parameters_finite
from ..rng import stream
from .metrics import auc
from .smote import smote_oversample
from .windows import WindowSpec, validation_groups

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    max_epochs: int = 500
    early_stop_patience: int = 50
    lr: float = 1e-4
    seed: int = 0
    optimizer: str = "adam"
    loss: str = "bce"

    def __post_init__(self):
        if self.max_epochs < 1 or self.early_stop_patience < 1:
            raise ConfigError("max_epochs and early_stop_patience must be positive")
        if self.early_stop_patience > self.max_epochs:
            raise ConfigError("early_stop_patience cannot exceed max_epochs")
        if self.lr < 0:
            raise ConfigError("learning rate must be non-negative")
        if self.optimizer != "adam" or self.loss != "bce":
            raise ConfigError("only the adam optimizer with binary cross-entropy loss is supported")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown training config keys: {sorted(unknown)}")
        return cls(**d)


class EarlyStopping:
    """Tracks the best score; signals a stop after ``patience`` epochs without strict improvement."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best = -np.inf
        self.best_epoch = 0
        self.wait = 0

    def update(self, epoch: int, score: float) -> bool:
        """Record ``score``; True when it is a new best."""
        if score > self.best:
            self.best, self.best_epoch, self.wait = score, epoch, 0
            return True
        self.wait += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.wait >= self.patience


@dataclass
class TrainResult:
    model: InfluencerModel
    history: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    epochs_run: int = 0
    best_val: dict = field(default_factory=dict)


def window_scores(model: InfluencerModel, snaps, windows) -> list[tuple[int, np.ndarray, np.ndarray, np.ndarray]]:
    """(month, node_ids, labels, probabilities) for the last month of each window."""
    out = []
    for w in windows:
        ids, probs = model.predict_proba(snaps, w)
        out.append((w[-1], ids, snaps[w[-1]].labels, probs))
    return out


def group_auc(predictions, group: set[int]) -> float | None:
    """AUC over predictions whose node is in ``group``; None when a class is missing."""
    scores, labels = [], []
    for _, ids, y, p in predictions:
        keep = np.fromiter((i in group for i in ids.tolist()), dtype=bool, count=len(ids))
        scores.append(p[keep])
        labels.append(y[keep])
    s, y = np.concatenate(scores), np.concatenate(labels)
    if len(np.unique(y)) < 2:
        return None
    return auc(s, y)


def make_validator(net: DynamicNetwork, spec: WindowSpec) -> Callable[[InfluencerModel, dict], dict]:
    """Validation metric: mean of the seen- and unseen-node AUCs that are defined."""
    seen, unseen = validation_groups(net, spec)
    windows = spec.windows("val")

    def validate(model, snaps) -> dict:
        preds = window_scores(model, snaps, windows)
        s, u = group_auc(preds, seen), group_auc(preds, unseen)
        defined = [v for v in (s, u) if v is not None]
        if not defined:
            raise DataError("validation windows contain a single class; no AUC is defined")
        return {"val_auc_seen": s, "val_auc_unseen": u, "val_score": float(np.mean(defined))}

    return validate


def window_loss(model: InfluencerModel, snaps, window, training: bool, dropout_rng, smote_rng) -> Tensor:
    """BCE on the last month's labels, with SMOTE rows appended when configured."""
    ids, emb = model.embed(snaps, window, training=training, rng=dropout_rng)
    y = snaps[window[-1]].labels
    logits = head_logits(emb, model.head)
    rate = model.cfg.smote_rate
    if rate > 0 and len(np.unique(y)) == 2:
        aug, aug_y = smote_oversample(emb.values, y, rate, rng=smote_rng)
        synthetic = Tensor(aug[len(y):])
        if len(synthetic.values):
            # synthetic rows are constants; their gradient reaches the head only
            logits = nc.concat([logits, head_logits(synthetic, model.head)], axis=0)
            y = aug_y
    return nc.bce_with_logits(logits, y)


def train_model(
    model: InfluencerModel,
    net: DynamicNetwork,
    spec: WindowSpec,
    cfg: TrainConfig,
    validate: Callable[[InfluencerModel, dict], dict] | None = None,
    snaps: dict | None = None,
    on_epoch: Callable[[dict], None] | None = None,
) -> TrainResult:
    """Train in place and restore the parameters of the best validation epoch.

    Every epoch takes one Adam step per training window. ``validate``
    defaults to the seen/unseen validation AUC average; any callable
    returning a dict with ``val_score`` may replace it.
    """
    spec.check_network(net)
    snaps = model.prepare(net) if snaps is None else snaps
    windows = spec.windows("train")
    if not any(snaps[w[-1]].labels.any() for w in windows):
        raise DataError("no positive labels in any training window")
    validate = make_validator(net, spec) if validate is None else validate
    opt = nc.Adam(model.parameters(), lr=cfg.lr)
    dropout_rng = stream(cfg.seed, "dropout", model.cfg.seed)
    smote_rng = stream(cfg.seed, "smote", model.cfg.seed)
    stopper = EarlyStopping(cfg.early_stop_patience)
    result = TrainResult(model)
    best_state = model.state()
    for epoch in range(1, cfg.max_epochs + 1):
        losses = []
        for w in windows:
            opt.zero_grad()
            try:
                loss = window_loss(model, snaps, w, True, dropout_rng, smote_rng)
            except NumericError as exc:
                raise NumericError(f"epoch {epoch}, window {w.start}-{w.stop - 1}: {exc}") from None
            loss.backward()
            opt.step()
            if not parameters_finite(model.parameters()):
                raise NumericError(f"epoch {epoch}: parameters became non-finite")
            losses.append(loss.item())
        metrics = validate(model, snaps)
        record = {"epoch": epoch, "train_loss": float(np.mean(losses)), **metrics}
        result.history.append(record)
        if stopper.update(epoch, metrics["val_score"]):
            best_state = model.state()
            result.best_val = dict(metrics)
        if on_epoch is not None:
            on_epoch(record)
        log.debug("epoch %d loss %.5f val %.4f", epoch, record["train_loss"], metrics["val_score"])
        if stopper.should_stop:
            break
    model.load_state(best_state)
    result.best_epoch = stopper.best_epoch
    result.epochs_run = epoch
    return result
