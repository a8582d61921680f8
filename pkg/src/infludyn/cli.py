"""Command-line entry point: ``infludyn {generate,train,gridsearch,evaluate}``.

A run is driven by a JSON config with optional sections::

    {"seed": 0,
     "generator": {...},          # GeneratorConfig fields
     "model": {...},              # ModelConfig fields (architecture required)
     "train": {...},              # TrainConfig fields
     "windows": {...},            # WindowSpec fields; default split if absent
     "grid": {...},               # GridSpec candidate lists
     "architecture": "gcn_gru",   # grid search target
     "n_bootstrap": 1000}

``--seed`` replaces the master seed, which then seeds the generator, the
model initialisation, training and the bootstrap. ``--set section.key=value``
overrides single keys (the value is parsed as JSON when possible). Every
output directory receives ``config.json`` holding the resolved config and
the library versions used.
"""
from __future__ import annotations

import argparse
import csv
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .errors import ConfigError, InfludynError
from .graph import GeneratorConfig, generate_synthetic, load_network, save_network
from .models import ModelConfig, build_model, load_checkpoint, save_checkpoint
from .pipeline import (
    GRID_FIELDS,
    GridSpec,
    TrainConfig,
    WindowSpec,
    grid_search,
    report_from_scores,
    score_table,
    train_model,
    write_results_csv,
)

SECTIONS = ("generator", "model", "train", "windows", "grid")
SCALARS = ("seed", "architecture", "n_bootstrap")


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    unknown = set(cfg) - set(SECTIONS) - set(SCALARS)
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
    return cfg


def apply_overrides(cfg: dict, seed: int | None, sets: list[str]) -> dict:
    cfg = json.loads(json.dumps(cfg))
    for item in sets:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        section, dot, field = key.partition(".")
        if dot:
            if section not in SECTIONS:
                raise ConfigError(f"--set: unknown section {section!r}")
            cfg.setdefault(section, {})[field] = value
        elif key in SCALARS:
            cfg[key] = value
        else:
            raise ConfigError(f"--set: unknown key {key!r}")
    if seed is not None:
        cfg["seed"] = seed
    cfg.setdefault("seed", 0)
    if not isinstance(cfg["seed"], int) or cfg["seed"] < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {cfg['seed']!r}")
    return cfg


def versions() -> dict:
    return {"infludyn": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def prepare_out(out: str | None, cfg: dict, command: str) -> Path:
    if out is None:
        raise ConfigError(f"{command} needs --out")
    root = Path(out)
    root.mkdir(parents=True, exist_ok=True)
    write_json(root / "config.json", {"command": command, "resolved": cfg, "versions": versions()})
    return root


def window_spec(cfg: dict, net) -> WindowSpec:
    if "windows" in cfg:
        spec = WindowSpec.from_dict(cfg["windows"])
    else:
        spec = WindowSpec.default(net.n_months, first_month=net.snapshots[0].month)
    spec.check_network(net)
    return spec


def train_config(cfg: dict) -> TrainConfig:
    return TrainConfig.from_dict({**cfg.get("train", {}), "seed": cfg["seed"]})


def model_config(cfg: dict) -> ModelConfig:
    if "architecture" not in cfg.get("model", {}):
        raise ConfigError("config needs model.architecture")
    return ModelConfig.from_dict({**cfg["model"], "seed": cfg["seed"]}).validate()


def need_data(data: str | None) -> str:
    if data is None:
        raise ConfigError("this command needs --data")
    return data


def write_scores(rows: list[dict], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=["month", "node_id", "group", "label", "score"], lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({**r, "score": repr(float(r["score"]))})


def fit_and_report(mcfg: ModelConfig, net, spec, tcfg, cfg: dict, root: Path) -> dict:
    """Train, checkpoint, score and report into ``root``; returns the timing record."""
    start = time.perf_counter()
    model = build_model(mcfg, net.feature_width)
    result = train_model(model, net, spec, tcfg)
    trained = time.perf_counter()
    save_checkpoint(model, root / "checkpoint")
    rows = score_table(model, net, spec)
    write_scores(rows, root / "scores.csv")
    report = report_from_scores(rows, mcfg.architecture, B=int(cfg.get("n_bootstrap", 1000)),
                                seed=cfg["seed"], config=mcfg.to_dict())
    report.write(root / "report.json")
    write_json(root / "history.json", {"best_epoch": result.best_epoch, "epochs_run": result.epochs_run,
                                       "history": result.history})
    done = time.perf_counter()
    timing = {"train_seconds": trained - start, "evaluate_seconds": done - trained, "total_seconds": done - start}
    write_json(root / "timing.json", timing)
    print(report.summary_line())
    return timing


def cmd_generate(args, cfg: dict) -> None:
    gcfg = GeneratorConfig.from_dict({**cfg.get("generator", {}), "seed": cfg["seed"]})
    gcfg.validate()
    cfg = {**cfg, "generator": gcfg.to_dict()}
    root = Path(args.out) if args.out else None
    if root is None:
        raise ConfigError("generate needs --out")
    net = generate_synthetic(gcfg)
    save_network(net, root / "network")
    prepare_out(args.out, cfg, "generate")
    print(f"months {net.n_months}, feature width {net.feature_width}, referrals {len(net.referral_events)}")
    for s in net.snapshots:
        print(f"month {s.month:3d}: nodes {len(s.node_ids):6d}  edges {len(s.edges):7d}  "
              f"influencer fraction {float(np.mean(s.labels)):.4f}")


def cmd_train(args, cfg: dict) -> None:
    net = load_network(need_data(args.data))
    spec = window_spec(cfg, net)
    mcfg, tcfg = model_config(cfg), train_config(cfg)
    cfg = {**cfg, "model": mcfg.to_dict(), "train": tcfg.to_dict(), "windows": spec.to_dict()}
    root = prepare_out(args.out, cfg, "train")
    fit_and_report(mcfg, net, spec, tcfg, cfg, root)


def cmd_gridsearch(args, cfg: dict) -> None:
    net = load_network(need_data(args.data))
    spec = window_spec(cfg, net)
    arch = cfg.get("architecture") or cfg.get("model", {}).get("architecture")
    if arch is None:
        raise ConfigError("gridsearch needs architecture")
    # fields without a candidate list fall back to the fixed model section
    fixed = {k: [v] for k, v in cfg.get("model", {}).items() if k in GRID_FIELDS}
    grid = GridSpec.from_dict({**fixed, **cfg.get("grid", {})})
    tcfg = train_config(cfg)
    cfg = {**cfg, "architecture": arch, "train": tcfg.to_dict(), "windows": spec.to_dict()}
    root = prepare_out(args.out, cfg, "gridsearch")
    start = time.perf_counter()
    result = grid_search(grid, arch, net, spec, tcfg, seed=cfg["seed"], jobs=args.jobs, on_error="record")
    write_results_csv(result.rows, root / "results.csv")
    failed = sum(1 for r in result.rows if r.get("error"))
    print(f"{len(result.rows)} configurations, {failed} failed, best index {result.best_index}")
    best = root / "best"
    best.mkdir(exist_ok=True)
    best_cfg = {**cfg, "seed": result.best_config.seed, "model": result.best_config.to_dict()}
    write_json(best / "config.json", {"command": "gridsearch-best", "resolved": best_cfg, "versions": versions()})
    timing = fit_and_report(result.best_config, net, spec, tcfg, best_cfg, best)
    write_json(root / "timing.json", {"grid_seconds": time.perf_counter() - start - timing["total_seconds"],
                                      "best_retrain_seconds": timing["total_seconds"]})


def cmd_evaluate(args, cfg: dict) -> None:
    if args.checkpoint is None:
        raise ConfigError("evaluate needs --checkpoint")
    model = load_checkpoint(args.checkpoint)
    net = load_network(need_data(args.data))
    if model.input_dim != net.feature_width:
        raise ConfigError(f"checkpoint expects {model.input_dim} input features; "
                          f"the bundle has {net.feature_width}")
    spec = window_spec(cfg, net)
    rows = score_table(model, net, spec)
    report = report_from_scores(rows, model.cfg.architecture, B=int(cfg.get("n_bootstrap", 1000)),
                                seed=cfg["seed"], config=model.cfg.to_dict())
    sys.stdout.write(report.to_json())
    if args.out:
        root = prepare_out(args.out, {**cfg, "windows": spec.to_dict()}, "evaluate")
        report.write(root / "report.json")
        write_scores(rows, root / "scores.csv")


COMMANDS = {"generate": cmd_generate, "train": cmd_train, "gridsearch": cmd_gridsearch, "evaluate": cmd_evaluate}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="infludyn", description="Influencer detection on dynamic graphs.")
    parser.add_argument("--version", action="version", version=f"infludyn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "generate": "write a synthetic referral-network bundle",
        "train": "train one model, evaluate it on the test windows",
        "gridsearch": "search a hyperparameter grid and retrain the best point",
        "evaluate": "evaluate a saved checkpoint",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config key, e.g. model.rnn_hidden=32")
        if name != "generate":
            p.add_argument("--data", help="network bundle directory")
        if name == "gridsearch":
            p.add_argument("--jobs", type=int, default=1, help="parallel grid cells (default 1)")
        if name == "evaluate":
            p.add_argument("--checkpoint", help="checkpoint directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if getattr(args, "jobs", 1) < 1:
            raise ConfigError("--jobs must be at least 1")
        cfg = apply_overrides(load_config(args.config), args.seed, args.set)
        COMMANDS[args.command](args, cfg)
    except (InfludynError, ValueError, OSError) as exc:
        print(f"infludyn {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
