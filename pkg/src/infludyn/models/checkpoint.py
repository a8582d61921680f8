"""Model checkpoints: ``model.json`` manifest plus raw little-endian ``params.bin``."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import BundleError
from .assembly import InfluencerModel, ModelConfig, build_model

FORMAT_VERSION = 1


def save_checkpoint(model: InfluencerModel, path) -> Path:
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    params = model.named_parameters()
    manifest = {
        "format_version": FORMAT_VERSION,
        "architecture": model.cfg.architecture,
        "config": model.cfg.to_dict(),
        "input_dim": model.input_dim,
        "parameters": [{"name": n, "shape": list(p.shape)} for n, p in params.items()],
    }
    (root / "model.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    blob = b"".join(np.ascontiguousarray(p.values, dtype="<f8").tobytes() for p in params.values())
    (root / "params.bin").write_bytes(blob)
    return root


def load_checkpoint(path) -> InfluencerModel:
    root = Path(path)
    for name in ("model.json", "params.bin"):
        if not (root / name).is_file():
            raise BundleError(f"{root}: missing checkpoint file {name}")
    try:
        manifest = json.loads((root / "model.json").read_text(encoding="utf-8"))
        cfg = ModelConfig.from_dict(manifest["config"])
        input_dim = int(manifest["input_dim"])
        entries = manifest["parameters"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise BundleError(f"model.json is malformed: {exc}") from None
    model = build_model(cfg, input_dim)
    expected = model.named_parameters()
    names = [e["name"] for e in entries]
    if names != list(expected):
        raise BundleError("model.json parameter list does not match the architecture")
    blob = (root / "params.bin").read_bytes()
    sizes = [int(np.prod(e["shape"])) for e in entries]
    if len(blob) != 8 * sum(sizes):
        raise BundleError(f"params.bin holds {len(blob)} bytes; the manifest needs {8 * sum(sizes)}")
    flat = np.frombuffer(blob, dtype="<f8").astype(np.float64)
    if not np.all(np.isfinite(flat)):
        raise BundleError("params.bin contains non-finite values")
    state, offset = {}, 0
    for e, size in zip(entries, sizes):
        shape = tuple(e["shape"])
        if shape != expected[e["name"]].shape:
            raise BundleError(f"parameter {e['name']}: manifest shape {shape} vs architecture {expected[e['name']].shape}")
        state[e["name"]] = flat[offset: offset + size].reshape(shape)
        offset += size
    model.load_state(state)
    return model
