"""On-disk network bundle: a manifest plus per-month node and edge CSVs."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from ..errors import BundleError, DataError, MonotonicityError
from .labels import parse_label_mode
from .network import COLOR_NAMES, DynamicNetwork, ReferralEvent, Snapshot, validate_monotone

FORMAT_VERSION = 1


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def save_network(net: DynamicNetwork, path) -> Path:
    """Write ``net`` as a bundle directory; output is byte-deterministic."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format_version": FORMAT_VERSION,
        "first_month": net.snapshots[0].month,
        "n_months": net.n_months,
        "feature_width": net.feature_width,
        "feature_names": list(net.feature_names),
        "label_mode": net.label_mode,
    }
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    names = list(net.feature_names)
    for s in net.snapshots:
        rows = (
            [str(nid)] + [repr(float(x)) for x in feats] + [str(int(y))]
            for nid, feats, y in zip(s.node_ids.tolist(), s.features, s.labels)
        )
        _write_csv(root / f"nodes_{s.month}.csv", ["node_id"] + names + ["label"], rows)
        erows = ([int(u), int(v)] + [int(c) for c in col] for (u, v), col in zip(s.edges, s.colors))
        _write_csv(root / f"edges_{s.month}.csv", ["src", "dst"] + list(COLOR_NAMES), erows)
    events = sorted(net.referral_events, key=lambda e: (e.month, e.referrer, e.referred))
    _write_csv(root / "referrals.csv", ["referrer", "referred", "month"], (list(e) for e in events))
    return root


def _read_csv(path: Path, expected_header: list[str] | None = None) -> tuple[list[str], list[list[str]]]:
    if not path.is_file():
        raise BundleError(f"missing bundle file {path.name}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise BundleError(f"{path.name}: header row required")
    header, body = rows[0], rows[1:]
    if expected_header is not None and header != expected_header:
        raise BundleError(f"{path.name}: header {header} does not match expected {expected_header}")
    return header, body


def _read_nodes(path: Path, month: int, width: int | None):
    header, body = _read_csv(path)
    if len(header) < 2 or header[0] != "node_id" or header[-1] != "label":
        raise BundleError(f"{path.name}: header must start with node_id and end with label")
    f_width = len(header) - 2
    if width is not None and f_width != width:
        from ..errors import RaggedWidthError

        raise RaggedWidthError(f"month {month}: feature width {f_width} differs from manifest width {width}")
    ids, feats, labels = [], [], []
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise BundleError(f"{path.name}:{lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            ids.append(int(row[0]))
            feats.append([float(x) for x in row[1:-1]])
            labels.append(int(row[-1]))
        except ValueError as exc:
            raise BundleError(f"{path.name}:{lineno}: {exc}") from None
    feats_arr = np.array(feats, dtype=np.float64).reshape(len(ids), f_width)
    return header[1:-1], ids, feats_arr, labels


def load_network(path) -> DynamicNetwork:
    """Read and fully validate a bundle written by :func:`save_network`."""
    root = Path(path)
    mpath = root / "manifest.json"
    if not mpath.is_file():
        raise BundleError(f"{root}: missing manifest.json")
    try:
        manifest = json.loads(mpath.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise BundleError(f"manifest.json: {exc}") from None
    for key in ("n_months", "feature_width", "label_mode"):
        if key not in manifest:
            raise BundleError(f"manifest.json: missing key {key!r}")
    parse_label_mode(manifest["label_mode"])
    first = int(manifest.get("first_month", 0))
    width = int(manifest["feature_width"])
    names = manifest.get("feature_names")
    snapshots = []
    for m in range(first, first + int(manifest["n_months"])):
        col_names, ids, feats, labels = _read_nodes(root / f"nodes_{m}.csv", m, width)
        if names is not None and col_names != list(names):
            raise BundleError(f"nodes_{m}.csv: feature columns {col_names} differ from manifest")
        _, ebody = _read_csv(root / f"edges_{m}.csv", ["src", "dst"] + list(COLOR_NAMES))
        try:
            erows = np.array([[int(x) for x in r] for r in ebody], dtype=np.int64).reshape(-1, 5)
        except ValueError as exc:
            raise BundleError(f"edges_{m}.csv: {exc}") from None
        snapshots.append(Snapshot.build(m, ids, feats, labels, erows[:, :2], erows[:, 2:]))
    _, rbody = _read_csv(root / "referrals.csv", ["referrer", "referred", "month"])
    try:
        events = [ReferralEvent(*(int(x) for x in r)) for r in rbody]
    except (ValueError, TypeError) as exc:
        raise BundleError(f"referrals.csv: {exc}") from None
    net = DynamicNetwork(snapshots, referral_events=events, feature_names=names,
                         label_mode=manifest["label_mode"])
    violations = validate_monotone(net)
    if violations:
        v = violations[0]
        raise MonotonicityError(
            f"month {v.month}: {v.kind} monotonicity violated by {v.entity}"
            + (f" (+{len(violations) - 1} more)" if len(violations) > 1 else "")
        )
    known = set(net.snapshots[-1].node_ids.tolist())
    for e in events:
        for nid in (e.referrer, e.referred):
            if nid not in known:
                raise DataError(f"referrals.csv: month {e.month}: unknown node id {nid}")
    return net
