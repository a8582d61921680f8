"""Train/validation/test month ranges and 1-month-shift sliding windows."""
from __future__ import annotations

from dataclasses import dataclass

from ..errors import ConfigError
from ..graph import DynamicNetwork


def make_windows(months, window_len: int) -> list[range]:
    """Consecutive ``window_len``-month windows over ``months`` with stride 1."""
    months = range(months.start, months.stop) if isinstance(months, range) else range(min(months), max(months) + 1)
    if window_len < 1:
        raise ConfigError(f"window_len must be positive, got {window_len}")
    if len(months) < window_len:
        raise ConfigError(f"month range of length {len(months)} is shorter than window_len {window_len}")
    return [range(s, s + window_len) for s in range(months.start, months.stop - window_len + 1)]


@dataclass(frozen=True)
class WindowSpec:
    train_months: range
    val_months: range
    test_months: range
    window_len: int = 3
    shift: int = 1

    def __post_init__(self):
        if self.shift != 1:
            raise ConfigError("windows always shift by one month")
        parts = (("train", self.train_months), ("val", self.val_months), ("test", self.test_months))
        for name, r in parts:
            if r.step != 1 or len(r) < self.window_len:
                raise ConfigError(f"{name} range {r} must be contiguous and hold at least {self.window_len} months")
        if not (self.train_months.stop <= self.val_months.start and self.val_months.stop <= self.test_months.start):
            raise ConfigError("train, validation and test ranges must be disjoint and in chronological order")

    @classmethod
    def default(cls, n_months: int, window_len: int = 3, first_month: int = 0) -> "WindowSpec":
        """Last ``window_len`` months test, the ``window_len`` before them validation, the rest train."""
        if n_months < 3 * window_len:
            raise ConfigError(f"{n_months} months cannot hold three ranges of {window_len}-month windows")
        end = first_month + n_months
        return cls(
            train_months=range(first_month, end - 2 * window_len),
            val_months=range(end - 2 * window_len, end - window_len),
            test_months=range(end - window_len, end),
            window_len=window_len,
        )

    @classmethod
    def from_dict(cls, d: dict) -> "WindowSpec":
        def rng(v):
            return range(int(v[0]), int(v[1]) + 1)

        return cls(rng(d["train_months"]), rng(d["val_months"]), rng(d["test_months"]), int(d.get("window_len", 3)))

    def to_dict(self) -> dict:
        def span(r):
            return [r.start, r.stop - 1]

        return {
            "train_months": span(self.train_months),
            "val_months": span(self.val_months),
            "test_months": span(self.test_months),
            "window_len": self.window_len,
            "shift": self.shift,
        }

    def windows(self, split: str) -> list[range]:
        r = {"train": self.train_months, "val": self.val_months, "test": self.test_months}[split]
        return make_windows(r, self.window_len)

    def check_network(self, net: DynamicNetwork) -> None:
        months = net.months
        if self.train_months.start < months.start or self.test_months.stop > months.stop:
            raise ConfigError(f"window spec {self.to_dict()} does not fit network months {months}")


def split_seen_unseen(net: DynamicNetwork, spec: WindowSpec) -> tuple[set[int], set[int]]:
    """Seen: present in some training month. Unseen: first appears in the test range."""
    spec.check_network(net)
    born = net.first_month()
    seen = {n for n, m in born.items() if m < spec.train_months.stop}
    unseen = {n for n, m in born.items() if spec.test_months.start <= m < spec.test_months.stop}
    return seen, unseen


def validation_groups(net: DynamicNetwork, spec: WindowSpec) -> tuple[set[int], set[int]]:
    """The seen/unseen split mirrored onto the validation range."""
    born = net.first_month()
    seen = {n for n, m in born.items() if m < spec.train_months.stop}
    unseen = {n for n, m in born.items() if spec.val_months.start <= m < spec.val_months.stop}
    return seen, unseen
