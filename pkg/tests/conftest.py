import numpy as np
import pytest

from infludyn.graph import DynamicNetwork, ReferralEvent, Snapshot, label_nodes


def toy_network(seed: int = 0, width: int = 3) -> DynamicNetwork:
    """Six nodes over two months; node 5 joins in month 1."""
    rng = np.random.default_rng(seed)
    e0 = np.array([[0, 1], [1, 2], [2, 3], [3, 4]])
    c0 = np.array([[0, 0, 1], [1, 0, 1], [0, 1, 0], [1, 1, 1]])
    e1 = np.array([[0, 1], [0, 5], [1, 2], [2, 3], [3, 4], [4, 5]])
    c1 = np.array([[0, 1, 1], [0, 0, 1], [1, 0, 1], [0, 1, 0], [1, 1, 1], [1, 0, 0]])
    s0 = Snapshot.build(0, np.arange(5), rng.standard_normal((5, width)), np.zeros(5), e0, c0)
    s1 = Snapshot.build(1, np.arange(6), rng.standard_normal((6, width)), np.zeros(6), e1, c1)
    net = DynamicNetwork([s0, s1], referral_events=[ReferralEvent(0, 5, 0), ReferralEvent(3, 1, 1)])
    labels = label_nodes(net, "ex_post_cumulative")
    net.snapshots = [s.with_labels(y) for s, y in zip(net.snapshots, labels)]
    return net


@pytest.fixture
def toy():
    return toy_network()


ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number: int, passed: bool, detail: str) -> None:
    line = f"ACCEPTANCE {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
