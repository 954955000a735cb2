import numpy as np
import pytest

from rssiloc import AnchorTruth, PathLossParams, Point2, Topology


def make_topology(anchors, blind, sigma_a=0.0, sigma_p=0.0):
    if np.isscalar(sigma_a):
        sigma_a = [sigma_a] * len(anchors)
    return Topology(
        tuple(AnchorTruth(Point2(*xy), sa, sigma_p) for xy, sa in zip(anchors, sigma_a)),
        Point2(*blind),
    )


@pytest.fixture
def params():
    return PathLossParams(d0=1.0, p0_dbm=-33.44, eta=3.567)


@pytest.fixture
def triangle():
    """Anchors (0,0), (10,0), (0,10) around blind (2,3), noiseless."""
    return make_topology([(0, 0), (10, 0), (0, 10)], (2, 3))


@pytest.fixture
def six_anchor():
    """Fixed heterogeneous 6-anchor layout in a 40 m square."""
    return make_topology(
        [(4.0, 6.0), (35.0, 3.0), (37.0, 30.0), (20.0, 38.0), (2.0, 25.0), (15.0, 15.0)],
        (18.0, 21.0),
        sigma_a=[5.0, 5.0, 5.0, 1.0, 1.0, 1.0],
        sigma_p=3.0,
    )


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def check(label: str, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
