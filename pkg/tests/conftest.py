import pytest

from railode.rail import (Connection, EncodingConfig, Network, RailNode, RailwayProblem, Segment,
                          TrainSpec)


def linear_problem(J=10, stop=False, length=1000.0, trains=("T1",)):
    """start -> n1 -> n2 -> end, with n2 optionally a listed station."""
    nodes = [RailNode("s", boundary=True), RailNode("n1"), RailNode("n2", stop=stop),
             RailNode("e", boundary=True)]
    segs = [Segment("a", ("s", "b"), ("n1", "a"), 100.0, 40.0),
            Segment("b", ("n1", "b"), ("n2", "a"), length, 40.0),
            Segment("c", ("n2", "b"), ("e", "a"), 100.0, 40.0)]
    route = ("s", "n2", "e") if stop else ("s", "e")
    return RailwayProblem(Network(nodes, segs), [TrainSpec(t) for t in trains],
                          [Connection(t, route) for t in trains], config=EncodingConfig(J, 30.0))


def two_segment_problem(J=10):
    """Linear track A-1-B with a single train driving from A to B."""
    nodes = [RailNode("A", boundary=True), RailNode("1"), RailNode("B", boundary=True)]
    segs = [Segment("A1", ("A", "b"), ("1", "a"), 100.0, 40.0),
            Segment("1B", ("1", "b"), ("B", "a"), 100.0, 40.0)]
    return RailwayProblem(Network(nodes, segs), [TrainSpec("T1")], [Connection("T1", ("A",))],
                          config=EncodingConfig(J, 30.0))


@pytest.fixture
def linear():
    return linear_problem


ACCEPTANCE: dict = {}       # criterion number -> (status, summary)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        status, text = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {text}")
