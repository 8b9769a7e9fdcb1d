import numpy as np
import pytest

from netspill import Graph

# 10-unit network used as the running toy example (rows are units 1..10)
TOY_ADJACENCY = """\
0 1 1 0 1 0 0 0 0 0
1 0 1 1 0 0 0 0 0 1
1 1 0 1 1 1 0 0 1 0
0 1 1 0 1 1 1 0 0 0
1 0 1 1 0 1 0 1 0 0
0 0 1 1 1 0 0 0 0 0
0 0 0 1 0 0 0 1 1 0
0 0 0 0 1 0 1 0 1 1
0 0 1 0 0 0 1 1 0 1
0 1 0 0 0 0 0 1 1 0
"""


@pytest.fixture
def toy_graph():
    a = np.array([[int(x) for x in row.split()] for row in TOY_ADJACENCY.splitlines()])
    return Graph.from_adjacency(a)


@pytest.fixture
def toy_file(tmp_path):
    p = tmp_path / "toy.txt"
    p.write_text(TOY_ADJACENCY)
    return p


@pytest.fixture
def path3():
    return Graph.from_edges(3, [(0, 1), (1, 2)])


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
