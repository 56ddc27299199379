import numpy as np
import pytest
from hypothesis import settings

from qexpander.graphs import BipartiteGraph
from qexpander.hgp import build_code, hypergraph_product

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

H_PAIR = np.array([[1, 1]], dtype=np.uint8)
H_CHAIN = np.array([[1, 1, 0], [0, 1, 1]], dtype=np.uint8)


@pytest.fixture(scope="session")
def pair_code():
    return hypergraph_product(BipartiteGraph.from_matrix(H_PAIR))


@pytest.fixture(scope="session")
def chain_code():
    return hypergraph_product(BipartiteGraph.from_matrix(H_CHAIN))


@pytest.fixture(scope="session")
def small_code():
    """n = 100, k = 10 product of a random (3, 4)-biregular 8x6 seed."""
    return build_code(8, 6, 3, 4, seed=0)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed", "xfailed", "xpassed"):
        for rep in terminalreporter.stats.get(key, []):
            for name, value in getattr(rep, "user_properties", []):
                if name == "criterion":
                    lines.append(value)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":").split(".")[0])):
            terminalreporter.write_line(line)
