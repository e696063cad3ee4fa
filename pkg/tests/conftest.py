import pytest

from eppa.amalgamation import enumerate_structures, is_graph_universe
from eppa.structures import GRAPH_SIGNATURE, Structure, graph


def all_graphs(size: int) -> list[Structure]:
    """Simple graphs on exactly `size` vertices, up to isomorphism."""
    return enumerate_structures(GRAPH_SIGNATURE, size, is_graph_universe)


@pytest.fixture(scope="session")
def graphs_up_to_4() -> list[Structure]:
    out = []
    for n in range(1, 5):
        out.extend(all_graphs(n))
    return out


@pytest.fixture(scope="session")
def graphs_up_to_3() -> list[Structure]:
    out = []
    for n in range(1, 4):
        out.extend(all_graphs(n))
    return out


@pytest.fixture
def k2() -> Structure:
    return graph(2, [(0, 1)])


@pytest.fixture
def k3() -> Structure:
    return graph(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def k4() -> Structure:
    return graph(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])


@pytest.fixture
def path3() -> Structure:
    return graph(3, [(0, 1), (1, 2)])
