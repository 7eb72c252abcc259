from pathlib import Path

import pytest

from topgraph.graph_model import load_graph

DATA = Path(__file__).parent / "data"


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def loop_graph():
    return load_graph({"vertices": ["v"], "edges": [{"id": "e", "src": "v", "rng": "v"}]})


@pytest.fixture
def orbit_graph():
    """Loop e at v and two edges f, g from v into the sink w."""
    return load_graph((DATA / "orbit_example.graph").read_text())


@pytest.fixture
def two_loops():
    return load_graph(
        {"vertices": ["v"], "edges": [{"id": "e", "src": "v", "rng": "v"}, {"id": "f", "src": "v", "rng": "v"}]}
    )
