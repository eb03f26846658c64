import pytest

from resistwalk import FamilySpec, build_graph, generate


@pytest.fixture(scope="session")
def triangle():
    return build_graph([(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)])


@pytest.fixture(scope="session")
def graph_set(triangle):
    """The standing cross-family test set: name -> graph."""
    return {
        "path-10": generate(FamilySpec("path", 10)),
        "triangle": triangle,
        "vicsek-2": generate(FamilySpec("vicsek", 2)),
        "gasket-3": generate(FamilySpec("gasket", 3)),
        "carpet-1": generate(FamilySpec("carpet", 1)),
        "wired_carpet-1": generate(FamilySpec("wired_carpet", 1)),
    }
