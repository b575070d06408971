import itertools

from qcomposite_kconn.model.graph_model import Graph


def path_graph(n: int) -> Graph:
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> Graph:
    return Graph(n, [(i, (i + 1) % n) for i in range(n)])


def star_graph(n: int) -> Graph:
    return Graph(n, [(0, i) for i in range(1, n)])


def complete_bipartite(a: int, b: int) -> Graph:
    return Graph(a + b, [(i, a + j) for i in range(a) for j in range(b)])


def cliques_sharing(size: int, shared: int) -> Graph:
    """Two cliques on `size` nodes that have `shared` nodes in common."""
    first = range(size)
    second = range(size - shared, 2 * size - shared)
    edges = list(itertools.combinations(first, 2)) + list(itertools.combinations(second, 2))
    return Graph(2 * size - shared, edges)


def two_triangles_at_a_node() -> Graph:
    return Graph(5, [(0, 1), (0, 2), (1, 2), (2, 3), (2, 4), (3, 4)])
