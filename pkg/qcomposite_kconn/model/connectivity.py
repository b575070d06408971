"""Degree and vertex-connectivity predicates of sampled networks."""

from __future__ import annotations

import itertools
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import sparse
from scipy.sparse.csgraph import breadth_first_order, connected_components, maximum_flow

from ..errors import ConnectivityInvariantError, InvalidArgumentError
from .graph_model import Graph

logger = logging.getLogger(__name__)

BRUTEFORCE_MAX_NODES = 10


class ConnectivityReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    k: int = Field(ge=1)
    min_degree: int = Field(ge=0)
    kappa: int = Field(ge=0)
    """Node connectivity; n - 1 for complete graphs, 0 when disconnected."""

    component_count: int = Field(ge=1)
    k_connected: bool
    f_event: bool
    """Minimum degree at least k, yet not k-connected."""

    f_level_event: bool
    """kappa = l and minimum degree > l, evaluated at l = kappa < k."""

    @model_validator(mode="after")
    def _check_consistency(self) -> ConnectivityReport:
        if self.kappa > self.min_degree:
            raise ValueError(f"kappa={self.kappa} exceeds min degree {self.min_degree}")
        if self.k_connected != (self.kappa >= self.k):
            raise ValueError("k_connected disagrees with kappa >= k")
        if self.n >= 2 and (self.component_count == 1) != (self.kappa >= 1):
            raise ValueError("a graph on n >= 2 nodes is connected iff kappa >= 1")
        if self.f_event and (self.min_degree < self.k or self.k_connected):
            raise ValueError("f_event requires min degree >= k and kappa < k")
        return self


def _require_nodes(g: Graph) -> None:
    if g.n < 1:
        raise InvalidArgumentError("graph must have at least one node")


def min_degree(g: Graph) -> int:
    _require_nodes(g)
    return int(g.degrees().min())


def is_connected(g: Graph) -> bool:
    _require_nodes(g)
    if g.n == 1:
        return True
    reached = breadth_first_order(g.adjacency_matrix(), 0, directed=False, return_predecessors=False)
    return len(reached) == g.n


def component_count(g: Graph) -> int:
    _require_nodes(g)
    count, _ = connected_components(g.adjacency_matrix(), directed=False)
    return int(count)


class _SplitNetwork:
    """Unit vertex capacities: node v becomes 2v -> 2v+1 with capacity 1.

    The number of internally disjoint s-t paths is the max flow from s's out
    copy to t's in copy. A super source 2n feeds every out copy; only the
    queried source's arc is opened, with the cap as its capacity, so the flow
    stops growing once it reaches the cap.
    """

    def __init__(self, g: Graph) -> None:
        n = g.n
        nodes = np.arange(n, dtype=np.int32)
        heads = g.edges[:, 0].astype(np.int32)
        tails = g.edges[:, 1].astype(np.int32)
        rows = np.concatenate((2 * nodes, 2 * heads + 1, 2 * tails + 1, np.full(n, 2 * n, dtype=np.int32)))
        cols = np.concatenate((2 * nodes + 1, 2 * tails, 2 * heads, 2 * nodes + 1))
        caps = np.concatenate(
            (
                np.ones(n, dtype=np.int32),
                np.full(heads.size, n, dtype=np.int32),
                np.full(tails.size, n, dtype=np.int32),
                np.ones(n, dtype=np.int32),
            )
        )
        network = sparse.csr_matrix((caps, (rows, cols)), shape=(2 * n + 1, 2 * n + 1))
        network.sum_duplicates()
        network.sort_indices()
        self._n = n
        self._data = network.data
        self._indices = network.indices
        self._indptr = network.indptr
        start, end = int(network.indptr[2 * n]), int(network.indptr[2 * n + 1])
        self._feeds = slice(start, end)
        self._slot = np.empty(n, dtype=np.intp)
        self._slot[(network.indices[start:end] - 1) // 2] = np.arange(start, end)

    def local_connectivity(self, s: int, t: int, cap: int | None = None) -> int:
        data = self._data.copy()
        data[self._feeds] = 0
        data[self._slot[s]] = self._n if cap is None else cap
        size = 2 * self._n + 1
        network = sparse.csr_matrix((data, self._indices.copy(), self._indptr.copy()), shape=(size, size))
        return int(maximum_flow(network, 2 * self._n, 2 * t, method="dinic").flow_value)


def local_node_connectivity(g: Graph, s: int, t: int, *, cap: int | None = None) -> int:
    """Internally disjoint s-t paths between two distinct non-adjacent nodes, at most ``cap`` when given."""
    _require_nodes(g)
    if not (0 <= s < g.n and 0 <= t < g.n) or s == t:
        raise InvalidArgumentError(f"need two distinct nodes in [0, {g.n}), got s={s}, t={t}")
    if g.has_edge(s, t):
        raise InvalidArgumentError(f"nodes {s} and {t} are adjacent")
    if cap is not None and cap < 0:
        raise InvalidArgumentError(f"cap must be >= 0, got {cap}")
    return _SplitNetwork(g).local_connectivity(s, t, cap)


def node_connectivity(g: Graph, *, stop_below: int | None = None) -> int:
    """Vertex connectivity kappa(g) via unit-capacity max flow.

    Takes a minimum-degree node v and the minimum of deg(v), the local
    connectivity from v to every non-neighbour, and the local connectivity
    between every non-adjacent pair of v's neighbours. Stops once the running
    value reaches 1, which connectivity already guarantees.

    Each flow is capped at the running minimum, and a pair with at least that
    many common neighbours is skipped, since each common neighbour is a path
    of its own.

    With ``stop_below`` the search also returns as soon as the running value
    falls below it; the result is then only an upper bound.
    """
    _require_nodes(g)
    n = g.n
    if n == 1 or not is_connected(g):
        return 0
    degrees = g.degrees()
    v = int(np.argmin(degrees))
    best = int(degrees[v])
    if best == n - 1:
        return best

    def settled() -> bool:
        return best <= 1 or (stop_below is not None and best < stop_below)

    network = _SplitNetwork(g)
    neighbors = g.neighbors(v)
    adjacent = np.zeros(n, dtype=bool)
    adjacent[neighbors] = True
    adjacent[v] = True
    shared = np.asarray(g.adjacency_matrix()[neighbors].sum(axis=0, dtype=np.int64)).ravel()
    for w in np.flatnonzero(~adjacent):
        if settled():
            return best
        if shared[w] >= best:
            continue
        best = min(best, network.local_connectivity(v, int(w), cap=best))
    for x, y in itertools.combinations(neighbors.tolist(), 2):
        if settled():
            return best
        if g.has_edge(x, y):
            continue
        if np.intersect1d(g.neighbors(x), g.neighbors(y), assume_unique=True).size >= best:
            continue
        best = min(best, network.local_connectivity(x, y, cap=best))
    return best


def _spans(masks: list[int], alive: int) -> bool:
    start = alive & -alive
    seen = frontier = start
    while frontier:
        reach = 0
        bits = frontier
        while bits:
            low = bits & -bits
            reach |= masks[low.bit_length() - 1]
            bits ^= low
        frontier = reach & alive & ~seen
        seen |= frontier
    return seen == alive


def node_connectivity_bruteforce(g: Graph) -> int:
    """Smallest vertex set whose removal disconnects the rest, by exhaustive search (n <= 10)."""
    _require_nodes(g)
    n = g.n
    if n > BRUTEFORCE_MAX_NODES:
        raise InvalidArgumentError(f"brute force is limited to {BRUTEFORCE_MAX_NODES} nodes, got {n}")
    if g.edge_count == n * (n - 1) // 2:
        return n - 1
    masks = g.bitsets()
    everyone = (1 << n) - 1
    for size in range(n - 1):
        for removed in itertools.combinations(range(n), size):
            alive = everyone
            for node in removed:
                alive &= ~(1 << node)
            if not _spans(masks, alive):
                return size
    return n - 1


def is_k_connected(g: Graph, k: int) -> bool:
    if k < 1:
        raise InvalidArgumentError(f"connectivity order k must be >= 1, got k={k}")
    if min_degree(g) < k:
        return False
    return node_connectivity(g, stop_below=k) >= k


def analyze(g: Graph, k: int) -> ConnectivityReport:
    if k < 1:
        raise InvalidArgumentError(f"connectivity order k must be >= 1, got k={k}")
    delta = min_degree(g)
    kappa = node_connectivity(g)
    if kappa > delta:
        logger.error(f"node connectivity {kappa} exceeds minimum degree {delta} on {g!r}")
        raise ConnectivityInvariantError(f"kappa={kappa} > min degree={delta}")
    return ConnectivityReport(
        n=g.n,
        k=k,
        min_degree=delta,
        kappa=kappa,
        component_count=component_count(g),
        k_connected=kappa >= k,
        f_event=delta >= k and kappa < k,
        f_level_event=kappa < k and delta > kappa,
    )
