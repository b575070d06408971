"""Seeded sampling of the secure sensor network topology.

A network is the intersection of two graphs on the same n nodes:

- the uniform q-intersection graph, with an edge when two key rings share at
  least q keys, and
- the on/off channel graph, with each pair independently on with probability p.

Randomness comes from counter-based Philox generators keyed by
``(master seed, stream)``; trials derive their own seeds with :meth:`Seed.spawn`,
so results do not depend on evaluation order or worker count.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from enum import IntEnum
from pathlib import Path
from typing import Literal, TextIO

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import sparse

from ..errors import GraphDimensionError, InvalidArgumentError, ResultsWriteError
from .probability import ModelParams

logger = logging.getLogger(__name__)

# Above this many nodes the channel overlay is only evaluated on secure pairs.
DENSE_OVERLAY_MAX_NODES = 512

_SPAWN_TAG = 0
_STREAM_TAG = 1


class Stream(IntEnum):
    KEY_RINGS = 0
    CHANNELS = 1


class Seed(BaseModel):
    """64-bit master seed; sub-generators and child seeds derive from it deterministically."""

    model_config = ConfigDict(frozen=True)

    master: int = Field(default=0, ge=0, lt=2**64)

    def spawn(self, *keys: int) -> Seed:
        """Child seed for e.g. (row index, trial index)."""
        sequence = np.random.SeedSequence(self.master, spawn_key=(_SPAWN_TAG, *keys))
        return Seed(master=int(sequence.generate_state(1, dtype=np.uint64)[0]))

    def generator(self, stream: Stream) -> np.random.Generator:
        sequence = np.random.SeedSequence(self.master, spawn_key=(_STREAM_TAG, int(stream)))
        return np.random.Generator(np.random.Philox(sequence))


class Graph:
    """Immutable undirected simple graph on nodes 0..n-1.

    Edges are stored once as a lexicographically sorted ``(m, 2)`` array with
    ``i < j``; adjacency is kept as sorted neighbour lists in CSR form.
    """

    __slots__ = ("n", "_edges", "_indptr", "_indices")

    def __init__(self, n: int, edges: np.ndarray | Iterable[tuple[int, int]] = ()) -> None:
        if n < 0:
            raise InvalidArgumentError(f"node count must be nonnegative, got {n}")
        if not isinstance(edges, np.ndarray):
            edges = list(edges)
        pairs = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if pairs.size:
            if pairs.min() < 0 or pairs.max() >= n:
                raise InvalidArgumentError(f"edge endpoint outside 0..{n - 1}")
            if np.any(pairs[:, 0] == pairs[:, 1]):
                raise InvalidArgumentError("self-loops are not allowed")
            lo = np.minimum(pairs[:, 0], pairs[:, 1])
            hi = np.maximum(pairs[:, 0], pairs[:, 1])
            keys = np.unique(lo * n + hi)
            pairs = np.column_stack((keys // n, keys % n))
        pairs.setflags(write=False)
        self.n = n
        self._edges = pairs

        sources = np.concatenate((pairs[:, 0], pairs[:, 1]))
        targets = np.concatenate((pairs[:, 1], pairs[:, 0]))
        order = np.lexsort((targets, sources))
        self._indices = targets[order]
        self._indptr = np.concatenate(([0], np.cumsum(np.bincount(sources, minlength=n)))).astype(np.int64)
        self._indices.setflags(write=False)
        self._indptr.setflags(write=False)

    @classmethod
    def empty(cls, n: int) -> Graph:
        return cls(n)

    @classmethod
    def complete(cls, n: int) -> Graph:
        rows, cols = np.triu_indices(n, k=1)
        return cls(n, np.column_stack((rows, cols)))

    @property
    def edges(self) -> np.ndarray:
        return self._edges

    @property
    def edge_count(self) -> int:
        return int(self._edges.shape[0])

    def neighbors(self, node: int) -> np.ndarray:
        return self._indices[self._indptr[node] : self._indptr[node + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self._indptr)

    def has_edge(self, i: int, j: int) -> bool:
        row = self.neighbors(i)
        pos = int(np.searchsorted(row, j))
        return pos < row.size and int(row[pos]) == j

    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset((int(i), int(j)) for i, j in self._edges)

    def adjacency_matrix(self) -> sparse.csr_matrix:
        data = np.ones(self._indices.size, dtype=np.int8)
        return sparse.csr_matrix((data, self._indices, self._indptr), shape=(self.n, self.n))

    def bitsets(self) -> list[int]:
        """Neighbourhoods as integer bitmasks; meant for small oracle graphs."""
        if self.n > 512:
            raise InvalidArgumentError(f"bitset adjacency is limited to 512 nodes, got {self.n}")
        masks = [0] * self.n
        for i, j in self._edges:
            masks[i] |= 1 << int(j)
            masks[j] |= 1 << int(i)
        return masks

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self._edges, other._edges)

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.edge_count})"


class KeyAssignment(BaseModel):
    """Key rings of all nodes: row i holds node i's K distinct key ids in [0, P), sorted."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    rings: np.ndarray
    pool_size: int = Field(ge=1)

    @model_validator(mode="after")
    def _check_rings(self) -> KeyAssignment:
        rings = self.rings
        if rings.ndim != 2 or rings.shape[1] < 1:
            raise ValueError(f"rings must be an (n, K) array with K >= 1, got shape {rings.shape}")
        if rings.size and (rings.min() < 0 or rings.max() >= self.pool_size):
            raise ValueError(f"key identifiers must lie in [0, {self.pool_size})")
        if np.any(np.diff(np.sort(rings, axis=1), axis=1) == 0):
            raise ValueError("a key ring holds the same key twice")
        return self

    @classmethod
    def from_sets(cls, rings: Sequence[Iterable[int]], pool_size: int) -> KeyAssignment:
        rows = [sorted(ring) for ring in rings]
        if len({len(row) for row in rows}) > 1:
            raise InvalidArgumentError("every key ring must have the same size")
        return cls(rings=np.asarray(rows, dtype=np.int64).reshape(len(rows), -1), pool_size=pool_size)

    @property
    def n(self) -> int:
        return int(self.rings.shape[0])

    @property
    def K(self) -> int:
        return int(self.rings.shape[1])

    def as_sets(self) -> list[frozenset[int]]:
        return [frozenset(int(key) for key in row) for row in self.rings]


def sample_key_rings(params: ModelParams, seed: Seed) -> KeyAssignment:
    """Draw n independent uniform K-subsets of the pool [0, P)."""
    if params.K > params.P:
        raise InvalidArgumentError(f"key ring size K={params.K} exceeds pool size P={params.P}")
    rng = seed.generator(Stream.KEY_RINGS)
    rings = np.empty((params.n, params.K), dtype=np.int64)
    for node in range(params.n):
        # Generator.choice without replacement is a partial Fisher-Yates shuffle,
        # or a set-based Floyd sampler when K is small against a large pool.
        rings[node] = np.sort(rng.choice(params.P, size=params.K, replace=False))
    return KeyAssignment(rings=rings, pool_size=params.P)


def pairwise_overlaps(rings: KeyAssignment) -> sparse.coo_matrix:
    """|S_i & S_j| for every pair i < j sharing at least one key (upper triangle, COO)."""
    n, K = rings.rings.shape
    incidence = sparse.csr_matrix(
        (np.ones(n * K, dtype=np.int32), (np.repeat(np.arange(n), K), rings.rings.ravel())),
        shape=(n, rings.pool_size),
    )
    return sparse.triu(incidence @ incidence.T, k=1, format="coo")


def build_q_intersection_graph(rings: KeyAssignment, q: int) -> Graph:
    """Edge {i, j} iff rings i and j share at least q keys."""
    if q < 1:
        raise InvalidArgumentError(f"overlap threshold q must be >= 1, got q={q}")
    shared = pairwise_overlaps(rings)
    keep = shared.data >= q
    return Graph(rings.n, np.column_stack((shared.row[keep], shared.col[keep])))


def pair_index(n: int, i: np.ndarray | int, j: np.ndarray | int) -> np.ndarray:
    """Position of pair (i, j), i < j, in row-major upper-triangle order."""
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    return i * (2 * n - i - 1) // 2 + (j - i - 1)


def channel_uniforms(n: int, seed: Seed) -> np.ndarray:
    """One uniform draw per unordered pair, indexed by :func:`pair_index`."""
    return seed.generator(Stream.CHANNELS).random(n * (n - 1) // 2)


def sample_er_graph(n: int, p: float, seed: Seed) -> Graph:
    """On/off channel graph: each pair independently on with probability p."""
    if not 0.0 <= p <= 1.0:
        raise InvalidArgumentError(f"channel probability must lie in [0, 1], got p={p}")
    uniforms = channel_uniforms(n, seed)
    rows, cols = np.triu_indices(n, k=1)
    on = uniforms < p
    return Graph(n, np.column_stack((rows[on], cols[on])))


def intersect(a: Graph, b: Graph) -> Graph:
    if a.n != b.n:
        raise GraphDimensionError(f"cannot intersect graphs on {a.n} and {b.n} nodes")
    n = a.n
    if n == 0:
        return Graph(0)
    keys = np.intersect1d(
        a.edges[:, 0] * n + a.edges[:, 1],
        b.edges[:, 0] * n + b.edges[:, 1],
        assume_unique=True,
    )
    return Graph(n, np.column_stack((keys // n, keys % n)))


def generate_network(
    params: ModelParams,
    seed: Seed,
    overlay: Literal["auto", "sparse", "dense"] = "auto",
) -> Graph:
    """Sample one network: q-intersection graph of fresh key rings, intersected with the channel graph.

    ``"dense"`` samples the full channel graph and intersects; ``"sparse"``
    looks up the channel draw of each secure pair only. Both read the same
    per-pair uniforms and give identical graphs for the same seed.
    """
    rings = sample_key_rings(params, seed)
    secure = build_q_intersection_graph(rings, params.q)
    if overlay == "auto":
        overlay = "dense" if params.n <= DENSE_OVERLAY_MAX_NODES else "sparse"
    if overlay == "dense":
        return intersect(secure, sample_er_graph(params.n, params.p, seed))
    if overlay != "sparse":
        raise InvalidArgumentError(f"unknown overlay strategy {overlay!r}")
    uniforms = channel_uniforms(params.n, seed)
    pairs = secure.edges
    on = uniforms[pair_index(params.n, pairs[:, 0], pairs[:, 1])] < params.p
    logger.debug(f"secure pairs: {secure.edge_count}, after channel overlay: {int(on.sum())}")
    return Graph(params.n, pairs[on])


def format_edge_list(g: Graph) -> str:
    lines = [f"{g.n} {g.edge_count}"]
    lines.extend(f"{i} {j}" for i, j in g.edges)
    return "\n".join(lines) + "\n"


def write_edge_list(g: Graph, destination: str | Path | TextIO) -> None:
    """Write "n m" followed by one "i j" line per edge (i < j, sorted)."""
    text = format_edge_list(g)
    if isinstance(destination, (str, Path)):
        try:
            Path(destination).write_text(text, encoding="utf-8", newline="\n")
        except OSError as e:
            raise ResultsWriteError(str(destination), e) from e
    else:
        destination.write(text)


def read_edge_list(source: str | Path | TextIO) -> Graph:
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
    lines = text.splitlines()
    first = lines[0] if lines else ""
    if len(first.split()) != 2:
        raise InvalidArgumentError(f"edge list needs an \"n m\" header line, got {first!r}")
    n, m = (int(field) for field in first.split())
    edges = [tuple(int(field) for field in line.split()) for line in lines[1 : m + 1]]
    if len(edges) != m:
        raise InvalidArgumentError(f"edge list declares {m} edges but holds {len(edges)}")
    return Graph(n, edges)
