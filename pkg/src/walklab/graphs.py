"""Immutable simple graphs and walk-bounded aggregation regions.

Graphs are finite, undirected, unweighted, and loop-free, with nodes
``0..n-1``. The aggregation regions come in two kinds per radius ``k``:

* kind ``"D"``: the subgraph a node can cover with returning walks of
  length at most ``2k``. By BFS distance from the root ``v`` this is
  nodes ``{u : d(u) <= k}`` and edges ``{(i, j) : d(i) + d(j) <= 2k - 1}``.
* kind ``"L"``: the same with walk length at most ``2k + 1``, which
  additionally picks up edges between two nodes at distance exactly
  ``k`` (``d(i) + d(j) <= 2k``).

For every root the regions nest: ``D_k ⊆ L_k ⊆ D_{k+1}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError

__all__ = [
    "Graph",
    "RegionSpec",
    "RootedSubgraph",
    "from_edge_list",
    "path_graph",
    "cycle_graph",
    "complete_graph",
    "disjoint_union",
    "relabel",
    "erdos_renyi",
    "degrees",
    "bfs_distances",
    "extract_region",
    "read_edge_list",
    "write_edge_list",
    "parse_edge_list",
    "format_edge_list",
]


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph with a fixed node set ``0..n-1``.

    ``adjacency[v]`` is the sorted tuple of neighbours of ``v``; the
    structure is symmetric, loop-free, and duplicate-free. Instances are
    hashable and compare by value.
    """

    n: int
    adjacency: tuple[tuple[int, ...], ...]
    edge_count: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise InputError(f"graph needs at least one node, got n={self.n}")
        if len(self.adjacency) != self.n:
            raise InputError("adjacency length does not match node count")
        seen = 0
        for v, nbrs in enumerate(self.adjacency):
            if list(nbrs) != sorted(set(nbrs)):
                raise InputError(f"neighbour list of {v} is not sorted and duplicate-free")
            for u in nbrs:
                if not 0 <= u < self.n:
                    raise InputError(f"node id {u} out of range 0..{self.n - 1}")
                if u == v:
                    raise InputError(f"self-loop at node {v}")
                if v not in self.adjacency[u]:
                    raise InputError(f"edge ({v}, {u}) is not symmetric")
            seen += len(nbrs)
        if seen != 2 * self.edge_count:
            raise InputError("edge_count does not match adjacency")

    def edges(self) -> list[tuple[int, int]]:
        """All edges as (u, v) pairs with u < v, in sorted order."""
        return [(v, u) for v in range(self.n) for u in self.adjacency[v] if v < u]

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adjacency[u]


def from_edge_list(n: int, edges) -> Graph:
    """Build a graph from an iterable of (u, v) pairs.

    Duplicate edges (in either order) collapse to one; self-loops are
    dropped. Node ids outside ``0..n-1`` raise :class:`InputError`.
    """
    if n < 1:
        raise InputError(f"graph needs at least one node, got n={n}")
    pairs = set()
    for u, v in edges:
        if not (0 <= u < n and 0 <= v < n):
            raise InputError(f"edge ({u}, {v}) out of range for n={n}")
        if u == v:
            continue
        pairs.add((min(u, v), max(u, v)))
    nbrs: list[list[int]] = [[] for _ in range(n)]
    for u, v in pairs:
        nbrs[u].append(v)
        nbrs[v].append(u)
    adjacency = tuple(tuple(sorted(a)) for a in nbrs)
    return Graph(n=n, adjacency=adjacency, edge_count=len(pairs))


def path_graph(n: int) -> Graph:
    return from_edge_list(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise InputError(f"cycle needs at least 3 nodes, got {n}")
    return from_edge_list(n, [(i, (i + 1) % n) for i in range(n)])


def complete_graph(n: int) -> Graph:
    return from_edge_list(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def disjoint_union(g1: Graph, g2: Graph) -> Graph:
    """New graph holding g1 on ids 0..n1-1 and g2 shifted up by n1."""
    shifted = [(u + g1.n, v + g1.n) for u, v in g2.edges()]
    return from_edge_list(g1.n + g2.n, g1.edges() + shifted)


def relabel(g: Graph, perm) -> Graph:
    """Apply a node permutation: node v of g becomes perm[v]."""
    perm = list(perm)
    if sorted(perm) != list(range(g.n)):
        raise InputError("perm is not a permutation of 0..n-1")
    return from_edge_list(g.n, [(perm[u], perm[v]) for u, v in g.edges()])


def erdos_renyi(n: int, p: float, seed) -> Graph:
    """G(n, p) sample; each of the C(n, 2) edges is kept with probability p.

    ``seed`` may be an int or a ``numpy.random.SeedSequence``; draws come
    from numpy's PCG64 stream, one uniform per node pair in row-major
    pair order, so samples are reproducible bit-for-bit across runs.
    """
    if n < 1:
        raise InputError(f"graph needs at least one node, got n={n}")
    if not 0.0 <= p <= 1.0:
        raise InputError(f"edge probability must be in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.shape[0]) < p
    return from_edge_list(n, zip(iu[keep].tolist(), ju[keep].tolist()))


def degrees(g: Graph) -> list[int]:
    """Loop-free degree of every node."""
    return [len(nbrs) for nbrs in g.adjacency]


def bfs_distances(g: Graph, v: int) -> list[float]:
    """Hop distances from v; unreachable nodes get math.inf."""
    if not 0 <= v < g.n:
        raise InputError(f"node {v} out of range 0..{g.n - 1}")
    dist: list[float] = [math.inf] * g.n
    dist[v] = 0
    frontier = [v]
    d = 0
    while frontier:
        d += 1
        nxt = []
        for u in frontier:
            for w in g.adjacency[u]:
                if dist[w] > d:
                    dist[w] = d
                    nxt.append(w)
        frontier = nxt
    return dist


@dataclass(frozen=True)
class RegionSpec:
    """Which aggregation region to extract: kind ``"D"`` or ``"L"``, radius >= 1."""

    kind: str
    radius: int

    def __post_init__(self) -> None:
        if self.kind not in ("D", "L"):
            raise InputError(f"region kind must be 'D' or 'L', got {self.kind!r}")
        if self.radius < 1:
            raise InputError(f"region radius must be >= 1, got {self.radius}")

    def max_walk_length(self) -> int:
        """Longest returning walk the region accounts for."""
        return 2 * self.radius + (1 if self.kind == "L" else 0)


@dataclass(frozen=True)
class RootedSubgraph:
    """A region around ``root``: node ids and edges of the host graph.

    Edges are stored as (u, v) pairs with u < v. The node set is always
    connected through the stored edges and contains the root.
    """

    root: int
    nodes: frozenset[int]
    edges: frozenset[tuple[int, int]]


def extract_region(g: Graph, v: int, spec: RegionSpec) -> RootedSubgraph:
    """Extract the D- or L-region of radius ``spec.radius`` around v.

    Nodes are those within BFS distance ``k`` of v. An edge (i, j) of g
    is kept when ``d(i) + d(j) <= 2k - 1`` for kind D, or ``<= 2k`` for
    kind L; both thresholds say a returning walk through the edge fits
    the region's walk-length budget.
    """
    dist = bfs_distances(g, v)
    k = spec.radius
    budget = 2 * k - 1 if spec.kind == "D" else 2 * k
    nodes = frozenset(u for u in range(g.n) if dist[u] <= k)
    edges = frozenset(
        (i, j) for i, j in g.edges() if dist[i] + dist[j] <= budget
    )
    return RootedSubgraph(root=v, nodes=nodes, edges=edges)


def parse_edge_list(text: str) -> Graph:
    """Parse the plain text graph format.

    The first data line is ``n m``; each of the next m lines is an edge
    ``u v``. Blank lines and lines starting with ``#`` are ignored, as is
    a trailing ``#`` comment on any line.
    """
    rows = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append(line)
    if not rows:
        raise InputError("empty edge-list input")
    head = rows[0].split()
    if len(head) != 2:
        raise InputError(f"expected header 'n m', got {rows[0]!r}")
    try:
        n, m = int(head[0]), int(head[1])
    except ValueError as exc:
        raise InputError(f"bad header {rows[0]!r}") from exc
    if len(rows) - 1 != m:
        raise InputError(f"header declares {m} edges but {len(rows) - 1} lines follow")
    edges = []
    for line in rows[1:]:
        parts = line.split()
        if len(parts) != 2:
            raise InputError(f"expected edge 'u v', got {line!r}")
        try:
            edges.append((int(parts[0]), int(parts[1])))
        except ValueError as exc:
            raise InputError(f"bad edge line {line!r}") from exc
    return from_edge_list(n, edges)


def format_edge_list(g: Graph) -> str:
    lines = [f"{g.n} {g.edge_count}"]
    lines.extend(f"{u} {v}" for u, v in g.edges())
    return "\n".join(lines) + "\n"


def read_edge_list(path) -> Graph:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_edge_list(fh.read())


def write_edge_list(g: Graph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_edge_list(g))
