"""Exact walk counting on unweighted graphs.

Everything here is integer-exact. The k-th power of the adjacency matrix
counts length-k walks entry by entry, its diagonal counts closed walks,
and two closed-form reductions turn closed-walk counts into subgraph
counts: each node's triangles are half its closed 3-walks, and the
number of 4-node simple cycles falls out of ``trace(A^4)`` after
removing the degenerate closed 4-walks (edge back-and-forth and
2-paths traversed both ways).

Counts are held in int64 matrices. Every multiplication first checks the
conservative bound ``inner_dim * max(a) * max(b) < 2**63`` and raises
:class:`CountOverflowError` instead of wrapping silently.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse

from .errors import CapacityError, CountOverflowError, InputError
from .graphs import Graph, degrees

__all__ = [
    "adjacency_counts",
    "mat_power",
    "power_apply",
    "diag_closed_walks",
    "triangle_counts_per_node",
    "triangle_total",
    "four_cycle_count",
    "count_simple_cycles_brute",
]

_INT64_MAX = 2**63 - 1


def adjacency_counts(g: Graph, with_self_loops: bool = False) -> np.ndarray:
    """Dense int64 adjacency matrix, optionally with the diagonal set to 1."""
    a = np.zeros((g.n, g.n), dtype=np.int64)
    for v, nbrs in enumerate(g.adjacency):
        a[v, list(nbrs)] = 1
    if with_self_loops:
        np.fill_diagonal(a, 1)
    return a


def _as_count_matrix(a) -> np.ndarray:
    m = np.asarray(a)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InputError(f"count matrix must be square 2-D, got shape {m.shape}")
    if not np.issubdtype(m.dtype, np.integer):
        raise InputError(f"count matrix must be integer, got dtype {m.dtype}")
    if (m < 0).any():
        raise InputError("count matrix entries must be nonnegative")
    return m.astype(np.int64)


def _checked_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # Entries are nonnegative, so every product entry is at most
    # inner_dim * max(a) * max(b); reject before int64 could wrap.
    bound = int(a.shape[1]) * int(a.max(initial=0)) * int(b.max(initial=0))
    if bound > _INT64_MAX:
        raise CountOverflowError(
            f"walk counts would exceed 2**63 - 1 (bound {bound})"
        )
    return a @ b


def mat_power(a, k: int) -> np.ndarray:
    """Exact k-th power of a nonnegative integer matrix (k >= 1)."""
    m = _as_count_matrix(a)
    if k < 1:
        raise InputError(f"power must be >= 1, got {k}")
    out = m
    for _ in range(k - 1):
        out = _checked_matmul(out, m)
    return out


def power_apply(a, k: int, h) -> np.ndarray:
    """Compute ``A^k @ h`` by k successive sparse applications.

    ``A^k`` is never materialised; each step costs one sparse
    matrix-vector (or matrix-block) product. Integer inputs stay exact
    and are overflow-checked; float inputs come back as float64.
    """
    m = np.asarray(a)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InputError(f"matrix must be square 2-D, got shape {m.shape}")
    if k < 1:
        raise InputError(f"power must be >= 1, got {k}")
    x = np.asarray(h)
    vector_in = x.ndim == 1
    if vector_in:
        x = x[:, None]
    if x.shape[0] != m.shape[0]:
        raise InputError(f"operand rows {x.shape[0]} do not match matrix size {m.shape[0]}")
    exact = np.issubdtype(m.dtype, np.integer) and np.issubdtype(x.dtype, np.integer)
    if exact:
        m = _as_count_matrix(m)
        if (x < 0).any():
            raise InputError("integer operand entries must be nonnegative")
        x = x.astype(np.int64)
        # Iterated conservative bound: entries grow by at most a factor
        # of n * max(A) per application.
        bound = int(x.max(initial=0))
        factor = int(m.shape[0]) * int(m.max(initial=0))
        for _ in range(k):
            bound *= max(factor, 1)
            if bound > _INT64_MAX:
                raise CountOverflowError(
                    f"walk counts would exceed 2**63 - 1 (bound {bound})"
                )
        s = sparse.csr_array(m)
    else:
        s = sparse.csr_array(m.astype(np.float64))
        x = x.astype(np.float64)
    for _ in range(k):
        x = s @ x
    return x[:, 0] if vector_in else x


def diag_closed_walks(g: Graph, m: int) -> np.ndarray:
    """Per-node count of closed walks of length exactly m (diagonal of A^m)."""
    return np.diagonal(mat_power(adjacency_counts(g), m)).copy()


def triangle_counts_per_node(g: Graph) -> np.ndarray:
    """Triangles through each node: half the node's closed 3-walks."""
    closed3 = diag_closed_walks(g, 3)
    assert not (closed3 % 2).any()
    return closed3 // 2


def triangle_total(g: Graph) -> int:
    """Number of triangle subgraphs; each is seen from its three nodes."""
    per_node = triangle_counts_per_node(g)
    total = int(per_node.sum())
    assert total % 3 == 0
    return total // 3


def four_cycle_count(g: Graph) -> int:
    """Number of simple 4-cycle subgraphs.

    Closed 4-walks decompose into genuine 4-cycles (8 walks each: 4
    starts x 2 directions), edge back-and-forths (2 per edge), and
    2-paths walked out-and-back from either end (4 per path), so

        C4 = (trace(A^4) - 2 * edge_count - 4 * sum_v C(d_v, 2)) / 8.
    """
    a2 = mat_power(adjacency_counts(g), 2)
    # trace(A^4) = sum of squared entries of A^2; entries are at most n,
    # so the int64 sum is safe for any graph that fits in memory.
    trace4 = int((a2 * a2).sum())
    paths2 = sum(d * (d - 1) // 2 for d in degrees(g))
    raw = trace4 - 2 * g.edge_count - 4 * paths2
    assert raw >= 0 and raw % 8 == 0
    return raw // 8


_BRUTE_NODE_GUARD = {3: 64, 4: 64, 5: 40}


def count_simple_cycles_brute(g: Graph, length: int) -> int:
    """Count simple cycles of the given length by exhaustive DFS.

    Reference implementation for cross-checking the closed forms; cost
    grows like n * d^(length-1). Guards: length in {3, 4, 5} and n <= 64
    (40 for length 5).
    """
    if length not in _BRUTE_NODE_GUARD:
        raise InputError(f"cycle length must be 3, 4, or 5, got {length}")
    guard = _BRUTE_NODE_GUARD[length]
    if g.n > guard:
        raise CapacityError(
            f"brute-force cycle count supports n <= {guard} for length {length}, got n={g.n}"
        )
    adj = [set(nbrs) for nbrs in g.adjacency]
    total = 0

    def walks_back(u: int, remaining: int, start: int, seen: set[int]) -> int:
        if remaining == 1:
            return 1 if start in adj[u] else 0
        count = 0
        for w in adj[u]:
            if w > start and w not in seen:
                seen.add(w)
                count += walks_back(w, remaining - 1, start, seen)
                seen.remove(w)
        return count

    for s in range(g.n):
        # Each cycle is found at its minimal node, once per direction.
        total += walks_back(s, length, s, {s})
    assert total % 2 == 0
    return total // 2
