"""Bipartite layer graphs and their maximum spanning forests.

A layer with weight matrix ``W`` of shape ``(m, n)`` is the complete
bipartite graph K_{m,n}: vertex ``i`` (0 <= i < m) is input unit ``i`` and
vertex ``m + j`` is output unit ``j``. Edge ``(i, j)`` carries the
normalized magnitude ``|W[i, j]| / max|W|``.

Entries whose normalized weight is exactly zero are treated as absent
edges, so a pruned layer is the subgraph of its surviving weights.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_weights

__all__ = [
    "UnionFind",
    "BipartiteLayer",
    "SpanningForest",
    "normalize_weights",
    "max_spanning_forest",
    "edge_order",
]


class UnionFind:
    """Disjoint-set forest with union by size and path halving."""

    def __init__(self, n):
        self.parent = list(range(n))
        self.size = [1] * n
        self.n_sets = n

    def find(self, x):
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a, b):
        """Merge the sets holding ``a`` and ``b``.

        Returns False when they were already in the same set.
        """
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.n_sets -= 1
        return True


@dataclass(frozen=True)
class BipartiteLayer:
    """Normalized bipartite graph of one layer.

    Attributes
    ----------
    m, n : int
        Input-side and output-side vertex counts.
    rows, cols : ndarray of int64
        Edge endpoints, one entry per weight, in row-major order.
    weights : ndarray of float64
        Normalized weights in [0, 1].
    w_max : float
        Largest absolute raw weight (0 for an all-zero layer).
    """

    m: int
    n: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    w_max: float

    @property
    def degenerate(self):
        return self.w_max == 0.0

    @property
    def n_edges(self):
        return int(self.weights.size)

    def as_matrix(self):
        out = np.zeros((self.m, self.n))
        out[self.rows, self.cols] = self.weights
        return out


@dataclass(frozen=True)
class SpanningForest:
    """Edges accepted by Kruskal's algorithm, in acceptance order.

    ``weights`` is therefore non-increasing.
    """

    m: int
    n: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    components_before: int
    components_after: int

    def __len__(self):
        return int(self.weights.size)

    @property
    def flat_indices(self):
        return self.rows * self.n + self.cols

    def edge_mask(self):
        """Boolean (m, n) matrix marking the forest edges."""
        out = np.zeros((self.m, self.n), dtype=bool)
        out[self.rows, self.cols] = True
        return out


def normalize_weights(W):
    """Build the normalized bipartite graph of a weight matrix.

    Parameters
    ----------
    W : array-like of shape (m, n)
        Raw layer weights, any sign or scale.

    Returns
    -------
    BipartiteLayer
        ``weights = |W| / max|W|``. For an all-zero matrix every weight is
        0, ``w_max`` is 0 and ``degenerate`` is True.

    Raises
    ------
    NonFiniteWeightError
        If any entry is NaN or infinite.
    """
    W = check_weights(W)
    m, n = W.shape
    absw = np.abs(W).ravel()
    w_max = float(absw.max())
    normed = absw / w_max if w_max > 0 else np.zeros_like(absw)
    flat = np.arange(m * n, dtype=np.int64)
    return BipartiteLayer(m, n, flat // n, flat % n, normed, w_max)


def edge_order(weights, flat_indices):
    """Indices sorting edges by descending weight, ties by ascending flat index."""
    return np.lexsort((flat_indices, -weights))


def max_spanning_forest(g):
    """Maximum spanning forest of a bipartite layer via Kruskal.

    Edges are scanned by descending normalized weight; equal weights are
    taken in row-major index order. Zero-weight edges are never admitted.
    The scan stops as soon as a spanning tree is complete.
    """
    m, n = g.m, g.n
    n_vertices = m + n
    w = g.weights
    flat = g.rows * n + g.cols
    order = edge_order(w, flat)
    # zero weights sort last; cut them off before the Python loop
    n_positive = int(np.count_nonzero(w > 0))
    order = order[:n_positive]

    uf = UnionFind(n_vertices)
    rows = g.rows[order].tolist()
    cols = g.cols[order].tolist()
    accepted = []
    target = n_vertices - 1
    for k, (r, c) in enumerate(zip(rows, cols)):
        if uf.union(r, m + c):
            accepted.append(k)
            if len(accepted) == target:
                break
    sel = order[np.asarray(accepted, dtype=np.int64)]
    return SpanningForest(
        m=m,
        n=n,
        rows=g.rows[sel],
        cols=g.cols[sel],
        weights=w[sel],
        components_before=n_vertices,
        components_after=uf.n_sets,
    )
