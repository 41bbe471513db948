"""Reference computations independent of the package's own code paths."""

import itertools
import math
from fractions import Fraction

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, minimum_spanning_tree


def _is_forest(edges, n_vertices):
    parent = list(range(n_vertices))

    def root(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for a, b in edges:
        ra, rb = root(a), root(b)
        if ra == rb:
            return False
        parent[ra] = rb
    return True


def brute_force_max_spanning_trees(Wn):
    """All maximum-weight spanning trees of K_{m,n}, by enumeration.

    Returns (best total weight, list of edge sets as (row, col) tuples).
    """
    m, n = Wn.shape
    edges = [(i, j) for i in range(m) for j in range(n)]
    best, trees = -math.inf, []
    for combo in itertools.combinations(edges, m + n - 1):
        if not _is_forest([(i, m + j) for i, j in combo], m + n):
            continue
        total = sum(Wn[i, j] for i, j in combo)
        if total > best + 1e-12:
            best, trees = total, [set(combo)]
        elif abs(total - best) <= 1e-12:
            trees.append(set(combo))
    return best, trees


def scipy_mst_weights(W):
    """Normalized weights on a maximum spanning forest, via scipy on 2 - w'.

    Zero entries are absent edges, matching the package convention.
    """
    absw = np.abs(np.asarray(W, dtype=float))
    wn = absw / absw.max()
    m, n = wn.shape
    r, c = np.nonzero(wn)
    # shift keeps every present edge strictly positive for scipy
    data = 2.0 - wn[r, c]
    graph = coo_matrix((data, (r, m + c)), shape=(m + n, m + n)).tocsr()
    tree = minimum_spanning_tree(graph).tocoo()
    return np.sort(2.0 - tree.data)[::-1]


def filtration_deaths(W):
    """Deaths of the super-level filtration by counting components per threshold.

    Independent of Kruskal: at each distinct normalized weight, the drop in
    the number of connected components is how many classes die there.
    """
    absw = np.abs(np.asarray(W, dtype=float))
    wn = absw / absw.max()
    m, n = wn.shape
    deaths = []
    prev = m + n
    for thr in sorted(set(wn[wn > 0].tolist()), reverse=True):
        r, c = np.nonzero(wn >= thr)
        adj = coo_matrix((np.ones(r.size), (r, m + c)), shape=(m + n, m + n))
        k, _ = connected_components(adj, directed=False)
        deaths.extend([thr] * (prev - k))
        prev = k
    return np.array(deaths)


def exact_bound(m, n, p=Fraction(1)):
    j = min(m, n)
    if j == 1:
        return Fraction(1)
    p = Fraction(p)
    total = sum(Fraction((m - i) * (n - i)) / (p * m * n - i) for i in range(j + 1))
    return min(Fraction(1), total / (m + n - 1))


def exact_pmf(m, n, alpha, w):
    q = Fraction(alpha, m * n)
    return math.comb(alpha, w) * q**w * (1 - q) ** (alpha - w)


def finite_difference(f, x, h=1e-5):
    """Central differences of scalar f with respect to every entry of array x (in place)."""
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = x[idx]
        x[idx] = orig + h
        up = f()
        x[idx] = orig - h
        down = f()
        x[idx] = orig
        grad[idx] = (up - down) / (2 * h)
    return grad
