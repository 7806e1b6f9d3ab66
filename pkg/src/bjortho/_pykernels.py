"""Numpy fallback for the compiled kernels in ``_ckernels.pyx``.

Every function here has the same signature and output as its compiled twin;
``tests/test_kernels.py`` checks that they agree.
"""

import numpy as np


def triangle_violations(dist, tol, limit):
    """Triples ``(i, j, k)`` with ``i < j``, ``k`` not in ``{i, j}`` and
    ``dist[i, j] > dist[i, k] + dist[k, j] + tol``, lexicographically sorted
    and truncated to ``limit`` rows."""
    dist = np.ascontiguousarray(dist, dtype=np.float64)
    n = dist.shape[0]
    upper = np.triu(np.ones((n, n), dtype=bool), 1)
    found = []
    for k in range(n):
        bad = dist > dist[:, k, None] + dist[None, k, :] + tol
        bad &= upper
        bad[k, :] = False
        bad[:, k] = False
        ii, jj = np.nonzero(bad)
        if ii.size:
            found.append(np.column_stack([ii, jj, np.full(ii.size, k)]))
    if not found:
        return np.empty((0, 3), dtype=np.int64)
    out = np.concatenate(found).astype(np.int64)
    order = np.lexsort((out[:, 2], out[:, 1], out[:, 0]))
    return out[order][:limit]


def count_components(dist, subset, eps):
    """Number of connected components of the graph on ``subset`` whose edges
    join points at distance ``<= eps``."""
    subset = np.asarray(subset, dtype=np.int64)
    m = subset.size
    if m == 0:
        return 0
    adj = np.asarray(dist, dtype=np.float64)[np.ix_(subset, subset)] <= eps
    seen = np.zeros(m, dtype=bool)
    components = 0
    for seed in range(m):
        if seen[seed]:
            continue
        components += 1
        frontier = np.zeros(m, dtype=bool)
        frontier[seed] = True
        seen[seed] = True
        while frontier.any():
            reach = adj[frontier].any(axis=0) & ~seen
            seen |= reach
            frontier = reach
    return components


def column_max_argmax(values):
    """Column-wise maximum of a 2-D array and the first row attaining it."""
    values = np.asarray(values, dtype=np.float64)
    arg = values.argmax(axis=0)
    return values[arg, np.arange(values.shape[1])], arg.astype(np.int64)


def min_second_difference(values):
    """Per-row minimum of ``v[j-1] - 2 v[j] + v[j+1]`` and the ``j`` attaining it."""
    values = np.asarray(values, dtype=np.float64)
    second = values[:, :-2] - 2.0 * values[:, 1:-1] + values[:, 2:]
    arg = second.argmin(axis=1)
    return second[np.arange(values.shape[0]), arg], (arg + 1).astype(np.int64)
