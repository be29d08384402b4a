"""Shared fixtures and helpers for the test suite.

The key shared piece is `enumerate_best`, an oracle for maximum-weight
k-component spanning forests written with nothing but itertools and plain
Python.  It is deliberately independent of the package's own exhaustive
solver (`brute_force_forest`), so the two can vouch for each other: the
independent oracle validates the package oracle on small instances, and the
package oracle (being much faster) then backs the large randomized sweeps.
"""

import itertools

import numpy as np

from forestclust import (
    DIFFERENT,
    SAME,
    UNOBSERVED,
    PartialMembership,
    SimilarityMatrix,
)


def random_similarity(n: int, rng: np.random.Generator) -> SimilarityMatrix:
    """Random symmetric matrix with zero diagonal and continuous entries."""
    m = rng.standard_normal((n, n))
    sym = (m + m.T) / 2.0
    np.fill_diagonal(sym, 0.0)
    return SimilarityMatrix(sym)


def partial_from_pairs(n: int, pairs: dict) -> PartialMembership:
    """Build a PartialMembership from {(i, j): SAME/DIFFERENT} entries."""
    e = np.full((n, n), UNOBSERVED, dtype=np.int8)
    np.fill_diagonal(e, SAME)
    for (i, j), code in pairs.items():
        e[i, j] = e[j, i] = code
    return PartialMembership(e)


def observed_pairs(partial: PartialMembership) -> list:
    """Flatten a partial membership to [(i, j, co_clustered: bool), ...]."""
    out = []
    e = partial.entries
    for i in range(partial.n):
        for j in range(i + 1, partial.n):
            if e[i, j] != UNOBSERVED:
                out.append((i, j, e[i, j] == SAME))
    return out


def components_from_edges(n: int, edges) -> list:
    """Component id per node after merging along the given edges."""
    comp = list(range(n))
    for i, j in edges:
        ci, cj = comp[i], comp[j]
        if ci != cj:
            comp = [ci if c == cj else c for c in comp]
    return comp


def _acyclic(n: int, edges) -> bool:
    comp = list(range(n))
    for i, j in edges:
        ci, cj = comp[i], comp[j]
        if ci == cj:
            return False
        comp = [ci if c == cj else c for c in comp]
    return True


def enumerate_best(values: np.ndarray, k: int, observed=None):
    """Maximum-value k-component forests by exhaustive edge-subset scan.

    values: symmetric similarity matrix as a plain ndarray.
    observed: optional [(i, j, co_clustered)] constraints that the forest's
        components must reproduce exactly.

    Returns (best_value, [edge sets within 1e-12 of the best]); best_value is
    None when no acyclic (n-k)-edge subset satisfies the constraints.  Slow
    by design; intended for n <= 6.
    """
    n = values.shape[0]
    all_edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
    best_value = None
    best_sets = []
    for combo in itertools.combinations(all_edges, n - k):
        if not _acyclic(n, combo):
            continue
        if observed:
            comp = components_from_edges(n, combo)
            if any((comp[i] == comp[j]) != same for i, j, same in observed):
                continue
        value = sum(values[i, j] for i, j in combo)
        if best_value is None or value > best_value + 1e-12:
            best_value = value
            best_sets = [tuple(combo)]
        elif value >= best_value - 1e-12:
            best_sets.append(tuple(combo))
    return best_value, best_sets


def random_fully_labeled_subset_partial(n: int, rng: np.random.Generator):
    """A random instance of the exactness regime used by the constrained
    solver's guarantees: some subset of nodes gets full class labels and the
    observation set is every pair inside that subset.

    Returns (partial, labels) where labels[i] is None off the subset.
    """
    subset_size = int(rng.integers(0, n + 1))
    subset = sorted(rng.choice(n, size=subset_size, replace=False).tolist())
    labels = [None] * n
    if subset_size:
        classes = int(rng.integers(1, subset_size + 1))
        for v in subset:
            labels[v] = int(rng.integers(0, classes))
    e = np.full((n, n), UNOBSERVED, dtype=np.int8)
    np.fill_diagonal(e, SAME)
    for a_pos, a in enumerate(subset):
        for b in subset[a_pos + 1 :]:
            e[a, b] = e[b, a] = SAME if labels[a] == labels[b] else DIFFERENT
    return PartialMembership(e), labels
