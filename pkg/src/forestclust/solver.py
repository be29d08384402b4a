"""Exact maximum-weight k-spanning-forest solvers.

The unconstrained problem — pick n - k edges of the complete graph forming a
forest with maximum total similarity — is solved exactly by greedy Kruskal:
scan candidate edges by decreasing weight and keep every edge that joins two
distinct components, stopping once k components remain.

The constrained variant restricts the feasible forests to those whose
components agree with every observed entry of a partial membership.  Greedy
stays greedy but each candidate edge must pass three checks before it is
kept:

  (a) it joins two distinct components;
  (b) no node of one component is marked Different from a node of the other;
  (c) enough edge budget remains afterwards to finish every merge still
      forced by Same constraints (a component count bookkeeping argument:
      if g is a Same-closure group spread over t components, t - 1 of the
      remaining merges are already spoken for).

Check (c) is what keeps the greedy from painting itself into a corner where
the forest reaches k components while some Same pair is still split; without
it the output could silently violate the constraints whenever k exceeds the
number of labeled classes.

Optionally the ordering (not the reported value) is biased: Same pairs get a
large weight bonus and Different pairs the same penalty, so constrained
merges happen early.  The bias changes which optimum-adjacent forest the
greedy walks toward — with fully labeled data it is harmless, but when a
Same pair is better connected through unlabeled intermediates the biased
solution can be strictly worse than the true constrained maximum.  It is a
search heuristic, kept because it stabilizes training, and the reported
value is always measured against the unbiased weights.

A brute-force oracle (exhaustive enumeration over all forests, n <= 9) backs
every exactness claim in the test suite.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import (
    DIFFERENT,
    SAME,
    ForestAdjacency,
    InfeasibleConstraints,
    MembershipMatrix,
    PartialMembership,
    SimilarityMatrix,
    UnionFind,
    validate_partial,
)


@dataclass(frozen=True)
class ForestSolution:
    """A solved instance: the forest, its induced clustering, and the total
    weight of the chosen edges (each edge counted once)."""

    forest: ForestAdjacency
    membership: MembershipMatrix
    value: float


@lru_cache(maxsize=128)
def _tri(n: int):
    """Upper-triangle pair indexing for size n, cached.

    Returns (ui, uj) as numpy arrays plus plain-list copies for the pure
    Python inner loops.
    """
    ui, uj = np.triu_indices(n, 1)
    return ui, uj, ui.tolist(), uj.tolist()


def upper_vector(values: np.ndarray) -> np.ndarray:
    """Strict upper triangle of a square matrix as a flat (row-major) vector."""
    n = values.shape[0]
    ui, uj, _, _ = _tri(n)
    return np.ascontiguousarray(values[ui, uj])


def upper_index(i: int, j: int, n: int) -> int:
    """Position of pair (i, j), i < j, in the flat upper-triangle order."""
    if not 0 <= i < j < n:
        raise ValueError(f"need 0 <= i < j < n, got {(i, j)} with n={n}")
    return i * n - (i * (i + 1)) // 2 + (j - i - 1)


def _descending_order(w: np.ndarray) -> list:
    # Stable sort on the negated weights: ties fall back to the row-major
    # pair order, so the scan is fully deterministic.
    return np.argsort(-w, kind="stable").tolist()


def solve_upper(w: np.ndarray, n: int, k: int):
    """Greedy solve on a flat upper-triangle weight vector.

    Returns (chosen, assignment, value) where chosen lists positions into w
    in acceptance order and assignment maps each node to its component root.
    """
    _, _, ui, uj = _tri(n)
    order = _descending_order(w)
    parent = list(range(n))
    rank = [0] * n
    need = n - k
    chosen = []
    if need:
        for idx in order:
            i, j = ui[idx], uj[idx]
            ri = i
            while parent[ri] != ri:
                ri = parent[ri]
            while parent[i] != ri:
                parent[i], i = ri, parent[i]
            rj = j
            while parent[rj] != rj:
                rj = parent[rj]
            while parent[j] != rj:
                parent[j], j = rj, parent[j]
            if ri == rj:
                continue
            if rank[ri] < rank[rj]:
                ri, rj = rj, ri
            parent[rj] = ri
            if rank[ri] == rank[rj]:
                rank[ri] += 1
            chosen.append(idx)
            if len(chosen) == need:
                break
    assignment = []
    for v in range(n):
        r = v
        while parent[r] != r:
            r = parent[r]
        assignment.append(r)
    value = _edge_sum(w, chosen)
    return chosen, assignment, value


def _edge_sum(w: np.ndarray, indices) -> float:
    """Sum the weights of the given edge indices in ascending index order.

    Every value reported by this module goes through here, so two solutions
    with the same edge set always report bit-identical values no matter how
    the edges were discovered.
    """
    return float(w[sorted(indices)].sum()) if indices else 0.0


class ConstraintData:
    """Partial membership digested into bitmask form for fast repeated solves.

    node_conflict[v] is the bitmask of nodes that may never share a component
    with v; node_group[v] is the bit of v's Same-closure group (0 for nodes
    whose group is a singleton); forced_merges counts the merges any feasible
    forest must still perform when every node starts alone.
    """

    __slots__ = (
        "n",
        "node_conflict",
        "node_group",
        "forced_merges",
        "group_count",
        "same_upper",
        "diff_upper",
        "has_bias_pairs",
    )

    def __init__(self, partial: PartialMembership):
        validate_partial(partial)
        n = partial.n
        e = partial.entries
        self.n = n

        uf = UnionFind(n)
        si, sj = np.nonzero(np.triu(e == SAME, 1))
        for i, j in zip(si.tolist(), sj.tolist()):
            uf.union(i, j)
        roots = [uf.find(v) for v in range(n)]
        sizes = {}
        for r in roots:
            sizes[r] = sizes.get(r, 0) + 1
        self.group_count = len(sizes)
        self.forced_merges = n - self.group_count

        group_bit = {}
        self.node_group = [0] * n
        for v, r in enumerate(roots):
            if sizes[r] > 1:
                if r not in group_bit:
                    group_bit[r] = 1 << len(group_bit)
                self.node_group[v] = group_bit[r]

        diff = e == DIFFERENT
        np.fill_diagonal(diff, False)
        self.node_conflict = [0] * n
        for v in range(n):
            mask = 0
            for u in np.nonzero(diff[v])[0].tolist():
                mask |= 1 << u
            self.node_conflict[v] = mask

        ui, uj, _, _ = _tri(n)
        upper = e[ui, uj]
        self.same_upper = np.ascontiguousarray((upper == SAME).astype(np.float64))
        self.diff_upper = np.ascontiguousarray((upper == DIFFERENT).astype(np.float64))
        self.has_bias_pairs = bool(self.same_upper.any() or self.diff_upper.any())


def bias_weights(w: np.ndarray, cdata: ConstraintData) -> np.ndarray:
    """Ordering weights with Same pairs lifted above everything and Different
    pairs pushed below everything.  Only the scan order uses these."""
    if not cdata.has_bias_pairs:
        return w
    scale = float(np.abs(w).max()) if w.size else 0.0
    beta = 3.0 * (scale + 1.0)
    return w + beta * cdata.same_upper - beta * cdata.diff_upper


def solve_constrained_upper(
    w: np.ndarray, n: int, k: int, cdata: ConstraintData, use_bias: bool = True
):
    """Constrained greedy solve on a flat upper-triangle weight vector.

    Same return shape as solve_upper.  Raises InfeasibleConstraints when no
    forest with k components can satisfy the observed entries (or when the
    greedy scan exhausts all candidate edges early, which for partially
    observed patterns may be conservative).
    """
    if cdata.group_count < k:
        raise InfeasibleConstraints(
            f"Same constraints allow at most {cdata.group_count} components, "
            f"but k={k} was requested"
        )
    _, _, ui, uj = _tri(n)
    order = _descending_order(bias_weights(w, cdata) if use_bias else w)

    parent = list(range(n))
    rank = [0] * n
    nodes_mask = [1 << v for v in range(n)]
    conflict = list(cdata.node_conflict)
    groups = list(cdata.node_group)
    pending = cdata.forced_merges  # merges still owed to Same constraints
    comps = n
    need = n - k
    chosen = []
    if need:
        for idx in order:
            i, j = ui[idx], uj[idx]
            ri = i
            while parent[ri] != ri:
                ri = parent[ri]
            while parent[i] != ri:
                parent[i], i = ri, parent[i]
            rj = j
            while parent[rj] != rj:
                rj = parent[rj]
            while parent[j] != rj:
                parent[j], j = rj, parent[j]
            if ri == rj:
                continue
            if conflict[ri] & nodes_mask[rj]:
                continue
            shared = groups[ri] & groups[rj]
            after = pending - shared.bit_count() if shared else pending
            # Budget: the merges still forced by Same groups must fit in the
            # remaining component reductions, or k would be overshot later.
            if comps - 1 - after < k:
                continue
            if rank[ri] < rank[rj]:
                ri, rj = rj, ri
            parent[rj] = ri
            if rank[ri] == rank[rj]:
                rank[ri] += 1
            nodes_mask[ri] |= nodes_mask[rj]
            conflict[ri] |= conflict[rj]
            groups[ri] |= groups[rj]
            pending = after
            comps -= 1
            chosen.append(idx)
            if len(chosen) == need:
                break
    if len(chosen) < need:
        raise InfeasibleConstraints(
            f"could only reach {comps} components without violating the "
            f"constraints, but k={k} was requested"
        )
    assignment = []
    for v in range(n):
        r = v
        while parent[r] != r:
            r = parent[r]
        assignment.append(r)
    value = _edge_sum(w, chosen)
    return chosen, assignment, value


def _check_k(n: int, k: int) -> None:
    if not (1 <= k <= n):
        raise ValueError(f"k must be in 1..{n}, got {k}")


def _solution(n: int, chosen, assignment, value: float) -> ForestSolution:
    _, _, ui, uj = _tri(n)
    edges = tuple(sorted((ui[idx], uj[idx]) for idx in chosen))
    return ForestSolution(
        forest=ForestAdjacency(n, edges),
        membership=MembershipMatrix(np.array(assignment)),
        value=value,
    )


def max_spanning_forest(sigma: SimilarityMatrix, k: int) -> ForestSolution:
    """Maximum-weight spanning forest with exactly k components."""
    _check_k(sigma.n, k)
    w = upper_vector(sigma.values)
    return _solution(sigma.n, *solve_upper(w, sigma.n, k))


def constrained_max_spanning_forest(
    sigma: SimilarityMatrix,
    k: int,
    partial: PartialMembership,
    use_bias: bool = True,
) -> ForestSolution:
    """Maximum-weight k-spanning forest whose components agree with every
    observed entry of the partial membership.

    The single-pass greedy is exact -- optimal, and raising
    InfeasibleConstraints precisely when no satisfying forest exists -- for
    the observation patterns arising from labeled subsets in three regimes:
    all labeled nodes distinct (any k), k equal to the number of Same-closure
    groups counting unlabeled nodes as their own groups, and fully labeled
    nodes with k equal to the class count.  For other patterns the result is
    always feasible and never better than the true optimum, but the solver
    may conservatively raise InfeasibleConstraints on a satisfiable instance:
    deciding satisfiability of Different constraints embeds graph coloring,
    so an exact polynomial check cannot exist.
    """
    _check_k(sigma.n, k)
    if partial.n != sigma.n:
        raise ValueError(f"size mismatch: sigma n={sigma.n}, partial n={partial.n}")
    cdata = ConstraintData(partial)
    w = upper_vector(sigma.values)
    return _solution(
        sigma.n, *solve_constrained_upper(w, sigma.n, k, cdata, use_bias=use_bias)
    )


def components_of(forest: ForestAdjacency) -> MembershipMatrix:
    """Connected components of a forest as a hard membership."""
    uf = UnionFind(forest.n)
    for i, j in forest.edges:
        uf.union(i, j)
    return MembershipMatrix(np.array([uf.find(v) for v in range(forest.n)]))


# --- exhaustive oracle ------------------------------------------------------

_ORACLE_MAX_N = 9


def _observed_pairs(partial: PartialMembership):
    e = partial.entries
    out = []
    for i in range(partial.n):
        for j in range(i + 1, partial.n):
            if e[i, j] != -1:  # UNOBSERVED
                out.append((i, j, e[i, j] == SAME))
    return out


def _enumerate(n: int, w: list, observed, record):
    """Visit every spanning forest of the complete graph on n nodes exactly
    once, in increasing edge-index order, calling record(comp, edges, value)
    for each one whose components agree with the observed pairs.

    Forests that already co-cluster a Different pair are pruned with their
    whole subtree: extra edges only merge components further, so the
    violation can never heal.  Split Same pairs, by contrast, may still be
    joined deeper in the tree, so they are only tested at record time.
    """
    _, _, ui, uj = _tri(n)
    m = len(w)
    diff_pairs = [(i, j) for i, j, same in observed if not same] if observed else []

    def agrees(comp):
        for i, j, same in observed:
            if (comp[i] == comp[j]) != same:
                return False
        return True

    def visit(start, comp, edges, value):
        if not observed or agrees(comp):
            record(comp, edges, value)
        for idx in range(start, m):
            i, j = ui[idx], uj[idx]
            ci, cj = comp[i], comp[j]
            if ci == cj:
                continue
            child = [ci if c == cj else c for c in comp]
            if observed:
                bad = False
                for a, b in diff_pairs:
                    if child[a] == child[b]:
                        bad = True
                        break
                if bad:
                    continue
            edges.append(idx)
            visit(idx + 1, child, edges, value + w[idx])
            edges.pop()

    visit(0, list(range(n)), [], 0.0)


def _oracle_scan(sigma: SimilarityMatrix, partial: PartialMembership | None):
    """Best value and edge set for every edge count, by full enumeration."""
    n = sigma.n
    if n > _ORACLE_MAX_N:
        raise ValueError(f"exhaustive oracle is limited to n <= {_ORACLE_MAX_N}")
    observed = None
    if partial is not None:
        if partial.n != n:
            raise ValueError(f"size mismatch: sigma n={n}, partial n={partial.n}")
        validate_partial(partial)
        observed = _observed_pairs(partial)
    w = upper_vector(sigma.values).tolist()
    best_value = [None] * n  # indexed by edge count
    best_edges = [None] * n

    def record(comp, edges, value):
        e = len(edges)
        if best_value[e] is None or value > best_value[e]:
            best_value[e] = value
            best_edges[e] = tuple(edges)

    _enumerate(n, w, observed, record)
    return best_value, best_edges


def _oracle_solution(n: int, k: int, w: np.ndarray, best_value, best_edges) -> ForestSolution:
    e = n - k
    if best_value[e] is None:
        raise InfeasibleConstraints(
            f"no forest with {k} components satisfies the constraints"
        )
    _, _, ui, uj = _tri(n)
    edges = tuple(sorted((ui[idx], uj[idx]) for idx in best_edges[e]))
    forest = ForestAdjacency(n, edges)
    # Recompute through _edge_sum so the reported value is bit-identical to
    # the greedy solver's whenever the edge sets agree (the enumeration
    # accumulates in a different order and may differ in the last ulp).
    return ForestSolution(
        forest=forest,
        membership=components_of(forest),
        value=_edge_sum(w, list(best_edges[e])),
    )


def brute_force_forest(
    sigma: SimilarityMatrix, k: int, partial: PartialMembership | None = None
) -> ForestSolution:
    """Exhaustive-search reference solver (n <= 9).  Slow and trusted."""
    _check_k(sigma.n, k)
    best_value, best_edges = _oracle_scan(sigma, partial)
    return _oracle_solution(sigma.n, k, upper_vector(sigma.values), best_value, best_edges)


def brute_force_all_k(
    sigma: SimilarityMatrix, partial: PartialMembership | None = None
) -> dict:
    """Exhaustive reference solutions for every feasible k in one sweep.

    Returns {k: ForestSolution}; infeasible k values are simply absent.
    """
    best_value, best_edges = _oracle_scan(sigma, partial)
    w = upper_vector(sigma.values)
    out = {}
    for k in range(1, sigma.n + 1):
        if best_value[sigma.n - k] is not None:
            out[k] = _oracle_solution(sigma.n, k, w, best_value, best_edges)
    return out


def feasible_forests(
    n: int, k: int, partial: PartialMembership | None = None
) -> list:
    """All forests with k components agreeing with the partial membership,
    as tuples of (i, j) edges.  Exhaustive, so n <= 9."""
    _check_k(n, k)
    if n > _ORACLE_MAX_N:
        raise ValueError(f"exhaustive enumeration is limited to n <= {_ORACLE_MAX_N}")
    observed = None
    if partial is not None:
        if partial.n != n:
            raise ValueError(f"size mismatch: n={n}, partial n={partial.n}")
        validate_partial(partial)
        observed = _observed_pairs(partial)
    _, _, ui, uj = _tri(n)
    target = n - k
    out = []

    def record(comp, edges, value):
        if len(edges) == target:
            out.append(tuple((ui[idx], uj[idx]) for idx in edges))

    _enumerate(n, [0.0] * (n * (n - 1) // 2), observed, record)
    return out
