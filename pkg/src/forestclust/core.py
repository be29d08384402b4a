"""Core data types for forest-based clustering.

Everything downstream works on a handful of small, immutable value types:
symmetric similarity matrices, spanning-forest edge sets, hard cluster
memberships (stored as per-node assignments, compared label-blind), ternary
partial memberships (Same / Different / Unobserved pair constraints), and
their Monte-Carlo-averaged soft counterparts.

A note on edge counting used throughout the package: an undirected edge
(i, j) with i < j is counted once.  A symmetric 0/1 adjacency matrix carries
each edge twice, so quantities defined on the matrix view (inner products,
gradients) are exactly twice their single-count equivalents.  Public values
and gradients in this package use the single-count convention; the symmetric
matrix views exist for metrics and serialization.
"""

from dataclasses import dataclass, field

import numpy as np

# Ternary codes for partial membership entries.
SAME = 1
DIFFERENT = 0
UNOBSERVED = -1

_PARTIAL_CODES = (SAME, DIFFERENT, UNOBSERVED)


class InfeasibleConstraints(Exception):
    """No clustering with the requested number of components satisfies the
    given pair constraints (or the constraints contradict each other)."""


class UnionFind:
    """Disjoint sets over range(n) with path compression and union by rank."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        """Merge the sets containing a and b; False if already joined."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


def _frozen_array(a: np.ndarray) -> np.ndarray:
    out = np.array(a, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    """Symmetric real matrix of pairwise similarities.

    The diagonal is never read by any solver.  Symmetry is required bitwise:
    values[i, j] must equal values[j, i] exactly, not merely within tolerance.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] < 1:
            raise ValueError(f"similarity matrix must be square, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("similarity matrix entries must be finite")
        if not np.array_equal(v, v.T):
            raise ValueError("similarity matrix must be exactly symmetric")
        object.__setattr__(self, "values", _frozen_array(v))

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class ForestAdjacency:
    """Edge set of a spanning forest on n nodes.

    Edges are canonical (i, j) pairs with i < j, kept sorted.  Acyclicity is
    checked at construction; a forest with m edges therefore has exactly
    n - m connected components.
    """

    n: int
    edges: tuple = field(default=())

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("forest needs at least one node")
        canon = []
        for e in self.edges:
            i, j = int(e[0]), int(e[1])
            if not (0 <= i < j < self.n):
                raise ValueError(f"edge {(i, j)} out of range for n={self.n}")
            canon.append((i, j))
        canon.sort()
        for a, b in zip(canon, canon[1:]):
            if a == b:
                raise ValueError(f"duplicate edge {a}")
        uf = UnionFind(self.n)
        for i, j in canon:
            if not uf.union(i, j):
                raise ValueError(f"edge {(i, j)} closes a cycle")
        object.__setattr__(self, "edges", tuple(canon))

    @property
    def k(self) -> int:
        """Number of connected components."""
        return self.n - len(self.edges)

    def matrix(self) -> np.ndarray:
        """Symmetric 0/1 adjacency view (each edge appears twice)."""
        m = np.zeros((self.n, self.n))
        for i, j in self.edges:
            m[i, j] = m[j, i] = 1.0
        return m


@dataclass(frozen=True, eq=False)
class MembershipMatrix:
    """Hard clustering of n nodes into k groups.

    Stored as a per-node assignment vector, canonicalized so that group ids
    appear in first-occurrence order.  Two memberships compare equal exactly
    when they induce the same partition, whatever labels they were built
    from.  The dense binary matrix view is for metrics and serialization.
    """

    assignment: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.assignment)
        if a.ndim != 1 or a.shape[0] < 1:
            raise ValueError("assignment must be a non-empty 1-d sequence")
        # Relabel by first occurrence so equal partitions share a representation.
        canon = np.empty(a.shape[0], dtype=np.int64)
        seen = {}
        for idx, lab in enumerate(a.tolist()):
            if lab not in seen:
                seen[lab] = len(seen)
            canon[idx] = seen[lab]
        object.__setattr__(self, "assignment", _frozen_array(canon))

    @property
    def n(self) -> int:
        return self.assignment.shape[0]

    @property
    def k(self) -> int:
        return int(self.assignment.max()) + 1

    def matrix(self) -> np.ndarray:
        """Binary co-membership view: entry (i, j) is 1 iff i and j share a group."""
        a = self.assignment
        return (a[:, None] == a[None, :]).astype(np.float64)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MembershipMatrix):
            return NotImplemented
        return np.array_equal(self.assignment, other.assignment)

    def __hash__(self) -> int:
        return hash(self.assignment.tobytes())


@dataclass(frozen=True, eq=False)
class PartialMembership:
    """Ternary pairwise constraints: Same, Different or Unobserved.

    Symmetric by construction; diagonal entries may only be Same or
    Unobserved (a node is never Different from itself).  Logical consistency
    of the observed entries is a separate check, validate_partial, because
    an inconsistent constraint set is a feasibility failure rather than a
    malformed value.
    """

    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.int8)
        if e.ndim != 2 or e.shape[0] != e.shape[1] or e.shape[0] < 1:
            raise ValueError(f"partial membership must be square, got shape {e.shape}")
        if not np.isin(e, _PARTIAL_CODES).all():
            raise ValueError("entries must be SAME, DIFFERENT or UNOBSERVED")
        if not np.array_equal(e, e.T):
            raise ValueError("partial membership must be symmetric")
        if np.any(np.diag(e) == DIFFERENT):
            raise ValueError("diagonal entries cannot be DIFFERENT")
        object.__setattr__(self, "entries", _frozen_array(e))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def observed_count(self) -> int:
        """Number of observed off-diagonal pairs, each counted once."""
        off = self.entries != UNOBSERVED
        np.fill_diagonal(off, False)
        return int(off.sum()) // 2

    def restrict(self, indices) -> "PartialMembership":
        """Constraints induced on a subset of nodes, in the given order."""
        idx = np.asarray(indices, dtype=np.int64)
        return PartialMembership(self.entries[np.ix_(idx, idx)])


def validate_partial(partial: PartialMembership) -> None:
    """Check that Same constraints, transitively closed, never connect a
    Different pair.  Raises InfeasibleConstraints otherwise."""
    n = partial.n
    e = partial.entries
    uf = UnionFind(n)
    same_i, same_j = np.nonzero(np.triu(e == SAME, 1))
    for i, j in zip(same_i.tolist(), same_j.tolist()):
        uf.union(i, j)
    diff_i, diff_j = np.nonzero(np.triu(e == DIFFERENT, 1))
    for i, j in zip(diff_i.tolist(), diff_j.tolist()):
        if uf.find(i) == uf.find(j):
            raise InfeasibleConstraints(
                f"nodes {i} and {j} are marked Different but forced together "
                "by a chain of Same constraints"
            )


@dataclass(frozen=True, eq=False)
class SoftForest:
    """Entrywise average of forest adjacency matrices over noise draws.

    Entries live in [0, 1] and the upper triangle sums to the common edge
    count n - k of the averaged forests.
    """

    values: np.ndarray
    k: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        n = v.shape[0]
        if v.ndim != 2 or v.shape[1] != n or n < 1:
            raise ValueError("soft forest must be square")
        if not (1 <= self.k <= n):
            raise ValueError(f"k={self.k} out of range for n={n}")
        if not np.array_equal(v, v.T):
            raise ValueError("soft forest must be symmetric")
        if np.any(np.diag(v) != 0.0):
            raise ValueError("soft forest diagonal must be zero")
        if v.min() < -1e-12 or v.max() > 1.0 + 1e-12:
            raise ValueError("soft forest entries must lie in [0, 1]")
        total = float(v[np.triu_indices(n, 1)].sum())
        if abs(total - (n - self.k)) > 1e-9:
            raise ValueError(
                f"upper-triangle mass {total} should equal n - k = {n - self.k}"
            )
        object.__setattr__(self, "values", _frozen_array(v))

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class SoftMembership:
    """Entrywise average of binary co-membership matrices over noise draws."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        n = v.shape[0]
        if v.ndim != 2 or v.shape[1] != n or n < 1:
            raise ValueError("soft membership must be square")
        if not np.array_equal(v, v.T):
            raise ValueError("soft membership must be symmetric")
        if np.any(np.diag(v) != 1.0):
            raise ValueError("soft membership diagonal must be exactly one")
        if v.min() < -1e-12 or v.max() > 1.0 + 1e-12:
            raise ValueError("soft membership entries must lie in [0, 1]")
        object.__setattr__(self, "values", _frozen_array(v))

    @property
    def n(self) -> int:
        return self.values.shape[0]


def membership_from_labels(labels) -> MembershipMatrix:
    """Build a hard membership from any hashable per-node labels."""
    labels = list(labels)
    if len(labels) == 0:
        raise ValueError("need at least one label")
    seen = {}
    assignment = []
    for lab in labels:
        if lab not in seen:
            seen[lab] = len(seen)
        assignment.append(seen[lab])
    return MembershipMatrix(np.array(assignment, dtype=np.int64))


def partial_from_labeled_subset(labels) -> PartialMembership:
    """Pairwise constraints observed from labeling a subset of nodes.

    labels is a per-node sequence where None marks an unlabeled node.  Every
    pair of labeled nodes becomes an observed Same/Different entry (the
    diagonal of a labeled node is Same); every pair touching an unlabeled
    node stays Unobserved.
    """
    labels = list(labels)
    n = len(labels)
    if n == 0:
        raise ValueError("need at least one node")
    entries = np.full((n, n), UNOBSERVED, dtype=np.int8)
    labeled = [i for i, lab in enumerate(labels) if lab is not None]
    for a, i in enumerate(labeled):
        entries[i, i] = SAME
        for j in labeled[a + 1 :]:
            code = SAME if labels[i] == labels[j] else DIFFERENT
            entries[i, j] = entries[j, i] = code
    return PartialMembership(entries)


def clustering_error(predicted: MembershipMatrix, truth: MembershipMatrix) -> float:
    """Fraction of the n^2 co-membership entries on which the two disagree."""
    if predicted.n != truth.n:
        raise ValueError(f"size mismatch: {predicted.n} vs {truth.n}")
    return float(np.mean(predicted.matrix() != truth.matrix()))


# --- CSV forms ------------------------------------------------------------
#
# Memberships serialize as n rows of n comma-separated 0/1 entries (the
# binary co-membership view).  Partial memberships use the same layout with
# "*" marking unobserved entries.


def membership_to_csv(m: MembershipMatrix) -> str:
    rows = m.matrix().astype(np.int64)
    return "\n".join(",".join(str(v) for v in row) for row in rows.tolist()) + "\n"


def membership_from_csv(text: str) -> MembershipMatrix:
    rows = [line.split(",") for line in text.strip().splitlines()]
    n = len(rows)
    if n == 0 or any(len(r) != n for r in rows):
        raise ValueError("membership CSV must be a square table")
    mat = np.array([[int(v) for v in row] for row in rows], dtype=np.int64)
    if not np.isin(mat, (0, 1)).all():
        raise ValueError("membership CSV entries must be 0 or 1")
    if not np.array_equal(mat, mat.T) or np.any(np.diag(mat) != 1):
        raise ValueError("membership CSV must be symmetric with unit diagonal")
    # Recover assignments from rows, then confirm the relation was transitive.
    assignment = np.full(n, -1, dtype=np.int64)
    next_id = 0
    for i in range(n):
        if assignment[i] < 0:
            members = np.nonzero(mat[i])[0]
            if np.any(assignment[members] >= 0):
                raise ValueError("membership CSV is not an equivalence relation")
            assignment[members] = next_id
            next_id += 1
    result = MembershipMatrix(assignment)
    if not np.array_equal(result.matrix().astype(np.int64), mat):
        raise ValueError("membership CSV is not an equivalence relation")
    return result


def partial_to_csv(p: PartialMembership) -> str:
    def cell(v: int) -> str:
        return "*" if v == UNOBSERVED else str(int(v))

    return "\n".join(",".join(cell(v) for v in row) for row in p.entries.tolist()) + "\n"


def partial_from_csv(text: str) -> PartialMembership:
    rows = [line.split(",") for line in text.strip().splitlines()]
    n = len(rows)
    if n == 0 or any(len(r) != n for r in rows):
        raise ValueError("partial membership CSV must be a square table")
    entries = np.empty((n, n), dtype=np.int8)
    for i, row in enumerate(rows):
        for j, cell in enumerate(row):
            cell = cell.strip()
            if cell == "*":
                entries[i, j] = UNOBSERVED
            elif cell in ("0", "1"):
                entries[i, j] = int(cell)
            else:
                raise ValueError(f"bad partial membership cell {cell!r}")
    return PartialMembership(entries)
