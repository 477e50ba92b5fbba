"""Leader-rooted communication digraphs and their Laplacian data."""

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .numerics import as_square, real_part_bounds


@dataclass(frozen=True, eq=False)
class Digraph:
    """Weighted digraph on nodes ``0..N`` where node 0 is the leader.

    ``weights[i - 1, j]`` is ``a_ij``, the weight with which follower ``i``
    listens to node ``j``; ``a_ij > 0`` iff the edge ``j -> i`` exists.  The
    leader never receives, so it has no row.
    """

    n_followers: int
    weights: np.ndarray

    def __post_init__(self):
        W = np.array(self.weights, dtype=float)
        N = int(self.n_followers)
        if N < 1:
            raise DimensionError("need at least one follower")
        if W.shape != (N, N + 1):
            raise DimensionError(f"weights must have shape {(N, N + 1)}, got {W.shape}")
        if not np.all(np.isfinite(W)) or np.any(W < 0):
            raise ValueError("edge weights must be finite and non-negative")
        if np.any(W[np.arange(N), np.arange(1, N + 1)] != 0):
            raise ValueError("self-loops are not allowed")
        W.setflags(write=False)
        object.__setattr__(self, "n_followers", N)
        object.__setattr__(self, "weights", W)

    @classmethod
    def from_edges(cls, n_followers, edges):
        """Build from ``(src, dst)`` or ``(src, dst, weight)`` triples.

        Weight defaults to 1.  Repeated edges overwrite earlier ones.
        """
        W = np.zeros((n_followers, n_followers + 1))
        for edge in edges:
            if len(edge) not in (2, 3):
                raise ValueError(f"edge must be (from, to[, weight]), got {edge!r}")
            src, dst = int(edge[0]), int(edge[1])
            w = float(edge[2]) if len(edge) == 3 else 1.0
            if not 0 <= src <= n_followers or not 1 <= dst <= n_followers:
                raise ValueError(f"edge {src}->{dst} out of range (leader 0 cannot receive)")
            if src == dst:
                raise ValueError(f"self-loop at node {src}")
            W[dst - 1, src] = w
        return cls(n_followers, W)

    def edges(self):
        """List of ``(src, dst, weight)`` with positive weight, in row order."""
        out = []
        for i in range(self.n_followers):
            for j in range(self.n_followers + 1):
                if self.weights[i, j] > 0:
                    out.append((j, i + 1, float(self.weights[i, j])))
        return out

    def neighbors(self, i):
        """Nodes ``j`` with ``a_ij > 0`` for follower ``i`` (1-based)."""
        return [int(j) for j in np.flatnonzero(self.weights[i - 1] > 0)]

    @property
    def in_degree(self):
        return self.weights.sum(axis=1)


@dataclass(frozen=True, eq=False)
class NetworkMatrices:
    laplacian: np.ndarray
    H: np.ndarray
    delta_H: float


def laplacian(g):
    """Full ``(N+1) x (N+1)`` Laplacian; the leader row is zero."""
    N = g.n_followers
    A = np.zeros((N + 1, N + 1))
    A[1:, :] = g.weights
    return np.diag(A.sum(axis=1)) - A


def build_network_matrices(g):
    L = laplacian(g)
    H = L[1:, 1:].copy()
    return NetworkMatrices(laplacian=L, H=H, delta_H=real_part_bounds(H)[1])


def has_spanning_tree(g):
    """True iff every follower is reachable from the leader along edges."""
    N = g.n_followers
    seen = {0}
    queue = deque([0])
    while queue:
        j = queue.popleft()
        for i in np.flatnonzero(g.weights[:, j] > 0):
            node = int(i) + 1
            if node not in seen:
                seen.add(node)
                queue.append(node)
    return len(seen) == N + 1


def is_m_matrix(A):
    A = as_square(A)
    off = A - np.diag(np.diag(A))
    if np.any(off > 0):
        return False
    return real_part_bounds(A)[1] > 0


def random_digraph(rng, n_followers, edge_prob=0.3, rooted=False, weighted=False):
    """Random digraph for Monte-Carlo checks.

    With ``rooted=True`` a random spanning tree out of the leader is added
    first, so every follower is reachable from the leader.
    """
    N = n_followers
    W = np.where(rng.random((N, N + 1)) < edge_prob, 1.0, 0.0)
    W[np.arange(N), np.arange(1, N + 1)] = 0.0
    if rooted:
        order = rng.permutation(N) + 1
        placed = [0]
        for node in order:
            parent = placed[rng.integers(len(placed))]
            W[node - 1, parent] = 1.0
            placed.append(int(node))
    if weighted:
        W = W * rng.uniform(0.2, 2.0, size=W.shape)
    return Digraph(N, W)
