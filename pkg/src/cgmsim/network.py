"""Connecting-nearest-neighbour (CNN) friend networks.

The CNN growth model produces scale-free, small-world graphs with a high
clustering coefficient, which is what makes it a reasonable stand-in for a
real friend network.  Growth alternates two moves:

* with probability ``1 - u`` a new node attaches to a uniformly random
  existing node, and a *potential edge* is recorded between the newcomer and
  every neighbour of its attachment point;
* with probability ``u`` a uniformly random potential edge is converted into
  a real edge (a no-op when no potential edges exist).

Growth starts from a single edge on two nodes and stops as soon as the
target node count is reached; leftover potential edges are discarded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Graph:
    """Immutable simple undirected graph with nodes ``0..node_count-1``.

    ``adjacency[i]`` is the sorted tuple of neighbours of node ``i``; it is
    derived from ``edges`` and kept consistent by construction.
    """

    node_count: int
    edges: frozenset[tuple[int, int]]
    adjacency: tuple[tuple[int, ...], ...] = field(repr=False)

    @classmethod
    def from_edges(cls, node_count: int, edges) -> "Graph":
        if node_count < 1:
            raise ValueError("node_count must be >= 1")
        canonical = set()
        for a, b in edges:
            if a == b:
                raise ValueError(f"self-loop on node {a}")
            if not (0 <= a < node_count and 0 <= b < node_count):
                raise ValueError(f"edge ({a}, {b}) out of node range")
            canonical.add((min(a, b), max(a, b)))
        neighbours = [[] for _ in range(node_count)]
        for a, b in canonical:
            neighbours[a].append(b)
            neighbours[b].append(a)
        adjacency = tuple(tuple(sorted(ns)) for ns in neighbours)
        return cls(node_count, frozenset(canonical), adjacency)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def degree(self, node: int) -> int:
        if not 0 <= node < self.node_count:
            raise ValueError(f"node {node} out of range")
        return len(self.adjacency[node])

    def degrees(self) -> np.ndarray:
        return np.array([len(ns) for ns in self.adjacency], dtype=np.int64)

    def to_csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Adjacency in CSR form (indptr, indices), neighbours sorted."""
        indptr = np.zeros(self.node_count + 1, dtype=np.int64)
        for i, ns in enumerate(self.adjacency):
            indptr[i + 1] = indptr[i] + len(ns)
        indices = np.empty(indptr[-1], dtype=np.int64)
        for i, ns in enumerate(self.adjacency):
            indices[indptr[i]:indptr[i + 1]] = ns
        return indptr, indices


def generate_cnn(n: int, u: float, rng: np.random.Generator) -> Graph:
    """Grow a CNN graph with ``n`` nodes and conversion probability ``u``.

    The same ``(n, u)`` and generator state always produce the same edge
    set.  The result is connected and simple by construction.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if not 0.0 <= u < 1.0:
        raise ValueError("u must lie in [0, 1)")

    adjacency = [[1], [0]]
    edges = {(0, 1)}
    potential: list[tuple[int, int]] = []

    while len(adjacency) < n:
        if rng.random() < u:
            # Convert a random potential edge; no-op when none exist.
            if not potential:
                continue
            k = int(rng.integers(len(potential)))
            a, b = potential[k]
            potential[k] = potential[-1]
            potential.pop()
            # Endpoints may have been linked through another route; the
            # pair is simply dropped then, preserving simplicity.
            if (a, b) in edges:
                continue
            edges.add((a, b))
            adjacency[a].append(b)
            adjacency[b].append(a)
        else:
            target = int(rng.integers(len(adjacency)))
            new = len(adjacency)
            adjacency.append([target])
            for z in adjacency[target]:
                if z != new:
                    potential.append((min(new, z), max(new, z)))
            adjacency[target].append(new)
            edges.add((target, new))

    return Graph(n, frozenset(edges), tuple(tuple(sorted(ns)) for ns in adjacency))


def degree(g: Graph, node: int) -> int:
    return g.degree(node)


def clustering_coefficient(g: Graph) -> float:
    """Mean local clustering: triangles through a node over its wedge count.

    Nodes of degree < 2 contribute 0, matching the usual convention.
    """
    neighbour_sets = [set(ns) for ns in g.adjacency]
    total = 0.0
    for i in range(g.node_count):
        ns = g.adjacency[i]
        d = len(ns)
        if d < 2:
            continue
        links = 0
        for idx, a in enumerate(ns):
            sa = neighbour_sets[a]
            for b in ns[idx + 1:]:
                if b in sa:
                    links += 1
        total += 2.0 * links / (d * (d - 1))
    return total / g.node_count


def is_connected(g: Graph) -> bool:
    seen = bytearray(g.node_count)
    stack = [0]
    seen[0] = 1
    count = 1
    while stack:
        i = stack.pop()
        for j in g.adjacency[i]:
            if not seen[j]:
                seen[j] = 1
                count += 1
                stack.append(j)
    return count == g.node_count


def write_edge_list(g: Graph, path, u: float | None = None, seed=None) -> None:
    """Dump the graph as `a b` lines behind a `# nodes=.. u=.. seed=..` header."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# nodes={g.node_count} u={u} seed={seed}\n")
        for a, b in sorted(g.edges):
            fh.write(f"{a} {b}\n")


def read_edge_list(path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("# nodes="):
            raise ValueError(f"{path}: missing edge-list header")
        node_count = int(header.split()[1].split("=", 1)[1])
        edges = []
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            a, b = line.split()
            edges.append((int(a), int(b)))
    return Graph.from_edges(node_count, edges)
