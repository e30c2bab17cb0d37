"""Directed communication graphs.

Agents are labelled 1..n. An edge (i, j) means agent i can send messages to
agent j; there are no self-loops because every agent always has access to its
own state. Strong connectivity is required by every downstream construction,
so the check lives here and is cheap enough to run at validation time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DirectedGraph",
    "directed_ring",
    "sensor_network_6",
]


@dataclass(frozen=True)
class DirectedGraph:
    """Simple directed graph on agents 1..n without self-loops."""

    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"need at least one agent, got n={self.n}")
        seen = set()
        for e in self.edges:
            if len(e) != 2:
                raise ValueError(f"edge {e!r} is not a pair")
            i, j = e
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise ValueError(f"edge {e} references an agent outside 1..{self.n}")
            if i == j:
                raise ValueError(f"self-loop {e} is not allowed")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge {e}")
            seen.add((i, j))
        # canonical order: transcripts and weight builders index edges by it
        object.__setattr__(self, "edges", tuple(sorted(seen)))

    def _check_agent(self, i: int) -> None:
        if not (1 <= i <= self.n):
            raise ValueError(f"agent id {i} outside 1..{self.n}")

    def in_neighbors(self, i: int) -> frozenset[int]:
        """Agents that send to i (excluding i itself)."""
        self._check_agent(i)
        return frozenset(a for (a, b) in self.edges if b == i)

    def out_neighbors(self, i: int) -> frozenset[int]:
        """Agents that i sends to (excluding i itself)."""
        self._check_agent(i)
        return frozenset(b for (a, b) in self.edges if a == i)

    def is_strongly_connected(self) -> bool:
        """Every agent reaches every other along directed edges.

        Uses one forward and one backward reachability sweep from agent 1;
        both reaching all n agents is equivalent to strong connectivity.
        """
        if self.n == 1:
            return True
        fwd: dict[int, list[int]] = {i: [] for i in range(1, self.n + 1)}
        bwd: dict[int, list[int]] = {i: [] for i in range(1, self.n + 1)}
        for (a, b) in self.edges:
            fwd[a].append(b)
            bwd[b].append(a)
        for adj in (fwd, bwd):
            reached = {1}
            stack = [1]
            while stack:
                u = stack.pop()
                for v in adj[u]:
                    if v not in reached:
                        reached.add(v)
                        stack.append(v)
            if len(reached) != self.n:
                return False
        return True

    def edge_index_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(src, dst) as 0-based integer arrays in canonical edge order."""
        if not self.edges:
            z = np.zeros(0, dtype=np.intp)
            return z, z.copy()
        src = np.array([a - 1 for (a, b) in self.edges], dtype=np.intp)
        dst = np.array([b - 1 for (a, b) in self.edges], dtype=np.intp)
        return src, dst


def directed_ring(n: int) -> DirectedGraph:
    """Cycle 1 -> 2 -> ... -> n -> 1."""
    if n < 2:
        raise ValueError("a directed ring needs n >= 2")
    return DirectedGraph(n, tuple((i, i % n + 1) for i in range(1, n + 1)))


def sensor_network_6() -> DirectedGraph:
    """Canonical 6-agent network: a directed ring plus two chords.

    Ring 1->2->3->4->5->6->1 with shortcuts 1->4 and 5->2. Strongly
    connected, in-degrees 1 or 2, and asymmetric enough that the row and
    column weight matrices have genuinely different stationary vectors.
    """
    ring = [(i, i % 6 + 1) for i in range(1, 7)]
    return DirectedGraph(6, tuple(ring + [(1, 4), (5, 2)]))
