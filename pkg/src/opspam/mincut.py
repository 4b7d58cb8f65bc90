"""Dinic max-flow / min-cut on a directed graph with real capacities."""

from __future__ import annotations

from collections import deque


class FlowNetwork:
    def __init__(self, n: int, eps: float = 0.0):
        self.n = n
        self.eps = eps
        # edge arrays; edge k and k ^ 1 are a forward/reverse pair
        self.head: list[int] = []
        self.cap: list[float] = []
        self.adj: list[list[int]] = [[] for _ in range(n)]

    def add_edge(self, u: int, v: int, cap: float, rev_cap: float = 0.0) -> None:
        if cap < 0 or rev_cap < 0:
            raise ValueError("capacities must be non-negative")
        self.adj[u].append(len(self.head))
        self.head.append(v)
        self.cap.append(float(cap))
        self.adj[v].append(len(self.head))
        self.head.append(u)
        self.cap.append(float(rev_cap))

    def _bfs(self, s: int, t: int) -> bool:
        self.level = [-1] * self.n
        self.level[s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            for e in self.adj[u]:
                v = self.head[e]
                if self.level[v] < 0 and self.cap[e] > self.eps:
                    self.level[v] = self.level[u] + 1
                    q.append(v)
        return self.level[t] >= 0

    def _augment(self, s: int, t: int) -> float:
        """Find one blocking-flow path in the level graph and push along it."""
        path: list[int] = []  # edge ids
        u = s
        while True:
            if u == t:
                pushed = min(self.cap[e] for e in path)
                for e in path:
                    self.cap[e] -= pushed
                    self.cap[e ^ 1] += pushed
                return pushed
            adj = self.adj[u]
            advanced = False
            while self.it[u] < len(adj):
                e = adj[self.it[u]]
                v = self.head[e]
                if self.cap[e] > self.eps and self.level[v] == self.level[u] + 1:
                    path.append(e)
                    u = v
                    advanced = True
                    break
                self.it[u] += 1
            if not advanced:
                if not path:
                    return 0.0
                # dead end: retreat and skip the edge that led here
                self.level[u] = -1
                e = path.pop()
                u = self.head[e ^ 1]
                self.it[u] += 1

    def max_flow(self, s: int, t: int) -> float:
        flow = 0.0
        while self._bfs(s, t):
            self.it = [0] * self.n
            while True:
                pushed = self._augment(s, t)
                if pushed <= 0:
                    break
                flow += pushed
        return flow

    def source_side(self, s: int) -> set[int]:
        """Nodes reachable from ``s`` in the residual graph (call after max_flow).

        This is the smallest source set over all minimum cuts.
        """
        seen = {s}
        q = deque([s])
        while q:
            u = q.popleft()
            for e in self.adj[u]:
                v = self.head[e]
                if v not in seen and self.cap[e] > self.eps:
                    seen.add(v)
                    q.append(v)
        return seen
