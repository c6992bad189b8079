"""Exact maximum flow (Edmonds-Karp) on small graphs with rational capacities."""

from __future__ import annotations

from collections import deque
from fractions import Fraction

INF = None  # capacity marker for uncapacitated edges


def max_flow(nodes: list, edges: list[tuple[object, object, Fraction | None]], source, sink):
    """Return ``(value, flow)`` where ``flow`` maps each input edge ``(u, v)`` to its flow.

    Nodes are explored in the order given by ``nodes`` and edges in input order,
    so augmenting paths, and hence the returned flow, are deterministic.
    """
    order = {v: i for i, v in enumerate(nodes)}
    cap: dict[tuple, Fraction | None] = {}
    adj: dict[object, list] = {v: [] for v in nodes}
    for u, v, c in edges:
        if (u, v) not in cap:
            cap[(u, v)] = Fraction(0)
            adj[u].append(v)
        if (v, u) not in cap:
            cap[(v, u)] = Fraction(0)
            adj[v].append(u)
        cap[(u, v)] = None if c is None or cap[(u, v)] is None else cap[(u, v)] + c
    for v in adj:
        adj[v].sort(key=order.__getitem__)
    flow = {k: Fraction(0) for k in cap}

    def residual(u, v):
        c = cap[(u, v)]
        return None if c is None else c - flow[(u, v)]

    total = Fraction(0)
    while True:
        parent = {source: None}
        queue = deque([source])
        while queue and sink not in parent:
            u = queue.popleft()
            for v in adj[u]:
                r = residual(u, v)
                if v not in parent and (r is None or r > 0):
                    parent[v] = u
                    queue.append(v)
        if sink not in parent:
            break
        path = []
        v = sink
        while parent[v] is not None:
            path.append((parent[v], v))
            v = parent[v]
        bottleneck = None
        for u, v in path:
            r = residual(u, v)
            if r is not None and (bottleneck is None or r < bottleneck):
                bottleneck = r
        if bottleneck is None:
            raise ValueError("unbounded flow: an infinite-capacity source-sink path")
        for u, v in path:
            flow[(u, v)] += bottleneck
            flow[(v, u)] -= bottleneck
        total += bottleneck
    result = {}
    for u, v, _ in edges:
        result[(u, v)] = max(flow[(u, v)], Fraction(0))
    return total, result
