"""Independent reference computations used by the tests."""

from __future__ import annotations

import itertools
import random


def brute_force_pcst(n, edges, node_prize, edge_prize, edge_cost):
    """Best objective over every single node and every edge subset forming a tree."""
    best = max(node_prize)
    best_edges: tuple = ()
    m = len(edges)
    for r in range(1, min(m, n - 1) + 1):
        for subset in itertools.combinations(range(m), r):
            parent = {}

            def find(x):
                while parent.get(x, x) != x:
                    x = parent[x]
                return x

            ok = True
            nodes = set()
            for e in subset:
                u, v = edges[e]
                nodes.update((u, v))
                ru, rv = find(u), find(v)
                if ru == rv:
                    ok = False
                    break
                parent[ru] = rv
            if not ok or len(nodes) != r + 1:
                continue
            val = sum(node_prize[v] for v in nodes) + sum(edge_prize[e] - edge_cost for e in subset)
            if val > best:
                best, best_edges = val, subset
    return best, best_edges


def random_graph(rng: random.Random, max_nodes=9, max_edges=12, tree=False):
    n = rng.randint(1, max_nodes)
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    if tree:
        edges = [(rng.randrange(v), v) for v in range(1, n)]
    else:
        edges = rng.sample(pairs, min(len(pairs), rng.randint(0, max_edges)))
    node_prize = [rng.choice([0.0, rng.uniform(0, 5)]) for _ in range(n)]
    if rng.random() < 0.5:
        edge_prize = [0.0] * len(edges)
    else:
        edge_prize = [rng.choice([0.0, rng.uniform(0, 5)]) for _ in edges]
    cost = rng.choice([0.5, 1.0, 2.0])
    return n, edges, node_prize, edge_prize, cost


def is_connected_tree(nodes, edges, edge_list):
    nodes = set(nodes)
    if len(edges) != len(nodes) - 1:
        return False
    adj = {v: set() for v in nodes}
    for e in edges:
        u, v = edge_list[e]
        if u not in nodes or v not in nodes:
            return False
        adj[u].add(v)
        adj[v].add(u)
    start = next(iter(nodes))
    seen, stack = {start}, [start]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen == nodes
