"""Prize-collecting Steiner tree by greedy cluster growth plus exact tree pruning.

Objective of a tree T = (V_T, E_T)::

    sum(node_prize[v] for v in V_T) + sum(edge_prize[e] for e in E_T) - edge_cost * |E_T|

Candidate trees are grown from every prized node: a greedy pass repeatedly
attaches the outside node with the best prize-minus-path-cost along a
cheapest connecting path, and shortest-path and minimum-spanning trees of the
component add further candidates. Each candidate is then pruned to its best
connected subtree by an exact dynamic program, and the best pruned tree wins.
Ties on the objective go to the tree that collects more prize, then to the
one with fewer edges.
On a forest the spanning tree is the component itself, so the result is exact.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Sequence

_EPS = 1e-12


@dataclass(frozen=True)
class PCSTSolution:
    nodes: tuple[int, ...]
    edges: tuple[int, ...]
    objective: float


def objective(nodes: Sequence[int], edges: Sequence[int], node_prize: Sequence[float],
              edge_prize: Sequence[float], edge_cost: float) -> float:
    total = 0.0
    for v in sorted(nodes):
        total += node_prize[v]
    for e in sorted(edges):
        total += edge_prize[e] - edge_cost
    return total


class _Graph:
    def __init__(self, n: int, edges: Sequence[tuple[int, int]], edge_prize: Sequence[float]):
        self.n = n
        self.edges = edges
        # keep one edge per unordered pair (highest prize, lowest id); loops can't be in a tree
        best: dict[tuple[int, int], int] = {}
        for eid, (u, v) in enumerate(edges):
            if u == v:
                continue
            key = (min(u, v), max(u, v))
            cur = best.get(key)
            if cur is None or edge_prize[eid] > edge_prize[cur]:
                best[key] = eid
        self.adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for (u, v), eid in sorted(best.items(), key=lambda kv: kv[1]):
            self.adj[u].append((v, eid))
            self.adj[v].append((u, eid))

    def other(self, eid: int, u: int) -> int:
        a, b = self.edges[eid]
        return b if a == u else a


def _shortest_path_tree(g: _Graph, root: int, length: Sequence[float]) -> dict[int, int]:
    """Dijkstra parent-edge map (node -> edge to its parent) over root's component."""
    dist = {root: 0.0}
    parent: dict[int, int] = {}
    heap = [(0.0, root)]
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v, eid in g.adj[u]:
            nd = d + length[eid]
            if v not in dist or nd < dist[v]:
                dist[v] = nd
                parent[v] = eid
                heapq.heappush(heap, (nd, v))
    return parent


def _min_spanning_tree(g: _Graph, root: int, weight: Sequence[float]) -> dict[int, int]:
    """Prim from root: repeatedly take the cheapest edge leaving the tree."""
    in_tree = {root}
    parent: dict[int, int] = {}
    heap = [(weight[eid], eid, v) for v, eid in g.adj[root]]
    heapq.heapify(heap)
    while heap:
        _, eid, v = heapq.heappop(heap)
        if v in in_tree:
            continue
        in_tree.add(v)
        parent[v] = eid
        for w, e2 in g.adj[v]:
            if w not in in_tree:
                heapq.heappush(heap, (weight[e2], e2, w))
    return parent


def _greedy_growth(g: _Graph, root: int, node_prize: Sequence[float], length: Sequence[float]) -> set[int]:
    """Grow a cluster from root, each step attaching the outside node whose
    prize exceeds the cost of its cheapest connecting path by the most."""
    tree_edges: set[int] = set()
    in_tree = {root}
    while True:
        dist = {u: 0.0 for u in in_tree}
        parent: dict[int, int] = {}
        heap = [(0.0, u) for u in sorted(in_tree)]
        done = set()
        while heap:
            d, u = heapq.heappop(heap)
            if u in done:
                continue
            done.add(u)
            for v, eid in g.adj[u]:
                if v in in_tree:
                    continue
                nd = d + length[eid]
                if v not in dist or nd < dist[v]:
                    dist[v] = nd
                    parent[v] = eid
                    heapq.heappush(heap, (nd, v))
        best, best_gain = None, 0.0
        for v in sorted(dist):
            if v in in_tree:
                continue
            # prizes of path intermediates count too
            gain, x = 0.0, v
            while x not in in_tree:
                gain += node_prize[x]
                x = g.other(parent[x], x)
            gain -= dist[v]
            if gain > best_gain:
                best, best_gain = v, gain
        if best is None:
            return tree_edges
        x = best
        while x not in in_tree:
            in_tree.add(x)
            tree_edges.add(parent[x])
            x = g.other(parent[x], x)


def _prune(g: _Graph, root: int, tree_edges: set[int], node_prize: Sequence[float],
           edge_prize: Sequence[float], edge_cost: float) -> tuple[float, set[int], set[int]]:
    """Best connected subtree of the tree spanned by ``tree_edges`` around root."""
    tadj: dict[int, list[tuple[int, int]]] = {root: []}
    for eid in sorted(tree_edges):
        u, v = g.edges[eid]
        tadj.setdefault(u, []).append((v, eid))
        tadj.setdefault(v, []).append((u, eid))

    order, parent_edge = [root], {root: None}
    stack = [root]
    while stack:
        u = stack.pop()
        for v, eid in sorted(tadj[u]):
            if v not in parent_edge:
                parent_edge[v] = eid
                order.append(v)
                stack.append(v)

    # (net gain, prize collected): a branch that only breaks even is kept
    # when it collects some prize, and dropped when it is pure cost
    gain: dict[int, tuple[float, float]] = {}
    keep: dict[int, list[tuple[int, int]]] = {}
    for u in reversed(order):
        net, got = node_prize[u], node_prize[u]
        kids = []
        for v, eid in sorted(tadj[u]):
            if parent_edge.get(v) != eid or v == u:
                continue
            b_net = gain[v][0] + edge_prize[eid] - edge_cost
            b_got = gain[v][1] + edge_prize[eid]
            if b_net > _EPS or (b_net >= -_EPS and b_got > _EPS):
                net += b_net
                got += b_got
                kids.append((v, eid))
        gain[u] = (net, got)
        keep[u] = kids

    top = max(sorted(order), key=lambda u: (round(gain[u][0], 9), round(gain[u][1], 9)))
    nodes, edges = set(), set()
    stack = [top]
    while stack:
        u = stack.pop()
        nodes.add(u)
        for v, eid in keep[u]:
            edges.add(eid)
            stack.append(v)
    return gain[top][0], nodes, edges


def solve_pcst(n_nodes: int, edges: Sequence[tuple[int, int]], node_prize: Sequence[float],
               edge_prize: Sequence[float], edge_cost: float) -> PCSTSolution:
    if n_nodes <= 0:
        raise ValueError("graph has no nodes")
    if edge_cost <= 0:
        raise ValueError("edge_cost must be positive")
    if len(node_prize) != n_nodes or len(edge_prize) != len(edges):
        raise ValueError("prize vectors do not match the graph")
    if min(node_prize, default=0) < 0 or min(edge_prize, default=0) < 0:
        raise ValueError("prizes must be nonnegative")

    g = _Graph(n_nodes, edges, edge_prize)
    roots = {v for v in range(n_nodes) if node_prize[v] > 0}
    for eid, (u, v) in enumerate(edges):
        if edge_prize[eid] > 0 and u != v:
            roots.update((u, v))
    if not roots:
        return PCSTSolution((0,), (), objective((0,), (), node_prize, edge_prize, edge_cost))

    net = [edge_cost - p for p in edge_prize]
    length = [max(0.0, w) for w in net]

    best_key, best = None, None
    for r in sorted(roots):
        trees = [
            _greedy_growth(g, r, node_prize, length),
            set(_shortest_path_tree(g, r, length).values()),
            set(_min_spanning_tree(g, r, net).values()),
        ]
        for tree in trees:
            _, nodes, tedges = _prune(g, r, tree, node_prize, edge_prize, edge_cost)
            obj = objective(nodes, tedges, node_prize, edge_prize, edge_cost)
            got = sum(node_prize[v] for v in nodes) + sum(edge_prize[e] for e in tedges)
            key = (-round(obj, 9), -round(got, 9), len(tedges), tuple(sorted(tedges)), tuple(sorted(nodes)))
            if best_key is None or key < best_key:
                best_key = key
                best = PCSTSolution(tuple(sorted(nodes)), tuple(sorted(tedges)), obj)
    return best
