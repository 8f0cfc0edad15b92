"""Agent connectivity, relayed requests and chained commissions.

When two agents have no direct trade link their requests travel along a
fixed route. The recommender collects the commission of its first hop, every
relay keeps the commission of its downstream edge, and the item owner pays
the sum of all edge commissions on the route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import networkx as nx
import numpy as np

from .cbmr_ind import CbmrInd
from .market import FIXED, PROPORTIONAL, ConfigurationError


@dataclass(frozen=True)
class CommissionChain:
    path: tuple  # (recommender, h_1, ..., h_D, owner)
    amounts: tuple  # commission on each edge, in path order
    price: float

    @property
    def owner_charge(self) -> float:
        return float(sum(self.amounts))

    def payouts(self) -> dict:
        """Net amount of every participant; sums to the price."""
        out = {self.path[0]: self.amounts[0]}
        for k, h in enumerate(self.path[1:-1], start=1):
            out[h] = out.get(h, 0.0) + self.amounts[k]
        owner = self.path[-1]
        out[owner] = out.get(owner, 0.0) + self.price - self.owner_charge
        return out


class TopologyGraph:
    """Undirected trade graph with per-edge commissions and a static routing table.

    ``commissions[a][b]`` is what ``a`` earns from ``b`` on the edge ``(a, b)``.
    Routes minimize the total charge to the item owner, then the hop count,
    then the path itself lexicographically. ``routes`` may pin explicit paths.
    """

    def __init__(self, M: int, edges: Iterable[Sequence[int]], commissions, mode: str = FIXED,
                 routes: Mapping | None = None):
        self.M = M
        self.mode = mode
        self.c = np.array(commissions, dtype=float)
        if self.c.shape != (M, M):
            raise ConfigurationError("commission matrix must be M x M")
        g = nx.Graph()
        g.add_nodes_from(range(M))
        for a, b in edges:
            if a == b:
                raise ConfigurationError(f"self-loop on agent {a}")
            g.add_edge(int(a), int(b))
        if M > 1 and not nx.is_connected(g):
            raise ConfigurationError("trade graph is not connected")
        self.graph = g
        self.routes = {}
        for i in range(M):
            for j in range(M):
                if i != j:
                    self.routes[i, j] = self._route(i, j)
        for (i, j), p in dict(routes or {}).items():
            p = tuple(int(h) for h in p)
            if p[0] != i or p[-1] != j or len(set(p)) != len(p):
                raise ConfigurationError(f"override route {p} is not a simple path from {i} to {j}")
            for a, b in zip(p, p[1:]):
                if not g.has_edge(a, b):
                    raise ConfigurationError(f"override route {p} uses missing link {a}-{b}")
            self.routes[int(i), int(j)] = p

    def _charge(self, p) -> float:
        return float(sum(self.c[a, b] for a, b in zip(p, p[1:])))

    def _route(self, i, j):
        paths = (tuple(p) for p in nx.all_simple_paths(self.graph, i, j))
        try:
            return min(paths, key=lambda p: (round(self._charge(p), 12), len(p), p))
        except ValueError:
            raise ConfigurationError(f"agents {i} and {j} are not connected") from None

    # -- metrics ----------------------------------------------------------

    def neighbors(self, i) -> tuple:
        return tuple(sorted(self.graph.neighbors(i)))

    @property
    def max_degree(self) -> int:
        return max((d for _, d in self.graph.degree()), default=0)

    @property
    def max_hops(self) -> int:
        """Hop count of the longest route in the routing table."""
        return max((len(p) - 1 for p in self.routes.values()), default=0)

    def relays(self, i, j) -> tuple:
        return self.routes[i, j][1:-1]

    def first_hop(self, i, j) -> int:
        return self.routes[i, j][1]

    def effective_rate(self, i, j) -> float:
        """Commission rate ``i`` earns on ``j``'s items: that of its first hop."""
        return float(self.c[i, self.first_hop(i, j)])

    def chain_charge(self, i, j, price: float = 1.0) -> float:
        charge = self._charge(self.routes[i, j])
        return charge * price if self.mode == PROPORTIONAL else charge

    def chain(self, i, j, price: float) -> CommissionChain:
        p = self.routes[i, j]
        amounts = tuple(float(self.c[a, b]) * (price if self.mode == PROPORTIONAL else 1.0) for a, b in zip(p, p[1:]))
        return CommissionChain(p, amounts, float(price))

    def rate_matrix(self) -> np.ndarray:
        r = np.zeros((self.M, self.M))
        for (i, j) in self.routes:
            r[i, j] = self.effective_rate(i, j)
        return r

    def eligible(self, model) -> list:
        """Items each agent may show: own items plus foreign items whose price
        covers the full chain charge of their route."""
        out = []
        for i in range(self.M):
            ok = set(model.inventories[i])
            for it in model.items:
                if it.owner != i and self.chain_charge(i, it.owner, it.price) <= it.price + 1e-12:
                    ok.add(it.id)
            out.append(frozenset(ok))
        return out


def route(i: int, j: int, graph: TopologyGraph) -> tuple:
    return graph.routes[i, j]


def settle_chain(price: float, path: Sequence[int], commissions, mode: str = FIXED) -> dict:
    """Per-agent payouts for one sale routed along ``path``."""
    c = np.asarray(commissions, dtype=float)
    path = tuple(path)
    if len(path) < 2:
        raise ValueError("a chain needs a recommender and an owner")
    scale = price if mode == PROPORTIONAL else 1.0
    ch = CommissionChain(path, tuple(float(c[a, b]) * scale for a, b in zip(path, path[1:])), float(price))
    if ch.owner_charge > price + 1e-12:
        raise ConfigurationError(
            f"chain charge {ch.owner_charge} exceeds price {price}; the item should have been filtered out")
    return ch.payouts()


def inflated_D2(n: int, t: int, D_k: int, D_h: int, F_max: int, base) -> float:
    """``C((D_k)^(D_h) F_max, n) * t^z log t``; ``base`` is a ControlFunctions."""
    return math.comb(D_k ** D_h * F_max, n) * base.base(t)


def training_pools(graph: TopologyGraph, i: int, F_max: int, rule: str = "base") -> dict:
    """Training pool size per other agent for agent ``i``.

    ``base``: ``F_max``; ``inflated``: ``(D_k)^(D_h) F_max``; ``star``:
    ``F_max`` for the hub and ``M^2 F_max`` for spokes.
    """
    others = [j for j in range(graph.M) if j != i]
    if rule == "base":
        pool = F_max
    elif rule == "inflated":
        pool = graph.max_degree ** graph.max_hops * F_max
    elif rule == "star":
        hub = len(graph.neighbors(i)) == graph.M - 1
        pool = F_max if hub else graph.M ** 2 * F_max
    else:
        raise ConfigurationError(f"unknown training-pool rule {rule!r}")
    return {j: pool for j in others}


class CbmrIndN(CbmrInd):
    """Arm-level learner on a routed network; arms cover every reachable agent.

    Identical to :class:`CbmrInd` apart from the training pools it is built
    with, so on a complete graph with base pools it reproduces that learner.
    """

    name = "cbmr-ind-n"


# -- builders ---------------------------------------------------------------


def _matrix(M, c):
    if np.isscalar(c):
        m = np.full((M, M), float(c))
        np.fill_diagonal(m, 0.0)
        return m
    return np.asarray(c, dtype=float)


def complete_graph(M: int, c=0.5, mode=FIXED) -> TopologyGraph:
    return TopologyGraph(M, [(a, b) for a in range(M) for b in range(a + 1, M)], _matrix(M, c), mode)


def line_graph(M: int, c=0.5, mode=FIXED) -> TopologyGraph:
    return TopologyGraph(M, [(a, a + 1) for a in range(M - 1)], _matrix(M, c), mode)


def star_graph(M: int, hub: int = 0, c=0.5, mode=FIXED) -> TopologyGraph:
    return TopologyGraph(M, [(hub, b) for b in range(M) if b != hub], _matrix(M, c), mode)
