import itertools
import random

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cbmr.market import (FIXED, INDEPENDENT, ArrivalProcess, CommissionSchema, Item, MarketModel,
                         PurchaseModel, TableModel)

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


class FixedQ(PurchaseModel):
    """Context-free purchase probabilities, one per item."""

    variant = INDEPENDENT

    def __init__(self, table):
        self.table = dict(table)

    def _q(self, f, x, group, other_counts):
        return self.table[f]


def make_market(sizes, N, purchase, c=0.5, mode=FIXED, prices=None, contexts=(0, 1), arrivals=None):
    """Agents ``j`` own consecutive item ids, ``sizes[j]`` of them."""
    items, inv, f = [], [], 0
    for j, s in enumerate(sizes):
        inv.append(list(range(f, f + s)))
        for g in inv[-1]:
            items.append(Item(g, j, 1.0 if prices is None else prices[g]))
        f += s
    M = len(sizes)
    if arrivals is None:
        arrivals = [ArrivalProcess("uniform", queries=tuple(contexts)) for _ in range(M)]
    return MarketModel(items, inv, CommissionSchema.uniform(M, c, mode), purchase, N,
                       arrivals=arrivals, contexts=tuple(contexts))


def random_toy(seed):
    """A small random market: |F| <= 8, M <= 3, N <= 2, either variant."""
    rng = random.Random(seed)
    M = rng.randint(1, 3)
    N = rng.randint(1, 2)
    sizes = [rng.randint(N, max(N, 8 // M)) for _ in range(M)]
    while sum(sizes) > 8:
        j = max(range(M), key=lambda a: sizes[a])
        sizes[j] -= 1
    variant = rng.choice(["independent", "group_dependent"])
    mode = rng.choice(["fixed", "proportional"])
    c = round(rng.uniform(0.0, 0.9), 3)
    total = sum(sizes)
    prices = {f: round(rng.uniform(0.5, 2.0), 3) for f in range(total)}
    return make_market(sizes, N, TableModel(seed, variant=variant), c=c, mode=mode, prices=prices)


@pytest.fixture
def fixed_q():
    return FixedQ


def brute_actions(own, M, N, owner=0):
    """Independent enumerator: multisets of N slot tokens where own items are
    distinct tokens and each other agent is a repeatable token."""
    own = list(own)
    tokens = [("own", f) for f in own] + [("agent", j) for j in range(M) if j != owner]
    out = set()
    for combo in itertools.combinations_with_replacement(range(len(tokens)), N):
        picked = [tokens[k] for k in combo]
        owns = [t[1] for t in picked if t[0] == "own"]
        if len(owns) != len(set(owns)):
            continue
        req = {}
        for t in picked:
            if t[0] == "agent":
                req[t[1]] = req.get(t[1], 0) + 1
        out.add((tuple(sorted(owns)), tuple(sorted(req.items()))))
    return out


def make_view(market, agent=0, alpha=1.0, d=1, pools=None, reachable=None):
    from cbmr.context_space import DiscretePartition
    from cbmr.control import ControlFunctions
    from cbmr.policy import AgentView

    part = DiscretePartition(market.contexts)
    return AgentView(agent, market.inventories[agent], {f: market.price(f) for f in market.inventories[agent]},
                     market.M, market.N, market.commissions.c[agent].tolist(), market.commissions.mode, part,
                     ControlFunctions(alpha, d, market.F_max), pools, reachable)
