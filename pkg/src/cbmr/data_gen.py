"""Synthetic query/companion co-purchase markets.

Every user searches for one of ``N_1`` query products; each query has
``F_1`` frequently co-purchased companions drawn from a shared pool. The
item set is the queries plus the pool, dealt out to ``M`` agents.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

from .market import (FIXED, GROUP_DEPENDENT, INDEPENDENT, ArrivalProcess, CommissionSchema,
                     ConfigurationError, CoPurchaseModel, Item, MarketModel)

# companion placements for the focus query: item slot -> agent
PLACEMENTS = {
    "C-1": (0, 0),  # the focus agent holds both companions
    "C-2": (0, 2),  # one at the focus agent, one at the third agent
    "C-3": (1, 2),  # neither at the focus agent
}


@dataclass
class CoPurchaseScenario:
    N_1: int
    F_1: int
    queries: tuple
    pool: tuple
    co_purchase: dict
    inventories: tuple
    params: dict = field(default_factory=dict)
    focus_query: int = 0

    @property
    def items(self) -> tuple:
        return self.queries + self.pool


def _deal(items, M, pinned, rng):
    """Assign ``items`` to ``M`` agents with sizes differing by at most one,
    honouring the ``pinned`` item -> agent map."""
    total = len(items)
    target = [total // M + (1 if j < total % M else 0) for j in range(M)]
    inv = [[] for _ in range(M)]
    for f, j in pinned.items():
        inv[j].append(f)
    free = [f for f in items if f not in pinned]
    rng.shuffle(free)
    over = [j for j in range(M) if len(inv[j]) > target[j]]
    if over:
        raise ConfigurationError(f"pinned items overflow the inventories of agents {over}")
    for f in free:
        # the agent with the most room left takes the next item
        j = max(range(M), key=lambda a: (target[a] - len(inv[a]), -a))
        inv[j].append(f)
    return tuple(tuple(sorted(v)) for v in inv)


def generate(N_1: int = 20, F_1: int = 2, M: int = 3, assignment: str = "balanced", seed: int = 0,
             pool_size: int | None = None, placement=None, N: int = 2, variant: str = GROUP_DEPENDENT,
             g_c: float = 0.1, g_nc: float = 0.01, a: float = 0.5, b: float | None = None,
             scale: float = 1.0, c: float = 0.5, mode: str = FIXED, focus_query: int = 0,
             focus_fixed: bool = True, F_max: int | None = None):
    """Build a scenario and its :class:`MarketModel`.

    ``pool_size`` controls companion overlap (default: no sharing, ``N_1*F_1``).
    ``assignment`` is ``balanced`` (seeded random, near-equal inventories) or
    ``explicit``; for ``explicit`` pass ``placement`` as a name from
    :data:`PLACEMENTS`, a tuple of agents for the focus query's companions,
    or a full ``item -> agent`` dict.
    """
    if min(N_1, M, N) < 1 or F_1 < 0:
        raise ConfigurationError("N_1, M and N must be positive and F_1 nonnegative")
    if variant == GROUP_DEPENDENT and a * N > 1 + 1e-12:
        raise ConfigurationError(f"a={a} exceeds 1/N={1 / N}; co-purchase probabilities would go negative")
    rng = random.Random(seed)
    pool_size = N_1 * F_1 if pool_size is None else pool_size
    if F_1 > pool_size:
        raise ConfigurationError("companion pool smaller than F_1")
    queries = tuple(range(N_1))
    pool = tuple(range(N_1, N_1 + pool_size))
    co = {}
    if F_1:
        if pool_size == N_1 * F_1:
            for q in queries:
                co[q] = tuple(pool[q * F_1:(q + 1) * F_1])
        else:
            # the focus query keeps the first companions; others draw from the pool
            for q in queries:
                co[q] = tuple(pool[:F_1]) if q == focus_query else tuple(sorted(rng.sample(pool, F_1)))
    else:
        co = {q: () for q in queries}
    items = queries + pool
    pinned = {}
    if assignment == "explicit":
        if placement is None:
            raise ConfigurationError("explicit assignment needs a placement")
        if isinstance(placement, str):
            if placement not in PLACEMENTS:
                raise ConfigurationError(f"unknown placement {placement!r}")
            placement = PLACEMENTS[placement]
        if isinstance(placement, dict):
            pinned = {int(f): int(j) for f, j in placement.items()}
        else:
            comps = co[focus_query]
            if len(placement) != len(comps):
                raise ConfigurationError("placement must name one agent per companion of the focus query")
            pinned = dict(zip(comps, (int(j) for j in placement)))
        if any(not 0 <= j < M for j in pinned.values()):
            raise ConfigurationError("placement names an unknown agent")
    elif assignment != "balanced":
        raise ConfigurationError(f"unknown assignment policy {assignment!r}")
    inventories = _deal(items, M, pinned, rng)
    owner = {f: j for j, inv in enumerate(inventories) for f in inv}
    model_items = [Item(f, owner[f], 1.0) for f in items]
    purchase = CoPurchaseModel(co, variant=variant, g_c=g_c, g_nc=g_nc, a=a, b=b, scale=scale)
    arrivals = [ArrivalProcess("uniform", queries=queries) for _ in range(M)]
    if focus_fixed:
        arrivals[0] = ArrivalProcess("fixed", context=focus_query)
    params = dict(N_1=N_1, F_1=F_1, M=M, N=N, seed=seed, pool_size=pool_size, variant=variant,
                  g_c=g_c, g_nc=g_nc, a=a, b=g_nc if b is None else b, scale=scale, c=c, mode=mode,
                  assignment=assignment)
    scenario = CoPurchaseScenario(N_1, F_1, queries, pool, co, inventories, params, focus_query)
    model = MarketModel(model_items, inventories, CommissionSchema.uniform(M, c, mode), purchase, N,
                        arrivals=arrivals, F_max=F_max, contexts=queries,
                        meta={"scenario": "co_purchase", "focus_agent": 0, "focus_query": focus_query})
    return scenario, model


# -- presets ----------------------------------------------------------------

PRESETS = {
    # group-dependent comparison of the two learners; g_c(1) equals g_c = 0.1
    "dependent": dict(variant=GROUP_DEPENDENT, placement="C-1", scale=0.2),
    # commission sweep, independent purchases, companions split between agents 1 and 3
    "commission": dict(variant=INDEPENDENT, placement="C-2"),
    "C-1": dict(variant=INDEPENDENT, placement="C-1"),
    "C-2": dict(variant=INDEPENDENT, placement="C-2"),
    "C-3": dict(variant=INDEPENDENT, placement="C-3"),
}


def preset(name: str, seed: int = 0, **overrides):
    """Three agents, 20 queries with 2 companions each from a 10-item pool
    (30 items, 10 per agent), unit prices, ``N = 2``."""
    if name not in PRESETS:
        raise ConfigurationError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    kw = dict(N_1=20, F_1=2, M=3, N=2, pool_size=10, assignment="explicit", seed=seed,
              g_c=0.1, g_nc=0.01, a=0.5, c=0.5)
    kw.update(PRESETS[name])
    kw.update(overrides)
    return generate(**kw)


def companion_table(scenario: CoPurchaseScenario) -> np.ndarray:
    """Query x pool incidence matrix, mostly for inspection."""
    tab = np.zeros((scenario.N_1, len(scenario.pool)), dtype=int)
    base = scenario.pool[0] if scenario.pool else 0
    for q, comps in scenario.co_purchase.items():
        for f in comps:
            tab[q, f - base] = 1
    return tab
