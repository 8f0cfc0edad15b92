"""Ground-truth market: items, commissions, purchase models and arrivals.

Only the oracle and the purchase sampler read true probabilities. Learners
see purchase outcomes and nothing else.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

GROUP_DEPENDENT = "group_dependent"
INDEPENDENT = "independent"
FIXED = "fixed"
PROPORTIONAL = "proportional"


class ConfigurationError(ValueError):
    """Raised for market settings that violate the model's assumptions."""


@dataclass(frozen=True)
class Item:
    id: int
    owner: int
    price: float = 1.0


@dataclass(frozen=True)
class CommissionSchema:
    """Commissions paid by an item's owner to the agent that sold it.

    ``c[i][j]`` is what recommender ``i`` earns on a sale of an item owned by
    ``j``: a fixed amount, or a rate applied to the price in proportional
    mode. The diagonal is ignored.
    """

    mode: str
    c: np.ndarray

    def __post_init__(self):
        c = np.array(self.c, dtype=float)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ConfigurationError("commission matrix must be square")
        if self.mode not in (FIXED, PROPORTIONAL):
            raise ConfigurationError(f"unknown commission mode {self.mode!r}")
        off = c[~np.eye(len(c), dtype=bool)]
        if np.any(off < 0):
            raise ConfigurationError("commissions must be nonnegative")
        if self.mode == PROPORTIONAL and np.any(off >= 1):
            raise ConfigurationError("proportional commission rates must lie below 1")
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    @classmethod
    def uniform(cls, M: int, value: float, mode: str = FIXED) -> "CommissionSchema":
        c = np.full((M, M), float(value))
        np.fill_diagonal(c, 0.0)
        return cls(mode, c)

    def amount(self, recommender: int, owner: int, price: float) -> float:
        """Commission earned by ``recommender`` on one sale of ``owner``'s item."""
        if recommender == owner:
            return 0.0
        rate = float(self.c[recommender, owner])
        return rate * price if self.mode == PROPORTIONAL else rate


def settle(seller: int, recommender: int, item: Item, schema: CommissionSchema, t: int | None = None):
    """Split one sale between the recommending agent and the item owner.

    Returns ``(recommender_revenue, seller_revenue)``. Own-item sales pay the
    full price to the recommender.
    """
    if item.owner != seller:
        raise ValueError(f"item {item.id} is owned by {item.owner}, not {seller}")
    if seller == recommender:
        return float(item.price), 0.0
    fee = schema.amount(recommender, seller, item.price)
    if fee > item.price + 1e-12:
        raise ConfigurationError(
            f"commission {fee} exceeds price {item.price} of item {item.id}; "
            "the item should have been excluded from cross-recommendation"
        )
    return fee, float(item.price) - fee


# --------------------------------------------------------------------------
# purchase models


class PurchaseModel:
    """Base class. Subclasses implement :meth:`_q`.

    ``_q(f, x, group, other_counts)`` receives the recommended items that share
    ``f``'s owner (``group``, including ``f``) and the per-agent counts of the
    remaining recommendations, so group-dependent models cannot see the
    identities of foreign companions.
    """

    variant: str = INDEPENDENT
    L: float = 1.0
    alpha: float = 1.0

    def bind(self, owner: Mapping[int, int], M: int) -> None:
        self._owner = dict(owner)
        self._M = M

    def q(self, f: int, x, rec_set: Iterable[int]) -> float:
        rec = tuple(rec_set)
        if f not in rec:
            raise ValueError(f"item {f} is not part of the recommended set {rec}")
        if self.variant == INDEPENDENT:
            return self._q(f, x, None, None)
        group, counts = self.split(f, rec)
        return self._q(f, x, group, counts)

    def split(self, f: int, rec: Sequence[int]):
        j = self._owner[f]
        group = frozenset(g for g in rec if self._owner[g] == j)
        counts = [0] * self._M
        for g in rec:
            o = self._owner[g]
            if o != j:
                counts[o] += 1
        counts[j] = 0
        return group, tuple(counts)

    def _q(self, f, x, group, other_counts) -> float:  # pragma: no cover - abstract
        raise NotImplementedError

    def describe(self) -> dict:
        return {"variant": self.variant, "L": self.L, "alpha": self.alpha}


class CoPurchaseModel(PurchaseModel):
    """Query/companion purchase model over discrete contexts.

    Independent variant: companions of the query sell with ``g_c``, other
    items with ``g_nc``. Group-dependent variant: with ``n`` companions of
    the query shown from the same owner, each of them sells with
    ``scale * (1 - a * n)``; all other items sell with ``b``.
    """

    def __init__(self, co_purchase: Mapping[int, Iterable[int]], variant=GROUP_DEPENDENT,
                 g_c=0.1, g_nc=0.01, a=0.5, b=None, scale=1.0, L=1.0, alpha=1.0 / 13):
        if variant not in (GROUP_DEPENDENT, INDEPENDENT):
            raise ConfigurationError(f"unknown purchase-model variant {variant!r}")
        self.co_purchase = {int(k): frozenset(int(v) for v in vs) for k, vs in co_purchase.items()}
        self.variant = variant
        self.g_c, self.g_nc, self.a = float(g_c), float(g_nc), float(a)
        self.b = float(g_nc if b is None else b)
        self.scale = float(scale)
        self.L, self.alpha = float(L), float(alpha)
        for name, v in (("g_c", self.g_c), ("g_nc", self.g_nc), ("b", self.b)):
            if not 0.0 <= v <= 1.0:
                raise ConfigurationError(f"{name}={v} is not a probability")

    def companions(self, x) -> frozenset:
        return self.co_purchase.get(int(x), frozenset())

    def _q(self, f, x, group, other_counts):
        comp = self.companions(x)
        if self.variant == INDEPENDENT:
            return self.g_c if f in comp else self.g_nc
        if f not in comp:
            return self.b
        n = sum(1 for g in group if g in comp)
        return max(0.0, self.scale * (1.0 - self.a * n))

    def describe(self):
        return {"kind": "co_purchase", "variant": self.variant, "g_c": self.g_c,
                "g_nc": self.g_nc, "a": self.a, "b": self.b, "scale": self.scale,
                "L": self.L, "alpha": self.alpha,
                "co_purchase": {str(k): sorted(v) for k, v in sorted(self.co_purchase.items())}}


class HolderBumpModel(PurchaseModel):
    """Continuous-context model ``q_f(x) = max(floor_f, peak_f - L ||x - loc_f||^alpha)``.

    For ``alpha <= 1`` this is Hölder with constants ``(L, alpha)``. The
    group-dependent variant multiplies by ``damp[f][g]`` for every same-owner
    companion ``g`` and by ``cross ** (number of foreign items)``; factors in
    ``[0, 1]`` keep the Hölder constant.
    """

    def __init__(self, peaks, locs, floors=None, L=1.0, alpha=1.0, variant=INDEPENDENT,
                 damp=None, cross=1.0):
        if alpha <= 0 or alpha > 1:
            raise ConfigurationError("HolderBumpModel needs 0 < alpha <= 1")
        self.peaks = {int(k): float(v) for k, v in dict(peaks).items()}
        self.locs = {int(k): np.asarray(v, dtype=float) for k, v in dict(locs).items()}
        self.floors = {k: 0.0 for k in self.peaks} if floors is None else {int(k): float(v) for k, v in dict(floors).items()}
        self.L, self.alpha, self.variant = float(L), float(alpha), variant
        self.damp = {} if damp is None else {(int(a), int(b)): float(v) for (a, b), v in dict(damp).items()}
        self.cross = float(cross)

    def base(self, f, x) -> float:
        dist = float(np.linalg.norm(np.atleast_1d(np.asarray(x, dtype=float)) - self.locs[f]))
        return min(1.0, max(self.floors[f], self.peaks[f] - self.L * dist ** self.alpha))

    def _q(self, f, x, group, other_counts):
        v = self.base(f, x)
        if self.variant == INDEPENDENT:
            return v
        for g in group:
            if g != f:
                v *= self.damp.get((f, g), 1.0)
        return v * self.cross ** sum(other_counts)


def _unit_hash(*parts) -> float:
    h = hashlib.blake2b(repr(parts).encode(), digest_size=8).digest()
    return struct.unpack("<Q", h)[0] / 2.0 ** 64


class TableModel(PurchaseModel):
    """Pseudo-random lookup table on discrete contexts, for toy instances.

    Every probability is a deterministic hash of ``(seed, f, x, group,
    other_counts)`` scaled into ``[0, q_max]``; the group-dependent variant
    keys on the same-owner companions and foreign counts only.
    """

    def __init__(self, seed: int, variant=INDEPENDENT, q_max=0.9):
        self.seed, self.variant, self.q_max = int(seed), variant, float(q_max)

    def _q(self, f, x, group, other_counts):
        if self.variant == INDEPENDENT:
            key = (self.seed, f, int(x))
        else:
            key = (self.seed, f, int(x), tuple(sorted(group)), other_counts)
        return self.q_max * _unit_hash(*key)


# --------------------------------------------------------------------------
# arrivals


@dataclass(frozen=True)
class ArrivalProcess:
    """One context per agent per slot.

    kind ``fixed``: always ``context``; ``uniform``: i.i.d. uniform over
    ``queries``; ``box``: i.i.d. uniform on ``[0, 1]^d``.
    """

    kind: str
    context: object = None
    queries: tuple = ()
    d: int = 1

    def draw(self, rng):
        if self.kind == "fixed":
            return self.context
        if self.kind == "uniform":
            return self.queries[int(rng.random() * len(self.queries))]
        if self.kind == "box":
            return np.array([rng.random() for _ in range(self.d)])
        raise ConfigurationError(f"unknown arrival kind {self.kind!r}")

    def to_dict(self):
        if self.kind == "fixed":
            ctx = self.context.tolist() if isinstance(self.context, np.ndarray) else self.context
            return {"kind": "fixed", "context": ctx}
        if self.kind == "uniform":
            return {"kind": "uniform", "queries": list(self.queries)}
        return {"kind": "box", "d": self.d}

    @classmethod
    def from_dict(cls, spec: Mapping):
        kind = spec.get("kind")
        if kind == "fixed":
            ctx = spec["context"]
            return cls("fixed", context=np.asarray(ctx, dtype=float) if isinstance(ctx, list) else ctx)
        if kind == "uniform":
            return cls("uniform", queries=tuple(spec["queries"]))
        if kind == "box":
            return cls("box", d=int(spec.get("d", 1)))
        raise ConfigurationError(f"unknown arrival kind {kind!r}")


# --------------------------------------------------------------------------
# market


@dataclass
class MarketModel:
    """Agents, disjoint inventories, commissions and the true purchase model."""

    items: Sequence[Item]
    inventories: Sequence[Sequence[int]]
    commissions: CommissionSchema
    purchase: PurchaseModel
    N: int
    arrivals: Sequence[ArrivalProcess] = ()
    F_max: int | None = None
    contexts: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.items = tuple(self.items)
        self.item = {it.id: it for it in self.items}
        if len(self.item) != len(self.items):
            raise ConfigurationError("duplicate item ids")
        self.inventories = tuple(tuple(inv) for inv in self.inventories)
        seen = set()
        for j, inv in enumerate(self.inventories):
            for f in inv:
                if f in seen:
                    raise ConfigurationError(f"item {f} appears in more than one inventory")
                seen.add(f)
                if self.item[f].owner != j:
                    raise ConfigurationError(f"item {f} listed under agent {j} but owned by {self.item[f].owner}")
            if len(inv) < self.N:
                raise ConfigurationError(f"agent {j} holds {len(inv)} items, fewer than N={self.N}")
        for it in self.items:
            if it.price <= 0:
                raise ConfigurationError(f"item {it.id} has non-positive price")
        if self.commissions.c.shape[0] != self.M:
            raise ConfigurationError("commission matrix size does not match the number of agents")
        if self.F_max is None:
            self.F_max = max(len(inv) for inv in self.inventories)
        self.owner = {it.id: it.owner for it in self.items}
        self.purchase.bind(self.owner, self.M)
        self.arrivals = tuple(self.arrivals)

    @property
    def M(self) -> int:
        return len(self.inventories)

    def price(self, f: int) -> float:
        return self.item[f].price

    def true_q(self, f: int, x, rec_set) -> float:
        return self.purchase.q(f, x, rec_set)

    def sample_purchases(self, x, rec_set, rng) -> set:
        rec = tuple(rec_set)
        if len(set(rec)) != self.N:
            raise ValueError(f"recommended set must hold exactly N={self.N} distinct items")
        return {f for f in rec if rng.random() < self.purchase.q(f, x, rec)}

    def settle(self, recommender: int, f: int):
        it = self.item[f]
        return settle(it.owner, recommender, it, self.commissions)


def sample_purchases(model: MarketModel, x, rec_set, rng) -> set:
    return model.sample_purchases(x, rec_set, rng)


def true_q(model: MarketModel, f: int, x, rec_set) -> float:
    return model.true_q(f, x, rec_set)
