"""Exact benchmark: one-step optimal sets, action rewards and regret.

Everything here reads the true purchase model and is off limits to the
learners. Rewards are weighted per recommender: own items earn their price,
foreign items earn the commission the recommender collects on them.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .actions import Action, action_count
from .market import PROPORTIONAL, MarketModel

BETA2 = math.pi ** 2 / 6.0
_TIE = 1e-12


def _key(x):
    return tuple(np.atleast_1d(x).tolist()) if isinstance(x, np.ndarray) else x


class Oracle:
    """Ground-truth evaluator for one market.

    ``commission_rows[i][j]`` overrides the commission rate agent ``i`` earns
    on ``j``'s items (used for routed networks, where it is the rate paid by
    the first hop). ``eligible[i]`` is the set of items ``i`` may show; by
    default every own item plus foreign items priced at least the commission.
    """

    def __init__(self, model: MarketModel, commission_rows=None, eligible=None):
        self.model = model
        M = model.M
        c = np.array(model.commissions.c if commission_rows is None else commission_rows, dtype=float)
        self.rates = c
        self.mode = model.commissions.mode
        self.weight = []
        for i in range(M):
            w = {}
            for it in model.items:
                if it.owner == i:
                    w[it.id] = it.price
                else:
                    w[it.id] = float(self.rates[i, it.owner]) * (it.price if self.mode == PROPORTIONAL else 1.0)
            self.weight.append(w)
        if eligible is None:
            eligible = []
            for i in range(M):
                eligible.append(frozenset(
                    it.id for it in model.items
                    if it.owner == i or self.mode == PROPORTIONAL or it.price + 1e-12 >= self.rates[i, it.owner]))
        self.eligible = [frozenset(e) for e in eligible]
        self._mu_star = {}
        self._sigma = {}

    # -- primitives -------------------------------------------------------

    def q(self, f, x, rec) -> float:
        return self.model.purchase.q(f, x, rec)

    def sigma(self, i: int, rec_set, x) -> float:
        """Expected one-slot reward of agent ``i`` for showing ``rec_set``."""
        rec = tuple(rec_set)
        w = self.weight[i]
        q = self.model.purchase.q
        return sum(w[f] * q(f, x, rec) for f in rec)

    def sigma_cached(self, i, rec_set, x) -> float:
        key = (i, _key(x), tuple(sorted(rec_set)))
        v = self._sigma.get(key)
        if v is None:
            v = self._sigma[key] = self.sigma(i, rec_set, x)
        return v

    def optimal_set(self, i: int, x):
        """Brute-force argmax of :meth:`sigma` over all ``N``-subsets of the
        items ``i`` may show; the lexicographically first maximizer wins."""
        best, best_val = None, -math.inf
        for rec in itertools.combinations(sorted(self.eligible[i]), self.model.N):
            v = self.sigma(i, rec, x)
            if v > best_val + _TIE:
                best, best_val = rec, v
        return best, best_val

    def _fill(self, groups: Mapping[int, Sequence[int]], m: Sequence[int]) -> tuple:
        """A concrete recommended set realizing count vector ``m``: the given
        groups, padded with arbitrary items of the remaining agents (purchase
        probabilities only see their counts)."""
        rec = []
        for j, n in enumerate(m):
            if j in groups:
                rec.extend(groups[j])
            elif n:
                rec.extend(self.model.inventories[j][:n])
        return tuple(rec)

    def purchase_rate(self, j: int, items: Sequence[int], m: Sequence[int], x) -> float:
        """Expected number (value, in proportional mode) of ``j``'s shown items
        that sell, alongside the counts ``m`` of the other groups."""
        if not items:
            return 0.0
        rec = self._fill({j: tuple(items)}, m)
        q = self.model.purchase.q
        if self.mode == PROPORTIONAL:
            return sum(self.model.price(f) * q(f, x, rec) for f in items)
        return sum(q(f, x, rec) for f in items)

    def best_response(self, j: int, m: Sequence[int], x, requester: int | None = None):
        """``(items, rate)`` maximizing the purchase rate over ``B_j(m)``."""
        pool = self.model.inventories[j]
        if requester is not None:
            pool = [f for f in pool if f in self.eligible[requester]]
        best, best_val = None, -math.inf
        for sub in itertools.combinations(pool, m[j]):
            v = self.purchase_rate(j, sub, m, x)
            if v > best_val + _TIE:
                best, best_val = sub, v
        return best, best_val

    def mu(self, i: int, k: Action, x) -> float:
        """Expected reward of action ``k`` when every called agent answers
        with its rate-maximizing subset."""
        m = k.m_vector(self.model.M)
        own = 0.0
        if k.own_items:
            rec = self._fill({i: k.own_items}, m)
            q = self.model.purchase.q
            own = sum(self.model.price(f) * q(f, x, rec) for f in k.own_items)
        total = own
        for j, _ in k.requests:
            sub, rate = self.best_response(j, m, x, requester=i)
            if sub is None:
                return -math.inf
            total += float(self.rates[i, j]) * rate
        return total

    def assemble(self, i: int, k: Action, x) -> tuple:
        """Recommended set produced by ``k`` under optimal responses."""
        m = k.m_vector(self.model.M)
        rec = list(k.own_items)
        for j, _ in k.requests:
            rec.extend(self.best_response(j, m, x, requester=i)[0])
        return tuple(rec)

    def optimal_action(self, i: int, actions: Sequence[Action], x):
        """``(index, mu*)`` of the best action; first index among ties."""
        vals = [self.mu(i, k, x) for k in actions]
        best = int(np.argmax(vals))
        return best, vals[best]

    def mu_star(self, i: int, x) -> float:
        """Optimal one-step expected reward, memoized on hashable contexts."""
        key = (i, _key(x))
        v = self._mu_star.get(key)
        if v is None:
            v = self._mu_star[key] = self.optimal_set(i, x)[1]
        return v


def default_oracle(model: MarketModel) -> Oracle:
    return Oracle(model)


def sigma(i, rec_set, x, model: MarketModel, commissions=None) -> float:
    return Oracle(model, commissions).sigma(i, rec_set, x)


def optimal_set(i, x, model: MarketModel, commissions=None):
    return Oracle(model, commissions).optimal_set(i, x)


def mu(i, k: Action, x, model: MarketModel, commissions=None) -> float:
    return Oracle(model, commissions).mu(i, k, x)


class OracleTable:
    """Per-(agent, cell) optimal actions at the cell centers."""

    def __init__(self, oracle: Oracle, spaces, partition):
        self.oracle = oracle
        self.partition = partition
        self.k_star = {}
        self.mu_star = {}
        self.mu_all = {}
        for i, space in enumerate(spaces):
            for l in partition.cell_labels():
                x = partition.cell_center(l)
                vals = np.array([oracle.mu(i, k, x) for k in space.actions])
                best = int(np.argmax(vals))
                self.k_star[i, l] = best
                self.mu_star[i, l] = float(vals[best])
                self.mu_all[i, l] = vals


@dataclass(frozen=True)
class RegretStep:
    optimal: float
    expected: float
    realized: float

    @property
    def pseudo(self) -> float:
        return self.optimal - self.expected

    @property
    def realized_regret(self) -> float:
        return self.optimal - self.realized


def regret_step(oracle: Oracle, i: int, x, rec_set, realized_reward: float) -> RegretStep:
    """Per-slot regret of agent ``i`` for the recommended set actually shown."""
    return RegretStep(oracle.mu_star(i, x), oracle.sigma_cached(i, rec_set, x), float(realized_reward))


# --------------------------------------------------------------------------
# finite-time bound curves (informational)


def Z_d(L_size: int, L_coop: int, F_max: int) -> int:
    return L_size + L_coop * math.comb(F_max, math.ceil(F_max / 2))


def Z_ind(J_size: int, M: int, N: int, pool: int) -> int:
    return J_size + (M - 1) * sum(math.comb(pool, z) for z in range(1, N + 1))


def leading_exponent(alpha: float, d: int) -> float:
    return (2 * alpha + d) / (3 * alpha + d)


def bound_curve(learner: str, *, Y_R: float, L: float, alpha: float, d: int, F_max: int,
                own_size: int, M: int, N: int, D_k: int = 1, D_h: int = 1):
    """Finite-time regret bound ``T -> value`` for learner "cbmr-d", "cbmr-ind"
    or "cbmr-ind-n"."""
    a, e_lead = alpha, leading_exponent(alpha, d)
    z = 2 * a / (3 * a + d)
    e_mid = (a + d) / (3 * a + d)
    e_low = d / (3 * a + d)
    holder = L * d ** (a / 2) + 1
    if learner == "cbmr-d":
        L_size = action_count(own_size, M, N)
        L_coop = L_size - math.comb(own_size, N)
        Z = Z_d(L_size, L_coop, F_max)
        big = math.comb(F_max, math.ceil(F_max / 2))

        def f(T):
            return (T ** e_lead * (4 * (Y_R * holder + 1) / e_lead + Y_R * 2 ** d * Z * math.log(T))
                    + T ** e_mid * 2 ** (d + 2) * Y_R * L_coop * BETA2 / z
                    + T ** e_low * 2 ** d * Y_R * (2 * L_coop * BETA2 + L_size)
                    + 2 * Y_R * big * BETA2)
        return f
    if learner not in ("cbmr-ind", "cbmr-ind-n"):
        raise ValueError(f"unknown learner {learner!r}")
    J = own_size + (M - 1) * N
    J_coop = (M - 1) * N
    pool = F_max if learner == "cbmr-ind" else D_k ** D_h * F_max
    Z = Z_ind(J, M, N, pool)

    def g(T):
        return (T ** e_lead * (4 * N * (Y_R * holder + 1) / e_lead + Y_R * 2 ** d * Z * math.log(T))
                + T ** e_mid * 2 ** (d + 2) * N * Y_R * J_coop * BETA2 / z
                + T ** e_low * 2 ** d * Y_R * (2 * J * BETA2 + J + (M - 1) * N)
                + 2 * Y_R * N * pool * BETA2)
    return g
