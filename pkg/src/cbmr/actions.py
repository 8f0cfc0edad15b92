"""Combinatorial action sets, responder sets and the arm decomposition.

An action of agent ``i`` shows ``len(own)`` of its own items and requests
``n_j`` items from every other agent ``j``, filling exactly ``N`` slots.

Canonical order (relied on for bit-reproducible runs): actions are sorted by
their request vector (aligned with the ascending list of other agents,
compared lexicographically, so own-only actions come first) and then by own
subset in :func:`itertools.combinations` order. Arms list the own items in
inventory order followed by ``(agent, count)`` pairs sorted by agent, then
count.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class Action:
    owner: int
    own_items: tuple[int, ...]
    requests: tuple[tuple[int, int], ...]  # nonzero (agent, count) pairs, ascending agent

    @property
    def own_count(self) -> int:
        return len(self.own_items)

    @property
    def called_agents(self) -> tuple[int, ...]:
        return tuple(j for j, _ in self.requests)

    @property
    def is_cooperative(self) -> bool:
        return bool(self.requests)

    def n_from(self, j: int) -> int:
        for a, n in self.requests:
            if a == j:
                return n
        return 0

    def m_vector(self, M: int) -> tuple[int, ...]:
        """Recommendation vector: items shown per agent."""
        m = [0] * M
        m[self.owner] = len(self.own_items)
        for j, n in self.requests:
            m[j] = n
        return tuple(m)

    def label(self) -> str:
        own = ",".join(str(f) for f in self.own_items)
        req = ",".join(f"{j}x{n}" for j, n in self.requests)
        return f"own[{own}]req[{req}]"


@dataclass(frozen=True, order=True)
class Arm:
    kind: str  # "own" or "foreign"
    agent: int
    item: int = -1
    n: int = 1

    @classmethod
    def own(cls, owner: int, f: int) -> "Arm":
        return cls("own", owner, f, 1)

    @classmethod
    def foreign(cls, j: int, n: int) -> "Arm":
        return cls("foreign", j, -1, n)

    @property
    def is_foreign(self) -> bool:
        return self.kind == "foreign"


def _items(own) -> tuple[int, ...]:
    return tuple(range(own)) if isinstance(own, (int, np.integer)) else tuple(own)


def _caps(others, N, caps):
    if caps is None:
        return [N] * len(others)
    return [min(N, int(caps.get(j, N))) for j in others]


def enumerate_actions(own, M: int, N: int, owner: int = 0, caps: dict | None = None) -> list[Action]:
    """Every action of agent ``owner`` in canonical order.

    ``own`` is the inventory (or its size, meaning items ``0..own-1``);
    ``caps`` optionally limits how many items may be requested per agent.
    """
    items = _items(own)
    if N < 1 or M < 1:
        raise ValueError("N and M must be positive")
    if len(items) < N:
        raise ValueError(f"inventory of size {len(items)} cannot fill N={N} slots")
    others = [j for j in range(M) if j != owner]
    limits = _caps(others, N, caps)
    actions = []
    for vec in itertools.product(*(range(c + 1) for c in limits)):
        s = sum(vec)
        if s > N or N - s > len(items):
            continue
        req = tuple((j, n) for j, n in zip(others, vec) if n > 0)
        for sub in itertools.combinations(items, N - s):
            actions.append(Action(owner, sub, req))
    return actions


def action_count(own_size: int, M: int, N: int) -> int:
    """Closed-form ``|L_i|``: own-only subsets plus, for each own count ``n < N``,
    the ways of spreading the other ``N - n`` slots over ``M - 1`` agents."""
    total = math.comb(own_size, N)
    if M < 2:
        return total
    for n in range(N):
        total += math.comb(own_size, n) * math.comb(N - n + M - 2, M - 2)
    return total


def enumerate_arms(own, M: int, N: int, owner: int = 0, caps: dict | None = None) -> list[Arm]:
    items = _items(own)
    others = [j for j in range(M) if j != owner]
    arms = [Arm.own(owner, f) for f in items]
    for j, cap in zip(others, _caps(others, N, caps)):
        arms.extend(Arm.foreign(j, n) for n in range(1, cap + 1))
    return arms


def arms_of_action(k: Action) -> frozenset:
    arms = {Arm.own(k.owner, f) for f in k.own_items}
    arms.update(Arm.foreign(j, n) for j, n in k.requests)
    return frozenset(arms)


def responder_actions(F_j, m_j: int) -> list[tuple[int, ...]]:
    """All size-``m_j`` subsets of a responder's inventory."""
    items = _items(F_j)
    if m_j < 0 or m_j > len(items):
        raise ValueError(f"cannot pick {m_j} items out of {len(items)}")
    return list(itertools.combinations(items, m_j))


class ActionSpace:
    """Indexed action and arm sets of one agent, built eagerly."""

    def __init__(self, owner: int, own_items: Sequence[int], M: int, N: int, caps: dict | None = None):
        self.owner, self.M, self.N = owner, M, N
        self.own_items = tuple(own_items)
        self.others = tuple(j for j in range(M) if j != owner)
        self.actions = enumerate_actions(self.own_items, M, N, owner, caps)
        self.index = {k: i for i, k in enumerate(self.actions)}
        self.cooperative = np.array([k.is_cooperative for k in self.actions], dtype=bool)
        self.arms = enumerate_arms(self.own_items, M, N, owner, caps)
        self.arm_index = {u: i for i, u in enumerate(self.arms)}
        self.foreign_arm = np.array([u.is_foreign for u in self.arms], dtype=bool)
        self.action_arms = [tuple(sorted(self.arm_index[u] for u in arms_of_action(k))) for k in self.actions]
        inc = np.zeros((len(self.actions), len(self.arms)), dtype=bool)
        for a, cols in enumerate(self.action_arms):
            inc[a, list(cols)] = True
        self.incidence = inc
        self.m_vectors = [k.m_vector(M) for k in self.actions]
        # responder view: B_i(m) keyed by the counts of the other agents
        self._responder = {}
        for a, m in enumerate(self.m_vectors):
            key = tuple(m[j] for j in self.others)
            self._responder.setdefault(key, []).append(a)

    def __len__(self):
        return len(self.actions)

    def responder_set(self, m: Sequence[int]) -> list[int]:
        """Indices of actions in ``B_i(m)``: own subsets of size ``m[i]`` shown
        alongside the remaining counts of ``m``."""
        key = tuple(m[j] for j in self.others)
        try:
            return self._responder[key]
        except KeyError:
            raise ValueError(f"agent {self.owner} cannot serve recommendation vector {tuple(m)}") from None
