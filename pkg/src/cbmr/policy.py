"""Learner interface shared by every recommendation policy.

A learner only ever sees its own inventory and prices, the commission rates
it earns, the contexts of users shown to it, and purchase outcomes of the
recommendations it took part in. The harness hands it nothing else.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .actions import ActionSpace
from .control import ControlFunctions
from .market import PROPORTIONAL

TRAIN, EXPLORE, EXPLOIT = "train", "explore", "exploit"


@dataclass(frozen=True)
class Decision:
    index: int  # action index in the learner's ActionSpace
    phase: str
    cell: int
    arm_phases: tuple = ()


@dataclass(frozen=True)
class Outcome:
    """What a requester learns after its user leaves."""

    reward: float
    own_bought: frozenset
    foreign_value: Mapping[int, float] = field(default_factory=dict)  # per called agent


@dataclass(frozen=True)
class Response:
    items: tuple
    cell: int
    token: object = None


@dataclass
class AgentView:
    """Private knowledge handed to one learner at construction."""

    agent: int
    own_items: Sequence[int]
    prices: Mapping[int, float]
    M: int
    N: int
    rates: Sequence[float]  # commission rate earned per other agent (0 for self)
    mode: str
    partition: object
    control: ControlFunctions
    pools: Mapping[int, int] | None = None  # training pool per agent, default F_max
    reachable: Sequence[int] | None = None  # agents that may be called, default all


def _choice(rng, seq):
    return seq[int(rng.random() * len(seq))] if len(seq) > 1 else seq[0]


def argmax_random(values: np.ndarray, rng, tol: float = 1e-12) -> int:
    top = values.max()
    idx = np.flatnonzero(values >= top - tol)
    return int(idx[0]) if len(idx) == 1 else int(_choice(rng, idx))


class Learner:
    """Base class; subclasses implement selection, response and updates."""

    name = "base"

    def __init__(self, view: AgentView, caps: dict | None = None):
        self.view = view
        self.agent = view.agent
        self.control = view.control
        self.partition = view.partition
        if caps is None and view.reachable is not None:
            caps = {j: 0 for j in range(view.M) if j != view.agent and j not in set(view.reachable)}
        self.space = ActionSpace(view.agent, view.own_items, view.M, view.N, caps)
        self.cells = view.partition.cell_count
        self.own_index = {f: n for n, f in enumerate(self.space.own_items)}
        self.item_weight = np.array([view.prices[f] for f in self.space.own_items])
        self.value_weighted = view.mode == PROPORTIONAL

    def pool(self, j: int) -> int:
        if self.view.pools is None:
            return self.control.F_max
        return int(self.view.pools.get(j, self.control.F_max))

    def cell(self, x) -> int:
        return self.partition.index_of(x)

    def action(self, d: Decision):
        return self.space.actions[d.index]

    def select(self, x, t: int, rng) -> Decision:
        raise NotImplementedError

    def observe(self, d: Decision, outcome: Outcome, t: int) -> None:
        raise NotImplementedError

    def respond(self, requester: int, x, m, t: int, rng, allowed=None) -> Response:
        raise NotImplementedError

    def observe_response(self, r: Response, bought: frozenset, t: int) -> None:
        raise NotImplementedError

    def response_value(self, bought) -> float:
        if self.value_weighted:
            return float(sum(self.view.prices[f] for f in bought))
        return float(len(bought))

    def training_count(self) -> int:
        return 0

    def snapshot(self) -> dict:
        return {"policy": self.name, "agent": self.agent}
