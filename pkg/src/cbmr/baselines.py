"""Reference policies for comparison plots.

``OraclePolicy`` is the only learner allowed to read the true model; it
plays the benchmark and so incurs zero pseudo-regret. ``RandomPolicy`` and
``EpsGreedy`` are simple reference learners without the phase schedule.
"""

from __future__ import annotations

import numpy as np

from .cbmr_ind import sample_without
from .policy import EXPLOIT, EXPLORE, Decision, Learner, Response, _choice, argmax_random


class OraclePolicy(Learner):
    name = "oracle"

    def __init__(self, view, oracle, caps=None):
        super().__init__(view, caps)
        self.oracle = oracle
        self._best = {}
        self._resp = {}

    def select(self, x, t, rng):
        key = self._ctx(x)
        a = self._best.get(key)
        if a is None:
            a = self._best[key] = self.oracle.optimal_action(self.agent, self.space.actions, x)[0]
        return Decision(a, EXPLOIT, self.cell(x))

    def _ctx(self, x):
        return tuple(np.atleast_1d(x).tolist()) if isinstance(x, np.ndarray) else x

    def observe(self, d, outcome, t):
        pass

    def respond(self, requester, x, m, t, rng, allowed=None):
        key = (requester, self._ctx(x), tuple(m))
        items = self._resp.get(key)
        if items is None:
            items = self._resp[key] = self.oracle.best_response(self.agent, m, x, requester=requester)[0]
        return Response(tuple(items), self.cell(x))

    def observe_response(self, r, bought, t):
        pass


class RandomPolicy(Learner):
    name = "random"

    def select(self, x, t, rng):
        return Decision(int(rng.random() * len(self.space)), EXPLORE, self.cell(x))

    def observe(self, d, outcome, t):
        pass

    def respond(self, requester, x, m, t, rng, allowed=None):
        own = [f for f in self.space.own_items if allowed is None or f in allowed]
        return Response(tuple(sorted(sample_without(rng, own, m[self.agent]))), self.cell(x))

    def observe_response(self, r, bought, t):
        pass


class EpsGreedy(Learner):
    """Per-cell epsilon-greedy over whole actions and responder subsets."""

    name = "eps-greedy"

    def __init__(self, view, eps: float = 0.1, caps=None):
        super().__init__(view, caps)
        if not 0.0 <= eps <= 1.0:
            raise ValueError("eps must lie in [0, 1]")
        self.eps = eps
        A, C = len(self.space), self.cells
        self.n = np.zeros((C, A), dtype=np.int64)
        self.r_bar = np.zeros((C, A))
        self.resp_n = np.zeros((C, A), dtype=np.int64)
        self.pi_bar = np.zeros((C, A))

    def select(self, x, t, rng):
        l = self.cell(x)
        untried = np.flatnonzero(self.n[l] == 0)
        if len(untried):
            return Decision(int(_choice(rng, untried)), EXPLORE, l)
        if rng.random() < self.eps:
            return Decision(int(rng.random() * len(self.space)), EXPLORE, l)
        return Decision(argmax_random(self.r_bar[l], rng), EXPLOIT, l)

    def observe(self, d, outcome, t):
        n = self.n[d.cell, d.index]
        self.r_bar[d.cell, d.index] = (n * self.r_bar[d.cell, d.index] + outcome.reward) / (n + 1)
        self.n[d.cell, d.index] = n + 1

    def respond(self, requester, x, m, t, rng, allowed=None):
        l = self.cell(x)
        B = np.array(self.space.responder_set(m))
        if allowed is not None:
            B = np.array([b for b in B if all(f in allowed for f in self.space.actions[b].own_items)])
        untried = B[self.resp_n[l, B] == 0]
        if len(untried):
            b = int(_choice(rng, untried))
        elif rng.random() < self.eps:
            b = int(_choice(rng, B))
        else:
            b = int(B[argmax_random(self.pi_bar[l, B], rng)])
        return Response(self.space.actions[b].own_items, l, b)

    def observe_response(self, r, bought, t):
        n = self.resp_n[r.cell, r.token]
        self.pi_bar[r.cell, r.token] = (n * self.pi_bar[r.cell, r.token] + self.response_value(bought)) / (n + 1)
        self.resp_n[r.cell, r.token] = n + 1
