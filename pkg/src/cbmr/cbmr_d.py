"""Action-level learner for group-dependent purchase probabilities.

Every action keeps its own reward estimate per context cell. Cooperative
actions are first trained (rewards discarded while the called agents learn
what to send), then explored, then exploited. Responses to other agents are
chosen by a separate purchase-rate estimate per own subset.
"""

from __future__ import annotations

import numpy as np

from .policy import EXPLOIT, EXPLORE, TRAIN, Decision, Learner, Outcome, Response, _choice, argmax_random


class CbmrD(Learner):
    name = "cbmr-d"

    def __init__(self, view, caps=None):
        super().__init__(view, caps)
        sp = self.space
        A, C = len(sp), self.cells
        self.coop = sp.cooperative
        coef = np.zeros(A)
        for a, m in enumerate(sp.m_vectors):
            called = [self.control.arm_coef(n, self.pool(j)) for j, n in enumerate(m) if j != self.agent and n > 0]
            coef[a] = max(called, default=0)
        self.d2_coef = coef
        # N1: training selections (cooperative only); N2: explore/exploit selections
        self.N1 = np.zeros((C, A), dtype=np.int64)
        self.N2 = np.zeros((C, A), dtype=np.int64)
        self.r_bar = np.zeros((C, A))
        # responder side: purchase-rate estimates indexed by the same action ids
        self.resp_n = np.zeros((C, A), dtype=np.int64)
        self.pi_bar = np.zeros((C, A))
        self._B = {key: np.array(v) for key, v in sp._responder.items()}

    @property
    def N(self):
        """Total selections per (cell, action), ``N1 + N2``."""
        return self.N1 + self.N2

    # -- own users --------------------------------------------------------

    def deficiency(self, l: int, t: int):
        g = self.control.base(t)
        train = self.coop & (self.N1[l] <= self.d2_coef * g)
        return train, train | (self.N2[l] <= g)

    def select(self, x, t, rng) -> Decision:
        l = self.cell(x)
        train, deficient = self.deficiency(l, t)
        if deficient.any():
            a = int(_choice(rng, np.flatnonzero(deficient)))
            return Decision(a, TRAIN if train[a] else EXPLORE, l)
        return Decision(argmax_random(self.r_bar[l], rng), EXPLOIT, l)

    def observe(self, d: Decision, outcome: Outcome, t: int) -> None:
        self.update_own(d.index, d.cell, d.phase, outcome.reward)

    def update_own(self, a: int, l: int, phase: str, reward: float) -> None:
        if phase == TRAIN:
            if not self.coop[a]:
                raise AssertionError(f"own-only action {a} cannot be trained")
            self.N1[l, a] += 1
            return
        n = self.N2[l, a]
        self.r_bar[l, a] = (n * self.r_bar[l, a] + reward) / (n + 1)
        self.N2[l, a] = n + 1

    # -- requests from other agents ---------------------------------------

    def respond(self, requester, x, m, t, rng, allowed=None) -> Response:
        l = self.cell(x)
        B = self.candidates(m, allowed)
        g = self.control.base(t)
        under = B[self.resp_n[l, B] <= g]
        if len(under):
            b = int(_choice(rng, under))
        else:
            b = int(B[argmax_random(self.pi_bar[l, B], rng)])
        return Response(self.space.actions[b].own_items, l, b)

    def candidates(self, m, allowed=None) -> np.ndarray:
        key = tuple(m[j] for j in self.space.others)
        if key not in self._B:
            raise ValueError(f"agent {self.agent} cannot serve recommendation vector {tuple(m)}")
        B = self._B[key]
        if allowed is not None:
            acts = self.space.actions
            B = np.array([b for b in B if all(f in allowed for f in acts[b].own_items)], dtype=int)
            if not len(B):
                raise ValueError(f"agent {self.agent} has no eligible subset for {tuple(m)}")
        return B

    def observe_response(self, r: Response, bought, t) -> None:
        self.update_purchase_rate(r.token, r.cell, self.response_value(bought))

    def update_purchase_rate(self, b: int, l: int, purchases: float) -> None:
        n = self.resp_n[l, b]
        self.pi_bar[l, b] = (n * self.pi_bar[l, b] + purchases) / (n + 1)
        self.resp_n[l, b] = n + 1

    # -- reporting --------------------------------------------------------

    def training_count(self) -> int:
        return int(self.N1.sum())

    def snapshot(self) -> dict:
        labels = self.partition.cell_labels()
        cells = {}
        for l in range(self.cells):
            if not (self.N1[l].any() or self.N2[l].any() or self.resp_n[l].any()):
                continue
            cells[str(labels[l])] = {
                "N1": self.N1[l].tolist(), "N2": self.N2[l].tolist(), "r_bar": self.r_bar[l].tolist(),
                "resp_n": self.resp_n[l].tolist(), "pi_bar": self.pi_bar[l].tolist(),
            }
        return {"schema": 1, "policy": self.name, "agent": self.agent,
                "actions": [k.label() for k in self.space.actions], "cells": cells}
