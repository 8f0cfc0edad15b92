"""Arm-level learner for independent purchase probabilities.

Actions decompose into arms (one per own item, one per (agent, count)
request). Estimates are kept per arm and recombined linearly, so every
selected action refreshes all of its arms at once. Each arm moves through
its own phases; one slot can train one arm while exploiting another.
"""

from __future__ import annotations

import numpy as np

from .policy import EXPLOIT, EXPLORE, TRAIN, Decision, Learner, Outcome, Response, _choice, argmax_random


def sample_without(rng, seq, k):
    """``k`` distinct elements of ``seq`` chosen uniformly (partial shuffle)."""
    pool = list(seq)
    for n in range(k):
        m = n + int(rng.random() * (len(pool) - n))
        pool[n], pool[m] = pool[m], pool[n]
    return pool[:k]


class CbmrInd(Learner):
    name = "cbmr-ind"

    def __init__(self, view, caps=None):
        super().__init__(view, caps)
        sp = self.space
        J, C = len(sp.arms), self.cells
        self.foreign = sp.foreign_arm
        self.n_own = int((~self.foreign).sum())
        w = np.zeros(J)
        coef = np.zeros(J)
        for u, arm in enumerate(sp.arms):
            if arm.is_foreign:
                w[u] = view.rates[arm.agent]
                coef[u] = self.control.arm_coef(arm.n, self.pool(arm.agent))
            else:
                w[u] = view.prices[arm.item]
        self.w, self.d2_coef = w, coef
        self.incidence = sp.incidence
        self.incidence_f = sp.incidence.astype(float)
        self.N_own = np.zeros((C, J), dtype=np.int64)  # own-item arms
        self.N1 = np.zeros((C, J), dtype=np.int64)  # foreign arms, training
        self.N2 = np.zeros((C, J), dtype=np.int64)  # foreign arms, explore/exploit
        self.nu = np.zeros((C, J))

    @property
    def N(self):
        return np.where(self.foreign, self.N1 + self.N2, self.N_own)

    def deficient_arms(self, l: int, t: int) -> np.ndarray:
        g = self.control.base(t)
        foreign = self.foreign
        train = foreign & (self.N1[l] <= self.d2_coef * g)
        under = foreign & (self.N2[l] <= g)
        own = ~foreign & (self.N_own[l] <= g)
        return train | under | own

    def objective(self, l: int) -> np.ndarray:
        """Estimated reward of every action: the sum of its arms' weighted rates."""
        return self.incidence_f @ (self.w * self.nu[l])

    def arm_phase(self, u: int, l: int, g: float) -> str:
        if self.foreign[u]:
            if self.N1[l, u] <= self.d2_coef[u] * g:
                return TRAIN
            return EXPLORE if self.N2[l, u] <= g else EXPLOIT
        return EXPLORE if self.N_own[l, u] <= g else EXPLOIT

    def select(self, x, t, rng) -> Decision:
        l = self.cell(x)
        S = self.deficient_arms(l, t)
        if S.any():
            eligible = np.flatnonzero(self.incidence[:, S].any(axis=1))
            a = int(_choice(rng, eligible))
        else:
            a = argmax_random(self.objective(l), rng)
        g = self.control.base(t)
        phases = tuple(self.arm_phase(u, l, g) for u in self.space.action_arms[a])
        if TRAIN in phases:
            slot = TRAIN
        elif EXPLORE in phases:
            slot = EXPLORE
        else:
            slot = EXPLOIT
        return Decision(a, slot, l, phases)

    def observe(self, d: Decision, outcome: Outcome, t: int) -> None:
        arms = self.space.arms
        for u, phase in zip(self.space.action_arms[d.index], d.arm_phases):
            arm = arms[u]
            if arm.is_foreign:
                U = outcome.foreign_value.get(arm.agent, 0.0)
                if U < 0 or (not self.value_weighted and U > arm.n):
                    raise ValueError(f"feedback {U} out of range for arm {arm}")
                self.update_ind(u, d.cell, U, train=phase == TRAIN)
            else:
                self.update_ind(u, d.cell, 1.0 if arm.item in outcome.own_bought else 0.0)

    def update_ind(self, u: int, l: int, feedback: float, train: bool = False) -> None:
        if self.foreign[u]:
            if train:
                self.N1[l, u] += 1
                return
            n = self.N2[l, u]
            self.nu[l, u] = (n * self.nu[l, u] + feedback) / (n + 1)
            self.N2[l, u] = n + 1
        else:
            if feedback not in (0.0, 1.0):
                raise ValueError(f"own-item feedback must be 0 or 1, got {feedback}")
            n = self.N_own[l, u]
            self.nu[l, u] = (n * self.nu[l, u] + feedback) / (n + 1)
            self.N_own[l, u] = n + 1

    # -- requests from other agents ---------------------------------------

    def respond(self, requester, x, m, t, rng, allowed=None) -> Response:
        mi = m[self.agent]
        l = self.cell(x)
        own = self.space.own_items
        cand = range(self.n_own) if allowed is None else [u for u in range(self.n_own) if own[u] in allowed]
        if mi > len(cand):
            raise ValueError(f"agent {self.agent} cannot supply {mi} items")
        g = self.control.base(t)
        under = [u for u in cand if self.N_own[l, u] <= g]
        if len(under) >= mi:
            picked = sample_without(rng, under, mi)
        else:
            explored = [u for u in cand if self.N_own[l, u] > g]
            key = self.nu[l] * (self.w if self.value_weighted else 1.0)
            explored.sort(key=lambda u: (-key[u], rng.random()))
            picked = under + explored[: mi - len(under)]
        picked = tuple(sorted(picked))
        return Response(tuple(own[u] for u in picked), l, picked)

    def observe_response(self, r: Response, bought, t) -> None:
        own = self.space.own_items
        for u in r.token:
            self.update_ind(u, r.cell, 1.0 if own[u] in bought else 0.0)

    # -- reporting --------------------------------------------------------

    def training_count(self) -> int:
        return int(self.N1.sum())

    def snapshot(self) -> dict:
        labels = self.partition.cell_labels()
        cells = {}
        for l in range(self.cells):
            if not (self.N_own[l].any() or self.N1[l].any() or self.N2[l].any()):
                continue
            cells[str(labels[l])] = {
                "N": self.N[l].tolist(), "N1": self.N1[l].tolist(), "N2": self.N2[l].tolist(),
                "nu_bar": self.nu[l].tolist(),
            }
        arms = [f"own:{u.item}" if not u.is_foreign else f"agent{u.agent}x{u.n}" for u in self.space.arms]
        return {"schema": 1, "policy": self.name, "agent": self.agent, "arms": arms, "cells": cells}
