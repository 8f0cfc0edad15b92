"""Traced-run invariants over random toy markets."""

import random

import numpy as np
from hypothesis import given, settings, strategies as st

from cbmr.harness import Simulation
from cbmr.market import TableModel
from cbmr.policy import EXPLOIT, TRAIN

from conftest import make_market


def _toy(seed, variant):
    rng = random.Random(seed)
    M = rng.randint(2, 3)
    sizes = [rng.randint(2, 4) for _ in range(M)]
    return make_market(sizes, 2, TableModel(seed, variant=variant, q_max=0.6), c=rng.choice([0.2, 0.5]),
                       contexts=(0, 1, 2))


def _drive(sim, T, seed, check):
    rng = random.Random(seed)
    contexts = sim.market.contexts
    for t in range(1, T + 1):
        xs = tuple(contexts[int(rng.random() * len(contexts))] for _ in range(sim.market.M))
        check(t, xs, "before")
        tr = sim.run_slot(t, xs)
        check(t, tr, "after")


@given(st.integers(0, 10 ** 6), st.sampled_from(["independent", "group_dependent"]))
@settings(max_examples=15)
def test_cbmr_d_gate_and_counters(seed, variant):
    m = _toy(seed, variant)
    sim = Simulation(m, "cbmr-d", seed=seed, T=300, alpha=0.5)
    M = m.M
    sel = [np.zeros_like(a.N1) for a in sim.agents]
    kept = [np.zeros_like(a.r_bar) for a in sim.agents]  # reward sums outside training
    gate = {}

    def check(t, obj, when):
        if when == "before":
            for i, a in enumerate(sim.agents):
                l = a.cell(obj[i])
                gate[i] = a.deficiency(l, t)[1].any()
            return
        for i, a in enumerate(sim.agents):
            d = obj.decisions[i]
            if d.phase == EXPLOIT:
                assert not gate[i]
            else:
                assert gate[i]
            sel[i][d.cell, d.index] += 1
            if d.phase != TRAIN:
                kept[i][d.cell, d.index] += obj.rewards[i]

    _drive(sim, 300, seed, check)
    for i, a in enumerate(sim.agents):
        assert np.array_equal(sel[i], a.N1 + a.N2)
        assert not a.N1[:, ~a.coop].any()
        # sample means only contain non-training rewards
        n = a.N2
        assert np.allclose(a.r_bar * n, kept[i])


@given(st.integers(0, 10 ** 6), st.sampled_from(["independent", "group_dependent"]))
@settings(max_examples=15)
def test_cbmr_ind_gate_and_counters(seed, variant):
    m = _toy(seed, variant)
    sim = Simulation(m, "cbmr-ind", seed=seed, T=300, alpha=0.5)
    arm_sel = [np.zeros_like(a.N1) for a in sim.agents]
    resp = [np.zeros_like(a.N1) for a in sim.agents]
    gate = {}

    def check(t, obj, when):
        if when == "before":
            for i, a in enumerate(sim.agents):
                gate[i] = a.deficient_arms(a.cell(obj[i]), t).any()
            return
        for i, a in enumerate(sim.agents):
            d = obj.decisions[i]
            assert (d.phase == EXPLOIT) == (not gate[i])
            arm_sel[i][d.cell, list(a.space.action_arms[d.index])] += 1
        for (q, j, _, items, _) in obj.requests:
            b = sim.agents[j]
            l = b.cell(obj.contexts[q])
            for f in items:
                resp[j][l, b.own_index[f]] += 1

    _drive(sim, 300, seed, check)
    for i, a in enumerate(sim.agents):
        f = a.foreign
        assert np.array_equal((a.N1 + a.N2)[:, f], arm_sel[i][:, f])
        assert np.array_equal(a.N_own[:, ~f], arm_sel[i][:, ~f] + resp[i][:, ~f])
        assert not a.N1[:, ~f].any() and not a.N2[:, ~f].any()


@given(st.integers(0, 10 ** 6), st.sampled_from(["cbmr-d", "cbmr-ind", "eps-greedy", "random"]))
@settings(max_examples=10)
def test_seed_determinism(seed, policy):
    m = _toy(seed % 1000, "group_dependent")
    a = Simulation(m, policy, seed=seed, T=120).run(120)
    b = Simulation(m, policy, seed=seed, T=120).run(120)
    assert a.actions.tobytes() == b.actions.tobytes()
    assert a.rewards.tobytes() == b.rewards.tobytes()


@given(st.integers(0, 10 ** 6))
@settings(max_examples=10)
def test_settlement_conservation_in_runs(seed):
    m = _toy(seed, "independent")
    sim = Simulation(m, ["cbmr-ind", "cbmr-d", "random"][: m.M], seed=seed, T=150)
    for t in range(1, 151):
        tr = sim.run_slot(t)
        sold = sum(m.price(f) for p in tr.purchases for f in p)
        assert abs(sum(tr.payouts) - sold) < 1e-9
        assert min(tr.payouts) >= -1e-12
