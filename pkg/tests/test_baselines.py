import random

import numpy as np
import pytest

from cbmr.baselines import EpsGreedy, OraclePolicy, RandomPolicy
from cbmr.data_gen import preset
from cbmr.harness import Simulation

from conftest import FixedQ, make_market, make_view


def test_eps_range():
    m = make_market([2], 1, FixedQ({0: 0.1, 1: 0.2}))
    with pytest.raises(ValueError):
        EpsGreedy(make_view(m), eps=1.5)


def test_eps_greedy_learns_two_arms():
    m = make_market([2], 1, FixedQ({0: 0.2, 1: 0.8}), contexts=(0,))
    res = Simulation(m, "eps-greedy", seed=0, T=2000).run(2000)
    assert np.mean(res.actions[-500:, 0] == 1) > 0.85


def test_random_policy_valid_responses():
    _, m = preset("C-3")
    res = Simulation(m, "random", seed=1, T=200).run(200)
    assert res.T == 200


def test_oracle_beats_learners_in_expectation():
    _, m = preset("C-2")
    sims = {p: Simulation(m, p, seed=2, T=400).run(400) for p in ("oracle", "random", "cbmr-ind")}
    exp = {p: r.expected[:, 0].sum() for p, r in sims.items()}
    assert exp["oracle"] >= exp["cbmr-ind"] and exp["oracle"] > exp["random"]
