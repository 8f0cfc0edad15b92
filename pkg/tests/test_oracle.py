import itertools

import numpy as np
import pytest

from cbmr.actions import ActionSpace, enumerate_actions
from cbmr.context_space import DiscretePartition
from cbmr.data_gen import preset
from cbmr.market import GROUP_DEPENDENT, TableModel
from cbmr.oracle import Oracle, OracleTable, mu, optimal_set, regret_step, sigma

from conftest import FixedQ, make_market, random_toy


def test_all_zero():
    m = make_market([3], 2, FixedQ({0: 0, 1: 0, 2: 0}))
    assert optimal_set(0, 0, m)[1] == 0.0


def test_independent_top_two():
    m = make_market([3], 2, FixedQ({0: 0.3, 1: 0.2, 2: 0.1}))
    rec, val = optimal_set(0, 0, m)
    assert rec == (0, 1) and val == pytest.approx(0.5)


def test_single_slot_picks_best_weighted_item():
    m = make_market([3], 1, FixedQ({0: 0.3, 1: 0.2, 2: 0.1}), prices={0: 1.0, 1: 2.0, 2: 1.0})
    assert optimal_set(0, 0, m) == ((1,), pytest.approx(0.4))


def test_mixed_set_beats_two_companions():
    _, m = preset("dependent", scale=1.0)
    rec, val = optimal_set(0, 0, m)
    assert val == pytest.approx(0.51)
    assert len({20, 21} & set(rec)) == 1
    assert all(m.owner[f] == 0 for f in rec)
    assert sigma(0, (20, 21), 0, m) == pytest.approx(0.0)
    # brute force over the whole 30-item catalogue agrees
    o = Oracle(m)
    best = max(o.sigma(0, r, 0) for r in itertools.combinations(range(30), 2))
    assert best == pytest.approx(0.51)


def test_dependent_preset_benchmark():
    _, m = preset("dependent")
    o = Oracle(m)
    assert o.mu_star(0, 0) == pytest.approx(0.11)
    assert 100000 * o.mu_star(0, 0) == pytest.approx(11000)


def test_placement_benchmarks():
    expected = {"C-1": 0.2, "C-2": 0.15, "C-3": 0.1}
    for name, v in expected.items():
        _, m = preset(name)
        assert Oracle(m).mu_star(0, 0) == pytest.approx(v)


def _exhaustive(model, i, x):
    """Independent evaluator: reward weights computed from scratch."""
    best = -1.0
    c = model.commissions
    items = [it for it in model.items]
    for rec in itertools.combinations([it.id for it in items], model.N):
        val, ok = 0.0, True
        for f in rec:
            it = model.item[f]
            if it.owner == i:
                w = it.price
            else:
                w = c.c[i, it.owner] * (it.price if c.mode == "proportional" else 1.0)
                ok &= c.mode == "proportional" or it.price >= c.c[i, it.owner]
            val += w * model.purchase.q(f, x, rec)
        if ok:
            best = max(best, val)
    return best


def test_group_dependent_toy_against_enumeration():
    m = make_market([2, 2], 2, TableModel(5, variant=GROUP_DEPENDENT))
    for i in range(2):
        for x in (0, 1):
            assert optimal_set(i, x, m)[1] == pytest.approx(_exhaustive(m, i, x))


@pytest.mark.parametrize("seed", range(20))
def test_action_optimum_equals_set_optimum(seed):
    m = random_toy(seed)
    o = Oracle(m)
    for i in range(m.M):
        acts = enumerate_actions(m.inventories[i], m.M, m.N, owner=i)
        for x in (0, 1):
            _, val = o.optimal_action(i, acts, x)
            assert val == pytest.approx(o.optimal_set(i, x)[1])
            assert val == pytest.approx(_exhaustive(m, i, x))


def test_mu_and_assemble():
    _, m = preset("C-2")
    o = Oracle(m)
    acts = enumerate_actions(m.inventories[0], 3, 2)
    a, val = o.optimal_action(0, acts, 0)
    k = acts[a]
    assert val == pytest.approx(0.15)
    assert k.own_items == (20,) and k.requests == ((2, 1),)
    assert set(o.assemble(0, k, 0)) == {20, 21}
    assert mu(0, k, 0, m) == pytest.approx(0.15)


def test_commission_eligibility():
    m = make_market([2, 2], 2, FixedQ({0: 0.1, 1: 0.1, 2: 0.9, 3: 0.9}), c=0.5,
                    prices={0: 1.0, 1: 1.0, 2: 0.4, 3: 1.0})
    o = Oracle(m)
    assert 2 not in o.eligible[0] and 3 in o.eligible[0]
    rec, _ = o.optimal_set(0, 0)
    assert 2 not in rec


def test_regret_step():
    _, m = preset("dependent")
    o = Oracle(m)
    step = regret_step(o, 0, 0, (20, 21), 0.0)
    assert step.optimal == pytest.approx(0.11)
    assert step.expected == pytest.approx(sigma(0, (20, 21), 0, m))
    assert step.pseudo == pytest.approx(0.11 - step.expected)
    assert step.realized_regret == pytest.approx(0.11)


def test_oracle_table():
    m = make_market([3, 2], 2, TableModel(2))
    o = Oracle(m)
    spaces = [ActionSpace(i, m.inventories[i], 2, 2) for i in range(2)]
    tab = OracleTable(o, spaces, DiscretePartition((0, 1)))
    for (i, l), k in tab.k_star.items():
        assert tab.mu_star[i, l] == pytest.approx(o.optimal_set(i, l)[1])
        assert tab.mu_all[i, l][k] == np.max(tab.mu_all[i, l])
