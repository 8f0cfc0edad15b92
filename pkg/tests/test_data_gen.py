import numpy as np
import pytest

from cbmr.data_gen import PLACEMENTS, companion_table, generate, preset
from cbmr.market import ConfigurationError


def test_showcase_catalogue():
    sc, m = preset("dependent")
    assert len(m.items) == 30
    assert [len(inv) for inv in m.inventories] == [10, 10, 10]
    assert sc.co_purchase[0] == (20, 21)
    assert all(len(v) == 2 for v in sc.co_purchase.values())
    assert m.F_max == 10 and m.N == 2


@pytest.mark.parametrize("name", sorted(PLACEMENTS))
def test_placements(name):
    sc, m = preset(name)
    assert tuple(m.owner[f] for f in sc.co_purchase[0]) == PLACEMENTS[name]


def test_deal_is_seeded():
    a = preset("C-2", seed=3)[0].inventories
    b = preset("C-2", seed=3)[0].inventories
    c = preset("C-2", seed=4)[0].inventories
    assert a == b and a != c


def test_balanced_assignment_sizes():
    sc, m = generate(N_1=7, F_1=2, M=4, seed=1)
    sizes = sorted(len(inv) for inv in m.inventories)
    assert sizes[-1] - sizes[0] <= 1 and sum(sizes) == 7 + 14


def test_companion_table():
    sc, _ = preset("C-1")
    tab = companion_table(sc)
    assert tab.shape == (20, 10) and tab.sum() == 40
    assert tab[0, :2].tolist() == [1, 1]


def test_generate_errors():
    with pytest.raises(ConfigurationError):
        preset("nope")
    with pytest.raises(ConfigurationError):
        generate(assignment="explicit")
    with pytest.raises(ConfigurationError):
        generate(assignment="explicit", placement=(0, 9))
    with pytest.raises(ConfigurationError):
        generate(F_1=5, pool_size=3)
    with pytest.raises(ConfigurationError):
        generate(assignment="explicit", placement={f: 0 for f in range(25)})


def test_arrivals_focus_fixed():
    _, m = preset("C-3")
    rng = __import__("random").Random(0)
    assert {m.arrivals[0].draw(rng) for _ in range(20)} == {0}
    assert len({m.arrivals[1].draw(rng) for _ in range(500)}) == 20
