import json

import numpy as np
import pytest

from cbmr.cbmr_d import CbmrD
from cbmr.cbmr_ind import CbmrInd
from cbmr.data_gen import preset
from cbmr.harness import (TRACE_COLUMNS, ExperimentConfig, ProtocolError, Simulation, run_experiment)
from cbmr.market import MarketModel, TableModel
from cbmr.oracle import Oracle
from cbmr.policy import Learner, Response

from conftest import FixedQ, make_market


def test_single_agent_has_no_requests():
    m = make_market([4], 2, FixedQ({0: 0.5, 1: 0.2, 2: 0.1, 3: 0.0}))
    sim = Simulation(m, "cbmr-ind", seed=0, T=50)
    for t in range(1, 51):
        tr = sim.run_slot(t)
        assert tr.requests == () and all(m.owner[f] == 0 for f in tr.recommended[0])


def test_replay_is_identical():
    _, m = preset("C-2")
    a = Simulation(m, "cbmr-ind", seed=5, T=500).run(500)
    b = Simulation(m, "cbmr-ind", seed=5, T=500).run(500)
    c = Simulation(m, "cbmr-ind", seed=6, T=500).run(500)
    assert np.array_equal(a.actions, b.actions) and np.array_equal(a.rewards, b.rewards)
    assert not np.array_equal(a.actions, c.actions)


@pytest.mark.parametrize("name", ["dependent", "C-2", "C-3"])
def test_oracle_policy_has_zero_pseudo_regret(name):
    _, m = preset(name)
    res = Simulation(m, "oracle", seed=1, T=300).run(300)
    assert np.allclose(res.pseudo, 0.0)


def test_oracle_policy_on_toys():
    for seed in range(5):
        m = make_market([3, 2, 3], 2, TableModel(seed, variant="group_dependent"), c=0.3)
        res = Simulation(m, "oracle", seed=seed, T=40).run(40)
        assert np.allclose(res.pseudo, 0.0)


def test_transcript_invariants():
    _, m = preset("dependent")
    sim = Simulation(m, ["cbmr-d", "cbmr-ind", "random"], seed=3, T=400)
    for t in range(1, 401):
        tr = sim.run_slot(t)
        for rec in tr.recommended:
            assert len(rec) == m.N == len(set(rec))
        for (i, j, mvec, items, _) in tr.requests:
            assert len(items) == mvec[j] and all(m.owner[f] == j for f in items)
        sold = sum(m.price(f) for p in tr.purchases for f in p)
        assert sum(tr.payouts) == pytest.approx(sold)
        for p, rec in zip(tr.purchases, tr.recommended):
            assert p <= set(rec)


class BadResponder(CbmrInd):
    def respond(self, requester, x, m, t, rng, allowed=None):
        r = super().respond(requester, x, m, t, rng, allowed)
        return Response(r.items[:-1], r.cell, r.token)


def test_wrong_size_response_aborts():
    _, m = preset("C-3")
    sim = Simulation(m, lambda view, oracle: BadResponder(view), seed=0, T=100)
    with pytest.raises(ProtocolError):
        for t in range(1, 101):
            sim.run_slot(t)


def test_single_slot_run_and_trace(tmp_path):
    _, m = preset("C-2")
    res = Simulation(m, "cbmr-d", seed=0, T=1).run(1)
    assert res.T == 1
    path = tmp_path / "trace.csv"
    res.write_trace(path)
    lines = path.read_text().splitlines()
    assert lines[0].split(",") == list(TRACE_COLUMNS) and len(lines) == 1 + 3


def test_focus_horizon_counts_focus_arrivals():
    _, m = preset("C-2")
    sim = Simulation(m, "random", seed=0, T=10)
    res = sim.run(10, horizon="focus", focus=(1, 0))
    assert (res.T >= 10) and res.T > 10  # agent 1 sees query 0 about once in 20 slots


def test_run_experiment_outputs_are_reproducible(tmp_path):
    def cfg(out):
        return ExperimentConfig(lambda s: preset("C-2", seed=s)[1], ("cbmr-ind", "cbmr-d"), T=200, seeds=(0, 1),
                                output=str(out), trace=True, label="t")
    a = run_experiment(cfg(tmp_path / "a"))
    run_experiment(cfg(tmp_path / "b"))
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    assert len(files) == 2 + 2 * 2 * 2
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    assert {r["policy"] for r in a["aggregate"]} == {"cbmr-ind", "cbmr-d"}
    doc = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert doc["schema"] == "cbmr.summary/1" and len(doc["runs"]) == 4


def test_experiment_config_guards():
    with pytest.raises(ValueError):
        ExperimentConfig(lambda s: None, T=0)
    with pytest.raises(ValueError):
        ExperimentConfig(lambda s: None, seeds=(1, 1))


def test_nothing_written_without_output(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("CBMR_OUTPUT_DIR", raising=False)
    run_experiment(ExperimentConfig(lambda s: preset("C-2", seed=s)[1], T=5))
    assert list(tmp_path.iterdir()) == []


def test_output_env_variable(tmp_path, monkeypatch):
    monkeypatch.setenv("CBMR_OUTPUT_DIR", str(tmp_path / "env"))
    run_experiment(ExperimentConfig(lambda s: preset("C-2", seed=s)[1], T=5))
    assert (tmp_path / "env" / "summary.csv").exists()


# -- decentralization ---------------------------------------------------------


class Recorder:
    """Wraps a learner and logs everything the harness hands to it."""

    def __init__(self, inner):
        self.inner = inner
        self.calls = []

    def __getattr__(self, name):
        return getattr(self.inner, name)

    def select(self, x, t, rng):
        d = self.inner.select(x, t, rng)
        self.calls.append(("select", t, x, d))
        return d

    def observe(self, d, outcome, t):
        self.calls.append(("observe", t, d, outcome))
        self.inner.observe(d, outcome, t)

    def respond(self, requester, x, m, t, rng, allowed=None):
        r = self.inner.respond(requester, x, m, t, rng, allowed)
        self.calls.append(("respond", t, requester, x, tuple(m), r))
        return r

    def observe_response(self, r, bought, t):
        self.calls.append(("observe_response", t, r, bought))
        self.inner.observe_response(r, bought, t)


def _reachable_objects(obj, depth=3, seen=None):
    seen = set() if seen is None else seen
    if id(obj) in seen or depth < 0:
        return
    seen.add(id(obj))
    yield obj
    children = []
    if hasattr(obj, "__dict__"):
        children = list(vars(obj).values())
    elif isinstance(obj, (list, tuple, set, frozenset)):
        children = list(obj)
    elif isinstance(obj, dict):
        children = list(obj.values())
    for c in children:
        yield from _reachable_objects(c, depth - 1, seen)


@pytest.mark.parametrize("cls", [CbmrD, CbmrInd])
def test_learners_only_see_their_own_observations(cls):
    _, m = preset("C-3")
    recs = []

    def factory(view, oracle):
        r = Recorder(cls(view))
        recs.append(r)
        return r

    sim = Simulation(m, factory, seed=4, T=300)
    log = {}
    for t in range(1, 301):
        log[t] = sim.run_slot(t)
    for i, rec in enumerate(recs):
        # no learner holds the market, the oracle, the harness or a peer
        for o in _reachable_objects(rec.inner):
            assert not isinstance(o, (MarketModel, Oracle, Simulation))
            assert not (isinstance(o, Learner) and o is not rec.inner)
        own = set(m.inventories[i])
        for call in rec.calls:
            tr = log[call[1]]
            if call[0] == "select":
                assert call[2] == tr.contexts[i]
            elif call[0] == "observe":
                d, out = call[2], call[3]
                called = {j for j, _ in sim.agents[i].space.actions[d.index].requests}
                assert out.own_bought <= own and out.own_bought <= tr.purchases[i]
                assert set(out.foreign_value) <= called
                assert out.reward == tr.rewards[i]
            elif call[0] == "respond":
                requester, x, mvec = call[2], call[3], call[4]
                assert any(q == requester and j == i for q, j, *_ in tr.requests)
                assert x == tr.contexts[requester]
            else:
                r, bought = call[2], call[3]
                assert bought <= set(r.items) <= own
