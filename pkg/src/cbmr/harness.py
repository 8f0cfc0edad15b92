"""Synchronous slot loop, regret bookkeeping and experiment driver.

Per slot: every agent observes its user and picks an action; requests go
out (along routes on a network) and responders answer; the full sets are
shown; purchases are sampled once per page; sales are settled; then all
learners update from what they themselves saw.
"""

from __future__ import annotations

import csv
import io
import json
import os
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .baselines import EpsGreedy, OraclePolicy, RandomPolicy
from .cbmr_d import CbmrD
from .cbmr_ind import CbmrInd
from .context_space import DiscretePartition, Partition, compute_m_T
from .control import ControlFunctions
from .market import PROPORTIONAL, MarketModel
from .network import CbmrIndN, TopologyGraph, training_pools
from .oracle import Oracle
from .policy import EXPLOIT, EXPLORE, TRAIN, AgentView, Outcome

POLICIES = {
    "cbmr-d": CbmrD,
    "cbmr-ind": CbmrInd,
    "cbmr-ind-n": CbmrIndN,
    "oracle": OraclePolicy,
    "random": RandomPolicy,
    "eps-greedy": EpsGreedy,
}
PHASES = (TRAIN, EXPLORE, EXPLOIT)
PHASE_CODE = {p: n for n, p in enumerate(PHASES)}
OUTPUT_ENV = "CBMR_OUTPUT_DIR"
SUMMARY_SCHEMA = "cbmr.summary/1"
TRACE_COLUMNS = ("t", "agent", "phase", "action_id", "pseudo_regret", "realized_regret", "cum_pseudo", "cum_realized")


class ProtocolError(RuntimeError):
    """A responder or settlement broke the slot protocol."""


@dataclass(frozen=True)
class SlotTranscript:
    t: int
    contexts: tuple
    decisions: tuple
    requests: tuple  # (requester, responder, m, items, route)
    recommended: tuple
    purchases: tuple
    payouts: tuple  # per-agent total settled this slot
    rewards: tuple  # O^i, revenue from each agent's own page
    foreign_value: tuple  # per requester: {agent: purchased count or value}
    optimal: tuple
    expected: tuple

    @property
    def pseudo(self) -> tuple:
        return tuple(o - e for o, e in zip(self.optimal, self.expected))

    @property
    def realized(self) -> tuple:
        return tuple(o - r for o, r in zip(self.optimal, self.rewards))


def _rng(seq: np.random.SeedSequence) -> random.Random:
    return random.Random(int(seq.generate_state(2, dtype=np.uint64)[0]))


class Simulation:
    """One replication: a market, one learner per agent, seeded streams.

    ``policy`` is a registry name, a list of names (one per agent) or a
    callable ``(view, oracle) -> Learner``. ``graph`` switches on routed
    requests and chained settlement; ``pool_rule`` picks the training pools
    on a graph (``base``, ``inflated`` or ``star``). ``known_sizes`` trains
    against the true inventory sizes instead of ``F_max``.
    """

    def __init__(self, market: MarketModel, policy="cbmr-ind", seed: int = 0, T: int = 1,
                 alpha: float | None = None, d: int | None = None, graph: TopologyGraph | None = None,
                 pool_rule: str = "base", known_sizes: bool = False, policy_kwargs: dict | None = None):
        self.market, self.seed, self.graph = market, seed, graph
        M = market.M
        alpha = market.purchase.alpha if alpha is None else alpha
        if market.contexts:
            self.partition = DiscretePartition(market.contexts)
            d = 1 if d is None else d
        else:
            d = 1 if d is None else d
            self.partition = Partition(d, compute_m_T(max(T, 1), alpha, d))
        self.alpha, self.d = alpha, d
        self.control = ControlFunctions(alpha, d, market.F_max)
        mode = market.commissions.mode
        if graph is None:
            rates = np.array(market.commissions.c, dtype=float)
            self.oracle = Oracle(market)
        else:
            if graph.M != M:
                raise ValueError("graph size does not match the market")
            rates = graph.rate_matrix()
            self.oracle = Oracle(market, rates, graph.eligible(market))
        self.rates = rates
        self.eligible = self.oracle.eligible
        if isinstance(policy, (list, tuple)):
            names = list(policy)
        else:
            names = [policy] * M
        if len(names) != M:
            raise ValueError("need one policy per agent")
        self.agents = []
        for i in range(M):
            pools = None
            if known_sizes:
                pools = {j: len(market.inventories[j]) for j in range(M) if j != i}
            elif graph is not None:
                pools = training_pools(graph, i, market.F_max, pool_rule)
            view = AgentView(i, market.inventories[i], {f: market.price(f) for f in market.inventories[i]},
                             M, market.N, rates[i].tolist(), mode, self.partition, ControlFunctions(alpha, d, market.F_max),
                             pools)
            self.agents.append(self._build(names[i], view, policy_kwargs or {}))
        self.policy_names = [getattr(a, "name", str(n)) for a, n in zip(self.agents, names)]
        root = np.random.SeedSequence(seed)
        streams = root.spawn(2 + M)
        self.arrival_rng = _rng(streams[0])
        self.purchase_rng = _rng(streams[1])
        self.agent_rng = [_rng(s) for s in streams[2:]]
        self.arrivals = market.arrivals or ()
        if len(self.arrivals) != M:
            raise ValueError("market needs one arrival process per agent")

    def _build(self, name, view, kwargs):
        if callable(name) and not isinstance(name, str):
            return name(view, self.oracle)
        try:
            cls = POLICIES[name]
        except KeyError:
            raise ValueError(f"unknown policy {name!r}; choose from {sorted(POLICIES)}") from None
        if cls is OraclePolicy:
            return cls(view, self.oracle)
        return cls(view, **kwargs.get(name, {}))

    # -- one slot ---------------------------------------------------------

    def _route(self, i, j):
        return self.graph.routes[i, j] if self.graph is not None else (i, j)

    def run_slot(self, t: int, contexts: Sequence | None = None) -> SlotTranscript:
        market, M = self.market, self.market.M
        agents = self.agents
        # 1. arrivals and own actions
        if contexts is None:
            contexts = tuple(self.arrivals[i].draw(self.arrival_rng) for i in range(M))
        decisions = tuple(agents[i].select(contexts[i], t, self.agent_rng[i]) for i in range(M))
        # 2. requests and responses
        requests, responses = [], []
        recommended = []
        for i in range(M):
            k = agents[i].space.actions[decisions[i].index]
            m = k.m_vector(M)
            rec = list(k.own_items)
            for j, n in k.requests:
                path = self._route(i, j)
                allowed = self.eligible[i]
                r = agents[j].respond(i, contexts[i], m, t, self.agent_rng[j], allowed)
                items = tuple(r.items)
                if len(items) != n or len(set(items)) != n:
                    raise ProtocolError(f"agent {j} answered {len(items)} items to a request for {n}")
                if any(market.owner.get(f) != j or f not in allowed for f in items):
                    raise ProtocolError(f"agent {j} answered with items it cannot supply: {items}")
                requests.append((i, j, m, items, path))
                responses.append((i, j, r))
                rec.extend(items)
            # 3. the full page
            if len(rec) != market.N:
                raise ProtocolError(f"agent {i} assembled {len(rec)} items, expected {market.N}")
            recommended.append(tuple(rec))
        # 4. purchases, once per page
        purchases = tuple(frozenset(market.sample_purchases(contexts[i], recommended[i], self.purchase_rng))
                          for i in range(M))
        # 5. settlement
        payouts = [0.0] * M
        rewards = [0.0] * M
        fval = [dict() for _ in range(M)]
        for i in range(M):
            for f in sorted(purchases[i]):
                price = market.price(f)
                owner = market.owner[f]
                if owner == i:
                    split = {i: price}
                elif self.graph is None:
                    rec_rev, seller_rev = market.settle(i, f)
                    split = {i: rec_rev, owner: seller_rev}
                else:
                    split = self.graph.chain(i, owner, price).payouts()
                if abs(sum(split.values()) - price) > 1e-9 or min(split.values()) < -1e-12:
                    raise ProtocolError(f"settlement of item {f} does not conserve its price: {split}")
                for a, v in split.items():
                    payouts[a] += v
                rewards[i] += split[i]
                if owner != i:
                    fval[i][owner] = fval[i].get(owner, 0.0) + (price if market.commissions.mode == PROPORTIONAL else 1.0)
        # 6. learner updates from own observations only
        for i in range(M):
            own_bought = frozenset(f for f in purchases[i] if market.owner[f] == i)
            agents[i].observe(decisions[i], Outcome(rewards[i], own_bought, dict(fval[i])), t)
        for i, j, r in responses:
            agents[j].observe_response(r, frozenset(f for f in purchases[i] if f in r.items), t)
        optimal = tuple(self.oracle.mu_star(i, contexts[i]) for i in range(M))
        expected = tuple(self.oracle.sigma_cached(i, recommended[i], contexts[i]) for i in range(M))
        return SlotTranscript(t, tuple(contexts), decisions, tuple(requests), tuple(recommended), purchases,
                              tuple(payouts), tuple(rewards), tuple(fval), optimal, expected)

    # -- full run ---------------------------------------------------------

    def run(self, T: int, horizon: str = "slots", focus: tuple | None = None,
            keep: Callable[[SlotTranscript], None] | None = None, max_slots: int | None = None) -> "RunResult":
        """Run for ``T`` slots, or (``horizon='focus'``) until the focus agent
        has seen ``T`` users with the focus context."""
        if T < 1:
            raise ValueError("T must be at least 1")
        M = self.market.M
        if focus is None:
            focus = (self.market.meta.get("focus_agent", 0), self.market.meta.get("focus_query"))
        cap = max_slots or (T if horizon == "slots" else 1000 * T)
        opt, exp_, rew = [], [], []
        phase, act = [], []
        seen, t = 0, 0
        while True:
            t += 1
            tr = self.run_slot(t)
            opt.append(tr.optimal)
            exp_.append(tr.expected)
            rew.append(tr.rewards)
            phase.append(tuple(PHASE_CODE[d.phase] for d in tr.decisions))
            act.append(tuple(d.index for d in tr.decisions))
            if keep is not None:
                keep(tr)
            if horizon == "focus":
                seen += tr.contexts[focus[0]] == focus[1]
                if seen >= T or t >= cap:
                    break
            elif t >= T:
                break
        return RunResult(self, np.array(opt), np.array(exp_), np.array(rew),
                         np.array(phase, dtype=np.int8), np.array(act, dtype=np.int32))


@dataclass
class RunResult:
    sim: Simulation
    optimal: np.ndarray  # (T, M)
    expected: np.ndarray
    rewards: np.ndarray
    phases: np.ndarray
    actions: np.ndarray

    @property
    def T(self) -> int:
        return len(self.optimal)

    @property
    def pseudo(self) -> np.ndarray:
        return self.optimal - self.expected

    @property
    def realized(self) -> np.ndarray:
        return self.optimal - self.rewards

    def cum_pseudo(self, agent: int = 0) -> np.ndarray:
        return np.cumsum(self.pseudo[:, agent])

    def time_avg_pseudo(self, agent: int = 0) -> np.ndarray:
        return self.cum_pseudo(agent) / np.arange(1, self.T + 1)

    def summary(self) -> dict:
        sim = self.sim
        agents = []
        for i, learner in enumerate(sim.agents):
            counts = np.bincount(self.phases[:, i], minlength=3)
            agents.append({
                "agent": i,
                "policy": sim.policy_names[i],
                "total_reward": float(self.rewards[:, i].sum()),
                "expected_reward": float(self.expected[:, i].sum()),
                "optimal_reward": float(self.optimal[:, i].sum()),
                "cum_pseudo": float(self.pseudo[:, i].sum()),
                "cum_realized": float(self.realized[:, i].sum()),
                "trainings": learner.training_count(),
                "phase_slots": {p: int(counts[n]) for n, p in enumerate(PHASES)},
            })
        return {"schema": SUMMARY_SCHEMA, "seed": sim.seed, "T": self.T, "agents": agents}

    def write_trace(self, path) -> None:
        """Per-slot regret trace for every agent, CSV."""
        pseudo, realized = self.pseudo, self.realized
        cp, cr = np.cumsum(pseudo, axis=0), np.cumsum(realized, axis=0)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRACE_COLUMNS)
            for t in range(self.T):
                for i in range(pseudo.shape[1]):
                    w.writerow((t + 1, i, PHASES[self.phases[t, i]], int(self.actions[t, i]),
                                repr(float(pseudo[t, i])), repr(float(realized[t, i])),
                                repr(float(cp[t, i])), repr(float(cr[t, i]))))

    def curve(self, agent: int = 0, points: int = 60) -> list:
        """Time-averaged regret at log-spaced checkpoints."""
        ts = np.unique(np.round(np.logspace(0, np.log10(self.T), points)).astype(int))
        cp = np.cumsum(self.pseudo[:, agent])
        cr = np.cumsum(self.realized[:, agent])
        return [(int(t), float(cp[t - 1] / t), float(cr[t - 1] / t)) for t in ts]


# -- experiments --------------------------------------------------------------


@dataclass
class ExperimentConfig:
    market_factory: Callable[[int], MarketModel]
    policies: Sequence[str] = ("cbmr-ind",)
    T: int = 1000
    seeds: Sequence[int] = (0,)
    output: str | None = None
    horizon: str = "slots"
    trace: bool = False
    graph_factory: Callable[[MarketModel], TopologyGraph] | None = None
    pool_rule: str = "base"
    known_sizes: bool = False
    alpha: float | None = None
    d: int | None = None
    label: str = "experiment"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be at least 1")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("replication seeds must be distinct")


def output_dir(path=None) -> Path:
    return Path(path or os.environ.get(OUTPUT_ENV) or "cbmr-output")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def aggregate(runs: Sequence[dict]) -> list:
    """Mean and median over replications per (policy, agent)."""
    groups = {}
    for run in runs:
        for a in run["agents"]:
            groups.setdefault((a["policy"], a["agent"]), []).append(a)
    rows = []
    for (policy, agent), items in sorted(groups.items()):
        row = {"policy": policy, "agent": agent, "replications": len(items)}
        for key in ("total_reward", "expected_reward", "optimal_reward", "cum_pseudo", "trainings"):
            vals = np.array([x[key] for x in items], dtype=float)
            row[f"{key}_mean"] = float(vals.mean())
            row[f"{key}_median"] = float(np.median(vals))
        for p in PHASES:
            row[f"{p}_slots_mean"] = float(np.mean([x["phase_slots"][p] for x in items]))
        rows.append(row)
    return rows


SUMMARY_COLUMNS = ("label", "policy", "agent", "replications", "total_reward_mean", "total_reward_median",
                   "optimal_reward_mean", "expected_reward_mean", "cum_pseudo_mean", "trainings_mean",
                   "trainings_median", "train_slots_mean", "explore_slots_mean", "exploit_slots_mean")


def summary_csv(rows: Sequence[dict], label: str = "") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for r in rows:
        r = dict(r, label=r.get("label", label))
        w.writerow([r.get(c, "") if isinstance(r.get(c), (str, int)) else repr(float(r.get(c, 0.0)))
                    for c in SUMMARY_COLUMNS])
    return buf.getvalue()


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run every (policy, seed) pair and write traces, curves and summaries.

    Returns the summary document (also written as ``summary.json``).
    """
    out = output_dir(cfg.output)
    runs = []
    for policy in cfg.policies:
        pname = policy if isinstance(policy, str) else "+".join(policy)
        for seed in cfg.seeds:
            market = cfg.market_factory(seed)
            graph = cfg.graph_factory(market) if cfg.graph_factory else None
            sim = Simulation(market, policy, seed=seed, T=cfg.T, alpha=cfg.alpha, d=cfg.d, graph=graph,
                             pool_rule=cfg.pool_rule, known_sizes=cfg.known_sizes)
            res = sim.run(cfg.T, horizon=cfg.horizon)
            summ = res.summary()
            summ["policy"] = pname
            runs.append(summ)
            if cfg.output is not None or os.environ.get(OUTPUT_ENV):
                run_dir = out / pname / f"seed{seed}"
                try:
                    run_dir.mkdir(parents=True, exist_ok=True)
                    with open(run_dir / "curve.csv", "w", newline="") as fh:
                        w = csv.writer(fh, lineterminator="\n")
                        w.writerow(("t", "time_avg_pseudo", "time_avg_realized"))
                        for row in res.curve(0):
                            w.writerow((row[0], repr(row[1]), repr(row[2])))
                    if cfg.trace:
                        res.write_trace(run_dir / "trace.csv")
                except OSError as exc:
                    raise OSError(f"cannot write results under {run_dir}: {exc}") from exc
    rows = aggregate(runs)
    doc = {"schema": SUMMARY_SCHEMA, "label": cfg.label, "T": cfg.T, "seeds": list(cfg.seeds),
           "horizon": cfg.horizon, "extra": cfg.extra, "runs": runs, "aggregate": rows}
    if cfg.output is not None or os.environ.get(OUTPUT_ENV):
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "summary.json").write_text(_dump(doc))
            (out / "summary.csv").write_text(summary_csv(rows, cfg.label))
        except OSError as exc:
            raise OSError(f"cannot write summary under {out}: {exc}") from exc
    return doc
