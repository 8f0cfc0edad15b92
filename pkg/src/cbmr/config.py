"""JSON market and experiment configuration.

Market documents carry ``"schema": "cbmr.market/1"``; experiment documents
carry ``"schema": "cbmr.experiment/1"``. See the README for the full layout.
Errors name the offending key path (and line/column for syntax errors).
"""

from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .data_gen import preset
from .harness import POLICIES, ExperimentConfig
from .market import (FIXED, PROPORTIONAL, ArrivalProcess, CommissionSchema, ConfigurationError, CoPurchaseModel,
                     HolderBumpModel, Item, MarketModel, TableModel)
from .network import TopologyGraph, complete_graph, line_graph, star_graph

MARKET_SCHEMA = "cbmr.market/1"
EXPERIMENT_SCHEMA = "cbmr.experiment/1"


class ConfigError(ConfigurationError):
    pass


def _get(doc: Mapping, key: str, where: str, default: Any = ...):
    if not isinstance(doc, Mapping):
        raise ConfigError(f"{where or 'document'}: expected an object")
    if key in doc:
        return doc[key]
    if default is ...:
        raise ConfigError(f"missing key '{key}' in {where or 'document'}")
    return default


def loads(text: str, source: str = "<config>") -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{source}: top level must be an object")
    return doc


def load(path) -> dict:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc.strerror}") from None
    return loads(text, str(p))


# -- purchase models --------------------------------------------------------


def purchase_to_dict(model) -> dict:
    if isinstance(model, CoPurchaseModel):
        return model.describe()
    if isinstance(model, TableModel):
        return {"kind": "table", "seed": model.seed, "variant": model.variant, "q_max": model.q_max}
    if isinstance(model, HolderBumpModel):
        return {"kind": "holder_bump", "variant": model.variant, "L": model.L, "alpha": model.alpha,
                "peaks": {str(k): v for k, v in model.peaks.items()},
                "locs": {str(k): v.tolist() for k, v in model.locs.items()},
                "floors": {str(k): v for k, v in model.floors.items()},
                "damp": [[a, b, v] for (a, b), v in sorted(model.damp.items())], "cross": model.cross}
    raise ConfigError(f"cannot serialize purchase model {type(model).__name__}")


def purchase_from_dict(doc: Mapping, where: str = "purchase"):
    kind = _get(doc, "kind", where)
    variant = doc.get("variant", "independent")
    try:
        if kind == "co_purchase":
            co = {int(k): v for k, v in _get(doc, "co_purchase", where).items()}
            return CoPurchaseModel(co, variant=variant, g_c=doc.get("g_c", 0.1), g_nc=doc.get("g_nc", 0.01),
                                   a=doc.get("a", 0.5), b=doc.get("b"), scale=doc.get("scale", 1.0),
                                   L=doc.get("L", 1.0), alpha=doc.get("alpha", 1.0 / 13))
        if kind == "table":
            return TableModel(_get(doc, "seed", where), variant=variant, q_max=doc.get("q_max", 0.9))
        if kind == "holder_bump":
            damp = {(int(a), int(b)): v for a, b, v in doc.get("damp", [])}
            return HolderBumpModel({int(k): v for k, v in _get(doc, "peaks", where).items()},
                                   {int(k): v for k, v in _get(doc, "locs", where).items()},
                                   {int(k): v for k, v in doc["floors"].items()} if "floors" in doc else None,
                                   L=doc.get("L", 1.0), alpha=doc.get("alpha", 1.0), variant=variant,
                                   damp=damp, cross=doc.get("cross", 1.0))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None
    raise ConfigError(f"{where}.kind: unknown purchase model {kind!r}")


# -- markets ------------------------------------------------------------------


def market_to_dict(model: MarketModel, graph: TopologyGraph | None = None) -> dict:
    doc = {
        "schema": MARKET_SCHEMA,
        "N": model.N,
        "F_max": model.F_max,
        "items": [{"id": it.id, "owner": it.owner, "price": it.price} for it in model.items],
        "inventories": [list(inv) for inv in model.inventories],
        "commissions": {"mode": model.commissions.mode, "matrix": model.commissions.c.tolist()},
        "purchase": purchase_to_dict(model.purchase),
        "arrivals": [a.to_dict() for a in model.arrivals],
        "contexts": list(model.contexts),
        "meta": model.meta,
    }
    if graph is not None:
        doc["topology"] = topology_to_dict(graph)
    return doc


def market_from_dict(doc: Mapping, where: str = "market") -> MarketModel:
    schema = doc.get("schema", MARKET_SCHEMA)
    if schema != MARKET_SCHEMA:
        raise ConfigError(f"{where}.schema: unsupported version {schema!r} (expected {MARKET_SCHEMA})")
    N = _get(doc, "N", where)
    raw_items = _get(doc, "items", where)
    items = []
    for n, it in enumerate(raw_items):
        w = f"{where}.items[{n}]"
        items.append(Item(int(_get(it, "id", w)), int(_get(it, "owner", w)), float(it.get("price", 1.0))))
    M = 1 + max(it.owner for it in items)
    inv = doc.get("inventories")
    if inv is None:
        inv = [[it.id for it in items if it.owner == j] for j in range(M)]
    com = _get(doc, "commissions", where)
    mode = com.get("mode", FIXED)
    if "matrix" in com:
        schema_c = CommissionSchema(mode, np.array(com["matrix"], dtype=float))
    elif "uniform" in com:
        schema_c = CommissionSchema.uniform(len(inv), float(com["uniform"]), mode)
    else:
        raise ConfigError(f"{where}.commissions: give either 'matrix' or 'uniform'")
    purchase = purchase_from_dict(_get(doc, "purchase", where), f"{where}.purchase")
    arrivals = []
    for n, a in enumerate(doc.get("arrivals", [])):
        try:
            arrivals.append(ArrivalProcess.from_dict(a))
        except (KeyError, ConfigurationError) as exc:
            raise ConfigError(f"{where}.arrivals[{n}]: {exc}") from None
    try:
        return MarketModel(items, inv, schema_c, purchase, int(N), arrivals=arrivals,
                           F_max=doc.get("F_max"), contexts=tuple(doc.get("contexts", ())),
                           meta=dict(doc.get("meta", {})))
    except ConfigurationError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    except KeyError as exc:
        raise ConfigError(f"{where}: unknown item {exc}") from None


def topology_to_dict(graph: TopologyGraph) -> dict:
    return {"edges": [list(e) for e in sorted(graph.graph.edges())], "commissions": graph.c.tolist(),
            "mode": graph.mode}


def topology_from_dict(doc: Mapping, M: int, where: str = "topology") -> TopologyGraph:
    edges = _get(doc, "edges", where)
    c = doc.get("commissions", 0.5)
    if np.isscalar(c):
        c = np.full((M, M), float(c))
        np.fill_diagonal(c, 0.0)
    routes = {}
    for key, path in doc.get("routes", {}).items():
        try:
            i, j = (int(v) for v in key.split("-"))
        except ValueError:
            raise ConfigError(f"{where}.routes: key {key!r} must look like 'i-j'") from None
        routes[i, j] = path
    try:
        return TopologyGraph(M, edges, c, doc.get("mode", FIXED), routes)
    except ConfigurationError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def scenario_market(doc: Mapping, seed: int | None = None, where: str = "scenario") -> MarketModel:
    """A market from ``{"preset": name, "seed": k, ...overrides}``."""
    kw = dict(doc)
    name = kw.pop("preset", None)
    if name is None:
        raise ConfigError(f"missing key 'preset' in {where}")
    if seed is not None and "seed" not in kw:
        kw["seed"] = seed
    try:
        return preset(name, **kw)[1]
    except (TypeError, ConfigurationError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def dump(doc: Mapping) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# -- experiments ----------------------------------------------------------------

TOPOLOGY_KINDS = ("complete", "line", "star")


def _graph_factory(doc: Mapping, where: str):
    kind = doc.get("kind")
    if kind is None:
        return lambda market: topology_from_dict(doc, market.M, where)
    if kind not in TOPOLOGY_KINDS:
        raise ConfigError(f"{where}.kind: unknown topology {kind!r}; choose from {list(TOPOLOGY_KINDS)}")
    c = doc.get("c", 0.5)

    def build(market):
        mode = market.commissions.mode
        if kind == "complete":
            return complete_graph(market.M, c, mode)
        if kind == "line":
            return line_graph(market.M, c, mode)
        return star_graph(market.M, int(doc.get("hub", 0)), c, mode)

    return build


def _market_factory(doc: Mapping, base: Path | None, proportional: bool):
    if sum(k in doc for k in ("scenario", "market", "market_file")) != 1:
        raise ConfigError("experiment needs exactly one of 'scenario', 'market' or 'market_file'")
    if "scenario" in doc:
        scen = dict(_get(doc, "scenario", ""))
        if proportional:
            scen["mode"] = PROPORTIONAL
        scenario_market(scen, 0)  # fail early on bad presets

        def factory(seed):
            # the scenario seed pins the item deal; replication seeds drive the streams
            return scenario_market(scen, seed if "seed" not in scen else None)

        return factory
    if "market" in doc:
        mdoc = doc["market"]
        where = "market"
    else:
        p = Path(doc["market_file"])
        if base is not None and not p.is_absolute():
            p = base / p
        mdoc = load(p)
        where = str(p)
    model = market_from_dict(mdoc, where)
    if proportional:
        model = replace(model, commissions=CommissionSchema(PROPORTIONAL, model.commissions.c))
    return lambda seed: model


def experiment_from_dict(doc: Mapping, base: Path | None = None, seed: int | None = None,
                         output: str | None = None) -> ExperimentConfig:
    """Parse an experiment document. ``seed`` and ``output`` override the file."""
    schema = doc.get("schema", EXPERIMENT_SCHEMA)
    if schema != EXPERIMENT_SCHEMA:
        raise ConfigError(f"schema: unsupported version {schema!r} (expected {EXPERIMENT_SCHEMA})")
    flags = doc.get("flags", {})
    if not isinstance(flags, Mapping):
        raise ConfigError("flags: expected an object")
    unknown = set(flags) - {"proportional", "known_sizes", "pool_rule"}
    if unknown:
        raise ConfigError(f"flags: unknown keys {sorted(unknown)}")
    factory = _market_factory(doc, base, bool(flags.get("proportional", False)))
    policies = doc.get("policies", [doc.get("policy", "cbmr-ind")])
    if isinstance(policies, str):
        policies = [policies]
    for n, p in enumerate(policies):
        names = p if isinstance(p, list) else [p]
        bad = [q for q in names if q not in POLICIES]
        if bad:
            raise ConfigError(f"policies[{n}]: unknown policy {bad[0]!r}; choose from {sorted(POLICIES)}")
    policies = [tuple(p) if isinstance(p, list) else p for p in policies]
    if seed is not None:
        seeds = [seed]
    elif "seeds" in doc:
        seeds = list(doc["seeds"])
    else:
        first = int(doc.get("seed", 0))
        seeds = list(range(first, first + int(doc.get("replications", 1))))
    T = _get(doc, "T", "")
    if not isinstance(T, int) or isinstance(T, bool):
        raise ConfigError(f"T: expected an integer, got {T!r}")
    horizon = doc.get("horizon", "slots")
    if horizon not in ("slots", "focus"):
        raise ConfigError(f"horizon: expected 'slots' or 'focus', got {horizon!r}")
    graph_factory = _graph_factory(doc["topology"], "topology") if "topology" in doc else None
    pool_rule = flags.get("pool_rule", "base")
    if pool_rule not in ("base", "inflated", "star"):
        raise ConfigError(f"flags.pool_rule: unknown rule {pool_rule!r}")
    try:
        return ExperimentConfig(factory, policies, T, seeds, output or doc.get("output"), horizon,
                                bool(doc.get("trace", False)), graph_factory, pool_rule,
                                bool(flags.get("known_sizes", False)), doc.get("alpha"), doc.get("d"),
                                doc.get("label", "experiment"), dict(doc.get("extra", {})))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_experiment(path, seed: int | None = None, output: str | None = None) -> ExperimentConfig:
    p = Path(path)
    return experiment_from_dict(load(p), p.parent, seed, output)
