"""Command line: ``generate``, ``run``, ``sweep`` and ``report``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import config as cfgmod
from .data_gen import PRESETS, preset
from .harness import OUTPUT_ENV, SUMMARY_COLUMNS, output_dir, run_experiment, summary_csv
from .market import ConfigurationError, CommissionSchema

SWEEP_SCHEMA = "cbmr.sweep/1"
REPORT_SCHEMA = "cbmr.report/1"


def _value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _overrides(pairs) -> dict:
    out = {}
    for p in pairs or ():
        key, sep, val = p.partition("=")
        if not sep or not key:
            raise cfgmod.ConfigError(f"--set expects key=value, got {p!r}")
        out[key] = _value(val)
    return out


def cmd_generate(args) -> int:
    kw = _overrides(args.set)
    model = preset(args.preset, seed=args.seed, **kw)[1]
    if args.experiment:
        doc = {"schema": cfgmod.EXPERIMENT_SCHEMA, "label": args.preset,
               "scenario": dict({"preset": args.preset, "seed": args.seed}, **kw),
               "policies": args.policies.split(","), "T": args.T, "seeds": [args.seed]}
    else:
        graph = None
        if args.topology:
            graph = cfgmod._graph_factory({"kind": args.topology, "c": kw.get("c", 0.5)}, "topology")(model)
        doc = cfgmod.market_to_dict(model, graph)
    text = cfgmod.dump(doc)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_run(args) -> int:
    cfg = cfgmod.load_experiment(args.config, seed=args.seed, output=args.output)
    if args.T is not None:
        cfg = replace(cfg, T=args.T)
    doc = run_experiment(cfg)
    sys.stdout.write(summary_csv(doc["aggregate"], cfg.label))
    return 0


def _sweep_config(doc: dict, param: str, value):
    doc = json.loads(json.dumps(doc))
    if param == "T":
        doc["T"] = int(value)
        return doc
    key = "c" if param == "commission" else param
    if "scenario" in doc:
        doc["scenario"][key] = value
    elif "market" in doc and key == "c":
        m = doc["market"]
        mode = m.get("commissions", {}).get("mode", "fixed")
        M = len(m.get("inventories") or {it["owner"] for it in m["items"]})
        m["commissions"] = {"mode": mode, "matrix": CommissionSchema.uniform(M, float(value), mode).c.tolist()}
    else:
        raise cfgmod.ConfigError(f"--param {param}: only scenario keys, T or commission on an inline market can be swept")
    return doc


def cmd_sweep(args) -> int:
    path = Path(args.config)
    base = cfgmod.load(path)
    values = [_value(v) for v in args.values.split(",") if v.strip()]
    if not values:
        raise cfgmod.ConfigError("--values is empty")
    root = output_dir(args.output)
    write = args.output is not None or bool(os.environ.get(OUTPUT_ENV))
    rows = []
    for v in values:
        doc = _sweep_config(base, args.param, v)
        doc["label"] = f"{args.param}={v}"
        out = str(root / f"{args.param}={v}") if write else None
        cfg = cfgmod.experiment_from_dict(doc, path.parent, seed=args.seed, output=out)
        res = run_experiment(cfg)
        for r in res["aggregate"]:
            if r["agent"] == args.agent:
                rows.append(dict(r, label=doc["label"]))
    text = summary_csv(rows)
    if write:
        root.mkdir(parents=True, exist_ok=True)
        (root / "sweep.csv").write_text(text)
    sys.stdout.write(text)
    return 0


def _read_summaries(root: Path) -> list:
    rows = []
    for p in sorted(root.rglob("summary.csv")):
        with open(p, newline="") as fh:
            for r in csv.DictReader(fh):
                r["source"] = str(p.parent.relative_to(root)) if p.parent != root else "."
                rows.append(r)
    return rows


def cmd_report(args) -> int:
    from .plotting import collect_curves, plot_regret

    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    rows, figures = [], []
    for d in args.dirs:
        root = Path(d)
        if not root.is_dir():
            raise OSError(f"{root}: no such results directory")
        got = _read_summaries(root)
        if not got:
            raise OSError(f"{root}: no summary.csv found")
        rows.extend(got)
        for sub in sorted({root / r["source"] for r in got}):
            curves = collect_curves(sub)
            if curves:
                name = "regret_" + (sub.relative_to(root.parent).as_posix().replace("/", "_") or "run") + ".png"
                figures.append(plot_regret(curves, out / name, title=sub.name))
    cols = ("source",) + SUMMARY_COLUMNS
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    if args.agent is not None:
        rows = [r for r in rows if r.get("agent") == str(args.agent)]
    for r in rows:
        w.writerow([r.get(c, "") for c in cols])
    (out / "report.csv").write_text(buf.getvalue())
    (out / "report.json").write_text(cfgmod.dump({"schema": REPORT_SCHEMA, "rows": rows,
                                                  "figures": [f.name for f in figures]}))
    sys.stdout.write(buf.getvalue())
    for f in figures:
        print(f"figure: {f}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cbmr", description="Cooperative contextual bandit recommendation simulator.")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="synthesize a preset market (or an experiment file) as JSON")
    g.add_argument("--preset", required=True, choices=sorted(PRESETS))
    g.add_argument("--seed", type=int, default=0, help="seed for the item deal")
    g.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a scenario parameter (repeatable)")
    g.add_argument("--topology", choices=cfgmod.TOPOLOGY_KINDS, help="attach a network topology to the market")
    g.add_argument("--experiment", action="store_true", help="emit an experiment document instead of a market")
    g.add_argument("--policies", default="cbmr-ind,cbmr-d", help="comma list, with --experiment")
    g.add_argument("--T", type=int, default=10000, help="horizon, with --experiment")
    g.add_argument("-o", "--output", help="file to write (default stdout)")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="run an experiment file")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int, help="run this single replication seed")
    r.add_argument("--T", type=int, help="override the horizon")
    r.add_argument("--output", help=f"results directory (default ${OUTPUT_ENV}; nothing is written if neither is set)")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="rerun an experiment over one parameter")
    s.add_argument("--config", required=True)
    s.add_argument("--param", required=True, help="'commission', 'T' or any scenario key")
    s.add_argument("--values", required=True, help="comma separated values")
    s.add_argument("--seed", type=int)
    s.add_argument("--agent", type=int, default=0, help="agent whose rows are reported")
    s.add_argument("--output")
    s.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="aggregate summary CSVs into a table and regret figures")
    p.add_argument("dirs", nargs="+", help="results directories")
    p.add_argument("--output", required=True, help="directory for report.csv and the PNG figures")
    p.add_argument("--agent", type=int, help="keep only this agent's rows")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, ValueError, OSError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"cbmr {args.command}: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
