"""Command line interface.

Subcommands: simulate, report, hitl batch / hitl label, spread estimate,
purge, serve. Contract violations exit nonzero with a diagnostic on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import date, datetime, timedelta
from pathlib import Path

from .config import Config
from .errors import SymcallError
from .nlu import IntentClass, LabeledExample
from .service import EVENTS_FILE, Engine, create_app
from .spread import FeatureModel, SpreadPrior, load_observations

REPORT_JSON = "report.json"
REPORT_TEXT = "report.txt"


def _load_config(args) -> Config:
    config = Config.load(args.config) if getattr(args, "config", None) else Config()
    return config


def cmd_simulate(args) -> int:
    config = _load_config(args)
    raw = config.to_dict()
    if args.subjects is not None:
        raw["population"]["n_subjects"] = args.subjects
    if args.seed is not None:
        raw["seed"] = args.seed
        raw["population"]["seed"] = args.seed
    config = Config.from_dict(raw)

    engine = Engine(config)
    engine.create_campaign()
    for _ in range(args.days):
        engine.run_one_day()

    period_start = config.campaign.start_date
    period_end = period_start + timedelta(days=args.days - 1)
    metrics = engine.metrics(period_start, period_end)

    out_dir = Path(args.out)
    engine.save(out_dir)
    (out_dir / REPORT_JSON).write_text(
        json.dumps(metrics.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    (out_dir / REPORT_TEXT).write_text(metrics.to_table() + "\n", encoding="utf-8")
    print(metrics.to_table())
    print(f"store written to {out_dir}")
    return 0


def cmd_report(args) -> int:
    engine = Engine.load(args.store)
    metrics = engine.metrics(date.fromisoformat(args.date_from), date.fromisoformat(args.date_to))
    print(metrics.to_table())
    return 0


def cmd_hitl_batch(args) -> int:
    engine = Engine.load(args.store)
    for item in engine.hitl_batch(args.k):
        print(json.dumps(item, ensure_ascii=False))
    return 0


def cmd_hitl_label(args) -> int:
    engine = Engine.load(args.store)
    examples = []
    for line in Path(args.file).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        raw = json.loads(line)
        examples.append(LabeledExample(text=str(raw["text"]), label=IntentClass(raw["label"])))
    version = engine.add_labels(examples)
    engine.save(args.store)
    print(f"lexicon version {version} ({len(examples)} examples)")
    return 0


def cmd_spread_estimate(args) -> int:
    observations = load_observations(args.obs)
    prior = SpreadPrior()
    if args.prior:
        raw = json.loads(Path(args.prior).read_text(encoding="utf-8"))
        prior = SpreadPrior(
            pi_T=float(raw.get("pi_T", 0.1)),
            alpha=float(raw.get("alpha", 1.0)),
            beta=float(raw.get("beta", 9.0)),
        )
    from .spread import DEFAULT_FEATURE_MODEL, posterior

    fm = FeatureModel.load(args.features) if args.features else DEFAULT_FEATURE_MODEL
    result = posterior(prior, fm, observations, grid_size=args.grid)
    print(f"p_T1 = {result.p_T1:.6g}")
    print(f"q_mean = {result.q_mean:.6g}")
    print(f"q_ci_95 = [{result.q_ci[0]:.6g}, {result.q_ci[1]:.6g}]")
    print(f"point_mass_at_zero = {result.point_mass:.6g}")
    for subject_id, z in result.z_post.items():
        print(f"z[{subject_id}] = {z:.6g}")
    if args.out:
        Path(args.out).write_text(
            json.dumps(result.to_dict(), indent=2) + "\n", encoding="utf-8"
        )
    return 0


def cmd_purge(args) -> int:
    engine = Engine.load(args.store)
    removed = engine.run_purge(datetime.fromisoformat(args.now) if args.now else None)
    engine.save(args.store)
    print(f"purged {removed} records")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    engine = Engine.load(args.store) if args.store else Engine()
    if args.store and engine.campaign_id is None and not engine.store.subjects:
        engine.create_campaign()
    app = create_app(engine, assets_dir=args.assets)
    host, _, port = args.addr.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000), log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="symcall")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a seeded call campaign")
    p.add_argument("--subjects", type=int, default=None)
    p.add_argument("--days", type=int, default=14)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--out", default="store")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="metrics over a stored campaign")
    p.add_argument("--store", required=True)
    p.add_argument("--from", dest="date_from", required=True)
    p.add_argument("--to", dest="date_to", required=True)
    p.set_defaults(func=cmd_report)

    hitl = sub.add_parser("hitl", help="labeling loop").add_subparsers(
        dest="hitl_command", required=True
    )
    p = hitl.add_parser("batch", help="most uncertain utterances to label")
    p.add_argument("--store", required=True)
    p.add_argument("--k", type=int, default=50)
    p.set_defaults(func=cmd_hitl_batch)
    p = hitl.add_parser("label", help="apply labeled examples from a JSONL file")
    p.add_argument("--store", required=True)
    p.add_argument("--file", required=True)
    p.set_defaults(func=cmd_hitl_label)

    spread = sub.add_parser("spread", help="community infection-rate inference").add_subparsers(
        dest="spread_command", required=True
    )
    p = spread.add_parser("estimate", help="posterior from a JSONL observation file")
    p.add_argument("--obs", required=True)
    p.add_argument("--prior", default=None)
    p.add_argument("--features", default=None)
    p.add_argument("--grid", type=int, default=1024)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_spread_estimate)

    p = sub.add_parser("purge", help="drop records past the retention horizon")
    p.add_argument("--store", required=True)
    p.add_argument("--now", default=None)
    p.set_defaults(func=cmd_purge)

    p = sub.add_parser("serve", help="HTTP API (and console assets, if built)")
    p.add_argument("--addr", default="127.0.0.1:8000")
    p.add_argument("--store", default=None)
    p.add_argument("--assets", default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SymcallError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
