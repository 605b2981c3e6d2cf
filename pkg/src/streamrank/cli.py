"""``engine`` command line: ingest, serve, simulate, benchmark, evaluate.

Output is JSON on stdout for scripting; ``--pretty`` renders small human
tables instead. Errors print one machine-parseable JSON line on stderr
and exit non-zero; argparse usage errors exit 2.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path


def _emit(payload: dict, pretty: bool = False):
    if pretty:
        width = max((len(k) for k in payload), default=0)
        for key, value in payload.items():
            print(f"{key:<{width}}  {value}")
    else:
        print(json.dumps(payload, sort_keys=True))


def _fail(message: str, code: int = 1) -> int:
    print(json.dumps({"error": message}), file=sys.stderr)
    return code


def cmd_ingest(args) -> int:
    from .service import Engine

    engine = Engine(args.data_dir)
    summary = engine.ingest_catalog(args.catalog, args.scheme)
    _emit({"ingested": summary["items"], "d": summary["d"],
           "data_dir": str(args.data_dir)}, args.pretty)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.data_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_simulate(args) -> int:
    from .simulator import ExperimentConfig, preset_experiment, run_experiment

    if args.preset:
        config = preset_experiment(args.preset, n_users=args.users)
    elif args.config:
        config = ExperimentConfig.from_dict(json.loads(Path(args.config).read_text()))
    else:
        return _fail("simulate needs --config or --preset")
    report = run_experiment(config, seed=args.seed).to_dict()
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True))
    if args.pretty:
        for arm_key in ("control", "treatment"):
            arm = report[arm_key]
            print(f"{arm_key}: {arm['name']} sessions={arm['sessions']} "
                  f"views={arm['views']} clicks={arm['clicks']} ctr={arm['ctr']:.4f}")
        for metric, res in sorted(report["tests"].items()):
            delta = report["deltas_pct"].get(metric)
            delta_s = "" if delta is None else f" delta={delta:+.2f}%"
            print(f"{metric}:{delta_s} t={res['t']:.3f} p={res['p_value']:.5f}")
    else:
        print(json.dumps(report, sort_keys=True))
    return 0


def cmd_bench_diversify(args) -> int:
    from .diversifier import benchmark

    rows = []
    for rep in range(args.repeats):
        rows.append(
            benchmark(
                args.n, args.k, args.d,
                score_dist=args.distribution,
                seed=args.seed + rep,
                include_naive=args.n <= args.naive_limit,
            )
        )
    fields = ["n", "k", "d", "distribution", "evaluations_naive",
              "evaluations_celf", "wall_time_naive", "wall_time_celf"]
    writer = csv.DictWriter(
        open(args.out, "w", newline="") if args.out else sys.stdout,
        fieldnames=fields,
        extrasaction="ignore",
    )
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return 0


def cmd_eval_log(args) -> int:
    from .weights import CategoryStats, SmoothingPriors, global_weights

    d = args.d
    records = []
    with open(args.log, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    if d is None:
        d = 1 + max((int(r["category"]) for r in records
                     if r.get("category") is not None), default=0)
    stats = CategoryStats.zeros(d)
    for record in records:
        if record.get("category") is None:
            continue
        category = int(record["category"])
        if record["event"] == "view":
            stats.add_view(category)
        else:
            stats.add_click(category)
    weights = global_weights(stats, SmoothingPriors(args.alpha, args.beta))
    _emit(
        {
            "d": d,
            "events": len(records),
            "views": int(stats.views.sum()),
            "clicks": int(stats.clicks.sum()),
            "weights": [round(float(w), 6) for w in weights],
        },
        args.pretty,
    )
    return 0


def cmd_gen_catalog(args) -> int:
    from .catalog import synthetic_scheme
    from .simulator import CatalogSpec, gen_catalog_records

    records = gen_catalog_records(CatalogSpec(n_items=args.n, d=args.d), args.seed)
    lines = "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    if args.out:
        Path(args.out).write_text(lines)
    else:
        sys.stdout.write(lines)
    if args.scheme_out:
        Path(args.scheme_out).write_text(
            json.dumps(synthetic_scheme(args.d).to_dict(), sort_keys=True)
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="engine",
        description="Personalized visual-discovery ranking engine",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a catalog and install it")
    p.add_argument("--catalog", required=True)
    p.add_argument("--scheme", required=True)
    p.add_argument("--data-dir", default=os.environ.get("ENGINE_DATA_DIR", "./engine-data"))
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--data-dir", default=os.environ.get("ENGINE_DATA_DIR", "./engine-data"))
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int,
                   default=int(os.environ.get("ENGINE_PORT", "8321")))
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("simulate", help="run an A/B experiment")
    p.add_argument("--config", help="experiment config JSON file")
    p.add_argument("--preset", help="named preset design",
                   choices=["submodular_vs_multinomial", "adaptive_vs_static",
                            "personalized_vs_global", "aa"])
    p.add_argument("--users", type=int, default=10_000, help="users per arm (presets)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the report JSON here")
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench-diversify", help="benchmark the selection core")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--d", type=int, default=100)
    p.add_argument("--distribution", default="uniform",
                   choices=["uniform", "beta", "constant"])
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--naive-limit", type=int, default=20_000,
                   help="skip the naive timing above this n")
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_bench_diversify)

    p = sub.add_parser("eval-log", help="smoothed per-category CTR from an event log")
    p.add_argument("--log", required=True)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=9.0)
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=cmd_eval_log)

    p = sub.add_parser("gen-catalog", help="write a synthetic catalog")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="catalog JSONL path (default stdout)")
    p.add_argument("--scheme-out", help="also write the matching scheme JSON")
    p.set_defaults(func=cmd_gen_catalog)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
