"""Command-line interface: ``enamle {synth,train,infer,bench,diff}``.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bench, dataset as ds, engine
from .correlation import DEFAULT_THRESHOLD, build_groups
from .failure import DEFAULT_RATES
from .learners import ClassifierSpec, TrainedEnsemble, train
from .plan import PlanError, build_feature_sets, compute_min_m

EXIT_CONFIG = 2
EXIT_RUNTIME = 3

log = logging.getLogger("enamle")


def _ints(text):
    return [int(x) for x in text.split(",") if x.strip()]


def _rates(text):
    vals = [float(x) for x in text.split(",") if x.strip()]
    return [v / 100.0 if v > 1 else v for v in vals]


def cmd_synth(args):
    d = ds.synthesize(_ints(args.groups), args.rows, args.classes, args.noise, args.seed)
    ds.write_csv(d, args.out, args.label)
    print(f"wrote {d.n_rows} rows x {d.n_sensors} sensors to {args.out}")


def cmd_train(args):
    d = ds.load_csv(args.data, args.label)
    if not args.no_normalize:
        d = ds.normalize(d)
    d = ds.split(d, args.train_fraction, args.split_seed)
    gs = build_groups(d, args.threshold)
    min_m = compute_min_m(gs)
    m = bench.resolve_size(_size_arg(args.m), min_m)
    plan = build_feature_sets(gs, m)
    hyper = json.loads(args.hyperparameters) if args.hyperparameters else {}
    ens = train(d, plan, ClassifierSpec(args.kind, hyper, args.seed))
    ens.save(args.out)
    if args.groups_out:
        Path(args.groups_out).write_text(gs.to_json() + "\n")
    print(json.dumps({"model": str(args.out), "min_m": min_m, "m": m, "groups": gs.sizes}))


def _size_arg(text):
    return int(text) if str(text).isdigit() else text


def cmd_infer(args):
    ens = TrainedEnsemble.load(args.model)
    raw = sys.stdin.read() if args.request == "-" else Path(args.request).read_text()
    doc = json.loads(raw)
    values = doc.get("values", {})
    if isinstance(values, list):
        values = dict(zip(ens.sensor_names, values))
    req = engine.InferenceRequest(
        {k: v for k, v in values.items() if v is not None}, frozenset(doc.get("failed", []))
    )
    min_m = ens.plan.min_m
    if args.policy == "base":
        out = engine.base_infer(req, ens)
    elif args.policy == "secoe":
        m = bench.resolve_size(_size_arg(args.m), min_m) if args.m else ens.m
        out = engine.secoe_infer(req, ens, m)
    else:
        cfg = engine.EnamleConfig(
            bench.resolve_size(_size_arg(args.small_m), min_m),
            bench.resolve_size(_size_arg(args.large_m), min_m) if args.large_m else ens.m,
            args.t, args.low_upper, args.moderate_upper, args.min_vote,
        )
        out = engine.enamle_infer(req, ens, cfg)
    print(json.dumps(out.to_dict()))


def cmd_bench(args):
    cfg = bench.ExperimentConfig.load(args.config)
    doc = dict(cfg.raw)
    sched = dict(doc.get("schedule", {}))
    if args.rates:
        sched["rates"] = _rates(args.rates)
    if args.runs is not None:
        sched["runs"] = args.runs
    if args.seed is not None:
        sched["seed"] = args.seed
    if sched:
        doc["schedule"] = sched
        cfg = bench.ExperimentConfig.from_dict(doc)
    out = bench.run(cfg, args.out)
    print(f"wrote {out / 'results.csv'} and {out / 'summary.json'}")


def cmd_diff(args):
    a = bench.read_report(args.a)
    b = bench.read_report(args.b)
    arm_a = args.arm_a or a[0]["arm"]
    arm_b = args.arm_b or (arm_a if args.b != args.a else b[0]["arm"])
    ra = [r for r in a if r["arm"] == arm_a]
    rb = [r for r in b if r["arm"] == arm_b]
    if not ra or not rb:
        raise bench.ConfigError(f"arm not found: {arm_a if not ra else arm_b}")
    deltas = bench.report_diff(ra, rb)
    w = sys.stdout
    w.write(",".join(["rate", *bench.METRICS]) + "\n")
    for rate, row in deltas.items():
        w.write(",".join([rate, *(f"{row[m]:.6g}" for m in bench.METRICS)]) + "\n")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="enamle", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="write a synthetic sensor dataset as CSV")
    s.add_argument("--groups", default="4,4,4,4,4,4", help="comma-separated group sizes")
    s.add_argument("--rows", type=int, default=5000)
    s.add_argument("--classes", type=int, default=4)
    s.add_argument("--noise", type=float, default=0.1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--label", default="label")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    t = sub.add_parser("train", help="train base model and sub-models; save a JSON artifact")
    t.add_argument("--data", required=True)
    t.add_argument("--label", default="label")
    t.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    t.add_argument("--kind", default="mlp", choices=["mlp", "random_forest", "linear_svm"])
    t.add_argument("--hyperparameters", help="JSON object of classifier hyperparameters")
    t.add_argument("--m", default="MinM+8", help="ensemble size, integer or MinM+k")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--split-seed", type=int, default=0)
    t.add_argument("--train-fraction", type=float, default=0.85)
    t.add_argument("--no-normalize", action="store_true")
    t.add_argument("--groups-out")
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    i = sub.add_parser("infer", help="single inference from a JSON request {values, failed}")
    i.add_argument("--model", required=True)
    i.add_argument("--request", default="-", help="request file, '-' for stdin")
    i.add_argument("--policy", choices=["enamle", "secoe", "base"], default="enamle")
    i.add_argument("--m", help="SECOE ensemble size (default: all trained)")
    i.add_argument("--small-m", default="MinM+4")
    i.add_argument("--large-m", default=None)
    i.add_argument("--t", default="0.5")
    i.add_argument("--low-upper", type=float, default=engine.DEFAULT_LOW_UPPER)
    i.add_argument("--moderate-upper", type=float, default=engine.DEFAULT_MODERATE_UPPER)
    i.add_argument("--min-vote", type=int, default=engine.DEFAULT_MIN_VOTE)
    i.set_defaults(func=cmd_infer)

    b = sub.add_parser("bench", help="run an experiment config; write results.csv and summary.json")
    b.add_argument("--config", required=True)
    b.add_argument("--out", help="output directory (overrides the config)")
    b.add_argument(
        "--rates", help=f"comma-separated rates, percent or fraction (default {DEFAULT_RATES})"
    )
    b.add_argument("--runs", type=int)
    b.add_argument("--seed", type=int)
    b.set_defaults(func=cmd_bench)

    df = sub.add_parser("diff", help="relative per-rate deltas between two report arms")
    df.add_argument("a")
    df.add_argument("b")
    df.add_argument("--arm-a")
    df.add_argument("--arm-b")
    df.set_defaults(func=cmd_diff)
    return p


CONFIG_ERRORS = (
    bench.ConfigError, ds.DatasetError, engine.EngineError, PlanError, json.JSONDecodeError,
    FileNotFoundError,
)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except CONFIG_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return 0


if __name__ == "__main__":
    sys.exit(main())
