"""Command-line entry points: gen, run, aggregate, convert, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import data
from .errors import RcklError
from .harness import ExperimentConfig, aggregate, run_experiment


def _cmd_gen(args: argparse.Namespace) -> None:
    cloud = data.gen_points(args.n, args.d, args.seed)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    data.export_cloud_csv(cloud, outdir / "points.csv")
    if args.triplets > 0:
        queries = data.sample_distinct_queries(args.n, args.triplets, args.seed)
        rows = data.oracle_answer_many(cloud, queries)
        data.save_triplets(outdir / "triplets.txt", args.n, rows)
    print(f"wrote {outdir}/points.csv"
          + (f" and {outdir}/triplets.txt ({args.triplets} rows)" if args.triplets else ""))


def _cmd_run(args: argparse.Namespace) -> None:
    if args.config:
        raw = json.loads(Path(args.config).read_text())
        config = ExperimentConfig(**raw)
    else:
        config = ExperimentConfig(
            methods=args.method or ["pa-erkle"],
            n=args.n, d=args.d,
            triplet_file=args.triplet_file,
            train_count=args.train, val_count=args.val, test_count=args.test,
            beta=args.beta, p=args.p, delta0=args.delta0,
            tau_grid=args.tau_grid or ExperimentConfig([], ).tau_grid,
            minibatch=args.minibatch,
            eval_every=args.eval_every,
            seeds=args.seed or [0],
            out=args.out,
        )
    rows = run_experiment(config)
    print(f"wrote {len(rows)} rows to {config.out}")


def _cmd_aggregate(args: argparse.Namespace) -> None:
    aggregate(args.input, args.out)
    print(f"wrote {args.out}")


def _cmd_convert(args: argparse.Namespace) -> None:
    """Convert an external comparison dump to the native triplet format.

    Expected source schema: whitespace-separated rows "a b c" meaning
    "a is more similar to b than c"; --one-based shifts indices down by
    one.  The published music-artist and scene-image collections ship in
    per-dataset containers; export them to this row format first.
    """
    n = args.n
    rows = []
    with open(args.input) as fh:
        for line_no, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            if len(parts) != 3:
                raise RcklError(f"{args.input}:{line_no}: expected 3 fields")
            a, b, c = (int(p) - (1 if args.one_based else 0) for p in parts)
            rows.append(data.Triplet(a, b, c).validate(n))
    data.save_triplets(args.out, n, rows)
    print(f"wrote {len(rows)} triplets to {args.out}")


def _cmd_serve(args: argparse.Namespace) -> None:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(args.state_dir), host=args.host, port=args.port)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rckl")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic point cloud and triplets")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--d", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--triplets", type=int, default=0,
                   help="also sample this many oracle-answered triplets")
    p.add_argument("--out", default="dataset")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("run", help="run a benchmark experiment")
    p.add_argument("--config", help="JSON file of ExperimentConfig fields")
    p.add_argument("--method", action="append", default=None,
                   help="repeatable; e.g. pa-erkle, ste-erkle, gnmds-batch")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--d", type=int, default=50)
    p.add_argument("--triplet-file", dest="triplet_file")
    p.add_argument("--train", type=int, default=10000)
    p.add_argument("--val", type=int, default=1000)
    p.add_argument("--test", type=int, default=20000)
    p.add_argument("--beta", type=int, default=1)
    p.add_argument("--p", type=float, default=0.73)
    p.add_argument("--delta0", type=float, default=1.0)
    p.add_argument("--tau-grid", dest="tau_grid", type=float, nargs="*")
    p.add_argument("--minibatch", type=int, default=100)
    p.add_argument("--eval-every", dest="eval_every", type=int, default=100)
    p.add_argument("--seed", type=int, action="append", default=None)
    p.add_argument("--out", default="metrics.csv")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("aggregate", help="mean and 95% CI across trials")
    p.add_argument("input")
    p.add_argument("--out", default="aggregate.csv")
    p.set_defaults(func=_cmd_aggregate)

    p = sub.add_parser("convert", help="convert external triplet rows to the native format")
    p.add_argument("input")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--one-based", action="store_true")
    p.add_argument("--out", default="triplets.txt")
    p.set_defaults(func=_cmd_convert)

    p = sub.add_parser("serve", help="run the live labeling session service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8631)
    p.add_argument("--state-dir", default="sessions")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "command", None) == "run" and not args.config:
        if not args.method:
            print("error: --method or --config required", file=sys.stderr)
            return 2
        if args.seed is None:
            args.seed = [0]
    try:
        args.func(args)
    except RcklError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
