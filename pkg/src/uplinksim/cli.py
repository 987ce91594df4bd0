"""Command-line front end.

``uplinksim run`` executes one scenario file and writes its CSV logs;
``uplinksim sweep`` repeats a base scenario along an axis; ``uplinksim
pipeline run`` dry-runs the QA construction pipeline with stub judges;
``uplinksim version`` prints the package version.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__, harness, qa_pipeline


def _cmd_run(args) -> int:
    scenario = harness.load_scenario(args.scenario)
    result = harness.run(scenario)
    harness.write_run_outputs(args.out, result)
    s = result.summary
    print(f"stack={scenario.stack} cc={scenario.cc} frames={s.frames_total} "
          f"lost={s.frames_lost} mean_latency_ms={_num(s.mean_latency_ms)} "
          f"p95_latency_ms={_num(s.p95_latency_ms)} accuracy={_num(s.accuracy)} "
          f"mean_bitrate_kbps={_num(s.mean_bitrate_kbps)}")
    print(f"outputs written to {args.out}")
    return 0


def _cmd_sweep(args) -> int:
    base = harness.load_scenario(args.scenario)
    values = [float(v) for v in args.values.split(",") if v.strip()]
    if not values:
        print("sweep: no axis values given", file=sys.stderr)
        return 2
    results = harness.sweep(base, args.axis, values)
    os.makedirs(args.out, exist_ok=True)
    harness.write_summary(os.path.join(args.out, "sweep_summary.csv"), results,
                          with_axis=True)
    for res in results:
        tag = f"{args.axis}_{res.axis_value:g}"
        harness.write_frame_rows(os.path.join(args.out, f"frames_{tag}.csv"), res)
    print(f"{len(results)} runs written to {args.out}")
    return 0


def _cmd_pipeline_run(args) -> int:
    try:
        p, q = (float(v) for v in args.stub_rates.split(","))
    except ValueError:
        print("pipeline: --stub-rates expects two comma-separated numbers",
              file=sys.stderr)
        return 2
    candidates = qa_pipeline.read_manifest(args.manifest)
    ledger = qa_pipeline.VerdictLedger(args.ledger) if args.ledger else None
    judges = qa_pipeline.stub_judges(p, q, seed=args.seed)
    pipeline = qa_pipeline.QaPipeline(judges, ledger=ledger)
    result = pipeline.run(candidates)
    if args.write_back:
        qa_pipeline.write_manifest(args.manifest, candidates)
    s = result.stats
    print(f"generated={s.n_generated} filter_accepted={s.n_filter_accepted} "
          f"verified={s.n_verified} parked={s.n_parked}")
    print(f"filter_rate={s.filter_rate:.4f} verify_rate={s.verify_rate:.4f} "
          f"overall_rate={s.overall_rate:.4f}")
    return 0


def _num(v) -> str:
    return "n/a" if v is None else f"{v:.3f}"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uplinksim")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario")
    p_run.add_argument("--scenario", required=True, help="scenario file")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a scenario along an axis")
    p_sweep.add_argument("--scenario", required=True)
    p_sweep.add_argument("--axis", required=True,
                         choices=["fluctuation_per_min", "bitrate"])
    p_sweep.add_argument("--values", required=True, help="comma-separated values")
    p_sweep.add_argument("--out", required=True)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_pipe = sub.add_parser("pipeline", help="QA construction pipeline")
    pipe_sub = p_pipe.add_subparsers(dest="pipeline_command", required=True)
    p_pipe_run = pipe_sub.add_parser("run", help="stochastic dry run with stub judges")
    p_pipe_run.add_argument("--manifest", required=True)
    p_pipe_run.add_argument("--stub-rates", required=True, metavar="P,Q",
                            help="filter and cross-verify acceptance rates")
    p_pipe_run.add_argument("--seed", type=int, default=0)
    p_pipe_run.add_argument("--ledger", default=None, help="append-only ledger path")
    p_pipe_run.add_argument("--write-back", action="store_true",
                            help="write final states back to the manifest")
    p_pipe_run.set_defaults(func=_cmd_pipeline_run)

    p_ver = sub.add_parser("version", help="print version")
    p_ver.set_defaults(func=lambda args: (print(f"uplinksim {__version__}"), 0)[1])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (harness.ScenarioError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
