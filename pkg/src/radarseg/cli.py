"""Command-line entry point: ``radarseg run|synth|plot|inspect``.

Exit codes: 0 success, 2 configuration error, 3 data or format error,
4 processing error (no peaks, no activity, inconsistent lines).
"""

from __future__ import annotations

import argparse
import sys

from .errors import RadarSegError
from .ingest import cube_paths, load_radar_cube
from .pipeline import run_pipeline, render_plots
from .synth import load_scenario, paper_scenario, write_synthetic

BUILTIN_SCENARIOS = {"paper": paper_scenario}


def cmd_run(args):
    report = run_pipeline(args.cube, args.config, args.out, dump_stages=args.dump_stages)
    print(report.timeline.to_csv(), end="")
    return 0


def cmd_synth(args):
    spec = BUILTIN_SCENARIOS[args.spec]() if args.spec in BUILTIN_SCENARIOS else load_scenario(args.spec)
    for path in write_synthetic(spec, args.seed, args.out):
        print(path)
    return 0


def cmd_plot(args):
    report = run_pipeline(args.cube, args.config, args.out, dump_stages=args.dump_stages)
    for path in render_plots(report, args.out):
        print(path)
    return 0


def cmd_inspect(args):
    cube = load_radar_cube(args.cube)
    hdr, _ = cube_paths(args.cube)
    print(f"header = {hdr}")
    print(f"M = {cube.n_range}")
    print(f"N = {cube.n_pulses}")
    print(f"prf = {cube.prf:g}")
    print(f"range_resolution = {cube.range_resolution:g}")
    print(f"range_offset = {cube.range_offset:g}")
    print(f"duration_s = {cube.duration_s:g}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="radarseg",
        description="Segment radar observations into translation and in-place motion intervals.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def pipeline_args(p, out_required):
        p.add_argument("cube", help="cube stem or its .hdr/.bin file")
        p.add_argument("--config", help="config document (defaults apply when omitted)")
        p.add_argument("--out", required=out_required, help="output directory")
        p.add_argument("--dump-stages", action="store_true", help="also write per-stage debug files")

    p = sub.add_parser("run", help="run the full pipeline and print the timeline")
    pipeline_args(p, out_required=False)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("synth", help="write a synthetic cube with ground truth")
    p.add_argument("spec", help="scenario TOML file, or 'paper' for the built-in walk-sit-stand")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output stem")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("plot", help="run the pipeline and render plots")
    pipeline_args(p, out_required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("inspect", help="print cube header metadata")
    p.add_argument("cube")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RadarSegError as exc:
        print(f"radarseg: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
