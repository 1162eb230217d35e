"""Command line entry points.

Exit codes: 0 full success, 1 any grid cell failed, 2 configuration or
usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .experiment import (
    ConfigError,
    load_synth_spec,
    parse_config,
    run_grid,
)
from .ingest import LABELS, StreamError, load_stream, save_stream, segment_runs, synth_worker
from .metrics import evaluate
from .reorder import RdssConfig, reorder_as, reorder_rdss, reorder_rs


def _cmd_run(args) -> int:
    cfg = parse_config(args.config)
    overrides = {}
    if args.out:
        overrides["out_dir"] = args.out
    if args.seeds:
        overrides["seeds"] = tuple(int(s) for s in args.seeds.split(","))
    if args.settings:
        overrides["settings"] = tuple(args.settings.split(","))
    if args.mode:
        overrides["mode"] = args.mode
    if overrides:
        import dataclasses

        cfg = dataclasses.replace(cfg, **overrides)
    cfg.validate()
    result = run_grid(cfg, jobs=args.jobs)
    for rec in result.records:
        if rec.error is None:
            rep = rec.report
            print(
                f"{rec.setting} seed {rec.seed}: acc {rep.accuracy:.3f} "
                f"macro-F1 {rep.macro_f1:.3f}"
            )
        else:
            print(f"{rec.setting} seed {rec.seed}: FAILED ({rec.error})")
    if result.table is not None:
        print()
        print(result.table.render_text(), end="")
    print(f"\nartifacts under {cfg.out_dir}")
    return 0 if result.ok else 1


def _cmd_gen_data(args) -> int:
    spec = load_synth_spec(args.spec)
    stream = synth_worker(spec)
    save_stream(stream, args.out)
    print(f"wrote {len(stream)} frames to {args.out}")
    return 0


def _cmd_reorder(args) -> int:
    stream = load_stream(args.infile)
    segments = segment_runs(stream)
    if args.strategy == "rs":
        out = reorder_rs(segments, args.seed)
    elif args.strategy == "as":
        out = reorder_as(segments)
    else:
        out = reorder_rdss(segments, RdssConfig(group_count=args.groups, seed=args.seed))
    save_stream(out, args.out)
    print(f"wrote {len(out)} frames ({len(segments)} segments, {args.strategy}) to {args.out}")
    return 0


def _read_label_file(path: str) -> np.ndarray:
    ops = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            op = int(line)
        except ValueError:
            raise StreamError(f"{path}: line {lineno}: expected an integer label") from None
        ops.append(LABELS.index(op))
    if not ops:
        raise StreamError(f"{path}: no labels")
    return np.array(ops)


def _cmd_eval(args) -> int:
    truth = _read_label_file(args.truth)
    pred = _read_label_file(args.pred)
    report = evaluate(truth, pred, setting="eval", seed=0)
    print("accuracy,precision,recall,macro_f1")
    print(f"{report.accuracy!r},{report.precision!r},{report.recall!r},{report.macro_f1!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="harshuffle",
        description="Segment-shuffle augmentation workbench for accelerometer HAR",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute the experiment grid from a JSON config")
    run.add_argument("--config", required=True)
    run.add_argument("--out", help="override the output directory")
    run.add_argument("--seeds", help="comma-separated seed list override")
    run.add_argument("--settings", help="comma-separated setting list override")
    run.add_argument("--mode", choices=["append", "replace"])
    run.add_argument("--jobs", type=int, default=1, help="parallel cell processes")
    run.set_defaults(func=_cmd_run)

    gen = sub.add_parser("gen-data", help="emit a synthetic worker stream CSV")
    gen.add_argument("--spec", required=True, help="SynthWorkerSpec JSON file")
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=_cmd_gen_data)

    reo = sub.add_parser("reorder", help="reorder a stream's activity segments")
    reo.add_argument("--in", dest="infile", required=True)
    reo.add_argument("--strategy", choices=["rs", "as", "rdss"], required=True)
    reo.add_argument("--seed", type=int, default=0)
    reo.add_argument("--groups", type=int, default=16, help="rdss group count")
    reo.add_argument("--out", required=True)
    reo.set_defaults(func=_cmd_reorder)

    ev = sub.add_parser("eval", help="score prediction vs truth label files")
    ev.add_argument("--pred", required=True, help="one operation id per line")
    ev.add_argument("--truth", required=True)
    ev.set_defaults(func=_cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, StreamError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
