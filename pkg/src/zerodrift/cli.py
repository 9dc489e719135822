"""Command-line entry point.

Exit codes: 0 clean, 1 drift detected (only with ``--fail-on-drift``),
2 usage or configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .baselines import score_windows
from .config import ConfigError, InputSpec, RunConfig, load_config
from .model import DriftError, serialize_records
from .pipeline import StageError, ingest, run_analyze, to_plain, window_records
from .report import EMIT_FORMATS, emit_report, load_report, to_json
from .rng import derive_seed
from .synth import SynthConfig, generate_stream
from .temporal import assign_bins, window_partition

EXIT_OK, EXIT_DRIFT, EXIT_USAGE, EXIT_DATA = 0, 1, 2, 3

log = logging.getLogger("zerodrift")


def _write(data: bytes, out: Optional[str]) -> None:
    if out:
        Path(out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    changes = {}
    if getattr(args, "input", None):
        changes["inputs"] = (InputSpec(args.input, args.format or "jsonl"),)
    elif getattr(args, "format", None):
        changes["inputs"] = tuple(InputSpec(i.path, args.format) for i in cfg.inputs)
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    return replace(cfg, **changes) if changes else cfg


def cmd_analyze(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    report = run_analyze(cfg)
    _write(emit_report(report, args.emit, include_runtime=args.timing), args.out)
    for key, fmt in (("json", "json"), ("markdown", "markdown"), ("csv_series", "csv-series")):
        path = cfg.outputs.get(key)
        if path and path != args.out:
            Path(path).write_bytes(emit_report(report, fmt, include_runtime=args.timing))
    detected = report.any_detected
    log.info("analysis finished: drift %s", "detected" if detected else "not detected")
    return EXIT_DRIFT if detected and args.fail_on_drift else EXIT_OK


def cmd_synth(args) -> int:
    if args.config:
        cfg = load_config(args.config)
        synth = cfg.synth or SynthConfig(labels=cfg.labels.labels)
    else:
        synth = SynthConfig()
    if args.seed is not None:
        synth = replace(synth, seed=args.seed)
    dataset = generate_stream(synth)
    _write(serialize_records(dataset, args.format or "jsonl"), args.out)
    return EXIT_OK


def cmd_baselines(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    dataset = ingest(cfg)
    bins = assign_bins(dataset)
    out = {}
    for event in sorted(cfg.events, key=lambda e: e.event_name):
        try:
            windows = window_partition(bins, event)
        except DriftError as exc:
            raise StageError("window", exc) from exc
        scores, skipped = score_windows(
            window_records(windows.pre),
            window_records(windows.during),
            cfg.baselines,
            cfg.psi_bins,
            cfg.kmeans_k,
            derive_seed(derive_seed(cfg.seed, f"event:{event.event_name}"), "kmeans"),
        )
        out[event.event_name] = {"comparison": "pre vs during", "scores": to_plain(scores), "skipped": skipped}
    _write(to_json(out), args.out)
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        report = load_report(Path(args.input).read_bytes())
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise DriftError(f"cannot read report {args.input}: {exc}") from None
    _write(emit_report(report, args.emit), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zerodrift", description="Zero-training temporal drift detection")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="run config (YAML)")
        p.add_argument("--input", help="prediction log; overrides the config inputs")
        p.add_argument("--format", choices=("jsonl", "csv"), help="input/output record format")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--seed", type=int, help="override the configured seed")

    p = sub.add_parser("analyze", help="full drift analysis")
    common(p)
    p.add_argument("--emit", choices=EMIT_FORMATS, default="json")
    p.add_argument("--fail-on-drift", action="store_true", help="exit 1 when any event shows drift")
    p.add_argument("--timing", action="store_true", help="include wall-clock runtime in the output")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("synth", help="write a synthetic prediction stream")
    common(p, config_required=False)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("baselines", help="baseline scores only")
    common(p)
    p.set_defaults(func=cmd_baselines)

    p = sub.add_parser("report", help="re-render a stored JSON report")
    p.add_argument("--input", required=True, help="JSON report written by analyze")
    p.add_argument("--emit", choices=EMIT_FORMATS, default="markdown")
    p.add_argument("--out", help="output path (default: stdout)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StageError as exc:
        print(f"error in stage {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DriftError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
