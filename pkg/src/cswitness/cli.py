"""``cswitness`` command line entry point.

Exit status: 0 on success, 1 for configuration or missing-input errors,
2 for runtime and numeric failures.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import pipeline
from .config import parse_config
from .errors import CorruptionError, TrainingError, ValidationError

log = logging.getLogger("cswitness")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _pair(text: str) -> tuple[str, str]:
    parts = text.split(",")
    if len(parts) != 2 or not all(parts):
        raise argparse.ArgumentTypeError("expected X,Y")
    return tuple(sorted(parts))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cswitness",
        description="Simulate, capture and analyse carrier-sense behaviour of node pairs.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*pipeline.STAGES, "run"):
        p = sub.add_parser(name, help="run all stages" if name == "run" else f"run the {name} stage")
        p.add_argument("--config", required=True, type=Path, help="scenario JSON")
        p.add_argument("--out", type=Path, help="output directory (default: config output_dir)")
        p.add_argument("--seed", type=int, help="override the master seed")
        if name in ("infer", "run"):
            p.add_argument("--pair", type=_pair, action="append",
                           help="restrict inference to pair X,Y (repeatable)")
        if name == "infer":
            p.add_argument("--obs", type=Path, help="train on this observation CSV instead")
        if name in ("detect", "run"):
            p.add_argument("--tau-selfish", type=float)
            p.add_argument("--tau-witness", type=float)
        if name in ("metrics", "run"):
            p.add_argument("--bucket", type=int, help="bucket width in slots")
    return parser


def _execute(args) -> int:
    if not args.config.is_file():
        log.error("missing input file: %s", args.config)
        return EXIT_CONFIG
    cfg = parse_config(args.config.read_bytes(), seed_override=args.seed)
    out = args.out or (Path(cfg.output_dir) if cfg.output_dir else None)
    if out is None:
        log.error("no output directory: pass --out or set output_dir in the config")
        return EXIT_CONFIG
    opts = {}
    if getattr(args, "pair", None):
        opts["pairs"] = args.pair
    if getattr(args, "obs", None):
        opts["obs_path"] = args.obs
    tau_s, tau_w = getattr(args, "tau_selfish", None), getattr(args, "tau_witness", None)
    if tau_s is not None or tau_w is not None:
        det = cfg.detector
        det = replace(det, tau_selfish=det.tau_selfish if tau_s is None else tau_s,
                      tau_witness=det.tau_witness if tau_w is None else tau_w)
        det.validate()
        opts["detector"] = det
    if getattr(args, "bucket", None) is not None:
        if args.bucket < 1:
            raise ValidationError("--bucket must be >= 1")
        opts["bucket_slots"] = args.bucket
    if args.command == "run":
        pipeline.run_pipeline(cfg, out, **opts)
    else:
        pipeline.run_stage(args.command, cfg, out, **opts)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _execute(args)
    except FileNotFoundError as exc:
        log.error("missing input file: %s", exc)
        return EXIT_CONFIG
    except ValidationError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except (TrainingError, CorruptionError, ArithmeticError) as exc:
        log.error("%s", exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
