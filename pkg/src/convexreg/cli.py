"""Command line entry point: ``convexreg run | validate | body-info``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from .body.io import BodySpecError, load_body
from .config import Config
from .harness.experiment import SUITES, ConfigError, load_config
from .harness.runner import check_corpus, run_experiment, selected_suites
from .measure import barycenter
from .numerics import RngStream

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="convexreg", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run inequality suites and write CSV/JSON reports")
    run.add_argument("--config", required=True, help="experiment config (JSON)")
    run.add_argument("--seed", required=True, type=_u64, help="evaluation seed (unsigned 64-bit)")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--suite", choices=list(SUITES) + ["all"], help="override the config's suite")
    run.add_argument("--jobs", type=_positive, default=1, help="worker processes (default 1)")
    run.add_argument("--timings", action="store_true", help="fill the ms column (breaks byte-identity)")

    val = sub.add_parser("validate", help="check a config and its corpus without running")
    val.add_argument("--config", required=True)

    info = sub.add_parser("body-info", help="radii certificates, symmetry and barycentre of a body")
    info.add_argument("body", help="body description (JSON file)")
    info.add_argument("--samples", type=_positive,
                      default=int(os.environ.get("CONVEXREG_BUDGET_HR_SAMPLES", 8000)),
                      help="hit-and-run samples for the barycentre")
    info.add_argument("--seed", type=_u64, default=0)
    return ap


def _cmd_run(args) -> int:
    exp = load_config(args.config)
    result = run_experiment(exp, args.seed, args.out, args.suite, args.jobs, args.timings)
    for rep in result.reports:
        counts = rep.summary["counts"]
        text = ", ".join(f"{k}={v}" for k, v in counts.items())
        print(f"{rep.suite}: {'PASS' if rep.passed else 'FAIL'} ({text})")
    print(f"wrote {len(result.files)} files to {args.out}")
    return EXIT_OK if result.passed else EXIT_FAIL


def _cmd_validate(args) -> int:
    exp = load_config(args.config)
    suites = selected_suites(exp)
    items = check_corpus(exp, exp.calibration_seed)
    kinds = {}
    for it in items:
        kinds[it.kind] = kinds.get(it.kind, 0) + 1
    print(f"ok: suites={','.join(suites)} dims={list(exp.dims)} corpus={len(items)} items "
          + " ".join(f"{k}={v}" for k, v in sorted(kinds.items())))
    return EXIT_OK


def _cmd_body_info(args) -> int:
    K = load_body(args.body)
    config = Config.from_env()
    bar = barycenter(K, args.samples, RngStream(args.seed), config)
    doc = {
        "tag": K.tag,
        "dim": K.dim,
        "r_in": K.r_in,
        "r_out": K.r_out,
        "symmetric": bool(K.symmetric),
        "exact_lp_route": K.lift() is not None,
        "barycenter": np.round(bar.value, 12).tolist(),
        "barycenter_stderr": np.round(bar.stderr, 12).tolist(),
        "barycenter_samples": bar.n_samples,
    }
    print(json.dumps(doc, indent=2))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handlers = {"run": _cmd_run, "validate": _cmd_validate, "body-info": _cmd_body_info}
    try:
        return handlers[args.command](args)
    except (ConfigError, BodySpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
