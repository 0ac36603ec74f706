"""Command line: ``attxray run --config <file> --suite <name> --out <dir>``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .io import CONFIG_SCHEMA, ConfigError, load_config, max_workers
from .suites import SUITES, run_suite

log = logging.getLogger("attxray")


def build_parser():
    p = argparse.ArgumentParser(prog="attxray", description="Attenuated X-ray transform checks")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a verification suite")
    r.add_argument("--config", required=True, help="JSON experiment config")
    r.add_argument("--suite", required=True, choices=sorted(SUITES))
    r.add_argument("--out", required=True, help="output directory for reports")
    r.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: ATTXRAY_MAX_WORKERS or 1)")
    r.add_argument("-v", "--verbose", action="store_true")
    s = sub.add_parser("schema", help="print the config JSON schema")
    s.add_argument("--out", default=None)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "schema":
        text = json.dumps(CONFIG_SCHEMA, indent=2)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text + "\n")
        else:
            print(text)
        return 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error at {exc.pointer or '/'}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2
    workers = args.workers if args.workers else max_workers()
    if args.workers:
        workers = min(workers, max_workers(workers))
    results, summary = run_suite(cfg, args.suite, args.out, workers)
    for r in results:
        rel = "-" if r.residual_rel is None else f"{r.residual_rel:.3e}"
        print(f"{'PASS' if r.passed else 'FAIL'}  [{r.criterion}] {r.name}  {rel}")
    print(f"{summary['n_checks'] - summary['n_failed']}/{summary['n_checks']} checks passed")
    return 0 if summary["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
