"""Command-line entry point: ``cusplab <subcommand> [flags]``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ENV_PREFIX, load_config
from .errors import ConfigError, CuspLabError
from .experiments import CRITERIA, RUNNERS

EXIT_OK = 0
EXIT_FAILED_CHECK = 1
EXIT_CONFIG = 2
EXIT_ERROR = 3


def build_parser():
    p = argparse.ArgumentParser(
        prog="cusplab",
        description="Numerical experiments on cusp geodesic flows.",
        epilog=f"Settings may also come from a flat TOML file (--config) or {ENV_PREFIX}<NAME> environment variables; flags win.",
    )
    p.add_argument("subcommand", choices=sorted(RUNNERS))
    p.add_argument("--config", help="flat TOML file of key = value settings")
    p.add_argument("--model", choices=("revolution", "product", "wp"))
    p.add_argument("--r", type=float)
    p.add_argument("--d0", type=float)
    p.add_argument("--m", type=int, help="number of pinching factors in the product model")
    p.add_argument("--nu", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--eps", help="comma-separated list")
    p.add_argument("--k0", type=int)
    p.add_argument("--grid", type=int, help="number of grid points")
    p.add_argument("--ensemble", type=int, help="ensemble size")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--tol", type=float)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k not in ("subcommand", "config") and v is not None}
    try:
        cfg = load_config(args.config, overrides=flags)
    except ConfigError as exc:
        print(f"cusplab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        report = RUNNERS[args.subcommand](cfg, out)
    except CuspLabError as exc:
        print(f"cusplab {args.subcommand}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    report.write(out)
    for cid, chk in report.checks.items():
        tag = "PASS" if chk.verdict else "FAIL"
        kind = "" if chk.hard else " (informational)"
        print(f"{cid:>22} {tag}{kind}")
    mapped = [c for c, s in CRITERIA.items() if s == args.subcommand]
    print(f"criteria covered: {', '.join(mapped)}; report: {out / (report.name + '-report.json')}")
    return EXIT_OK if report.ok else EXIT_FAILED_CHECK


if __name__ == "__main__":
    sys.exit(main())
