"""``analyze`` command: run the survey analyses from a config file."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .errors import HybridBoostError
from .pipeline import ANALYSES, load_config, run_pipeline


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="analyze",
        description="Boosted logistic analysis of farm financial wellbeing survey data.",
    )
    p.add_argument("--config", required=True, help="YAML or JSON run config")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--only", help=f"comma-separated subset of {','.join(ANALYSES)}")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        changes = {}
        if args.seed is not None:
            changes["seed"] = args.seed
        if args.only:
            changes["analyses"] = tuple(s.strip() for s in args.only.split(",") if s.strip())
        if args.out:
            changes["out"] = args.out
        if changes:
            cfg = replace(cfg, **changes)
        manifest = run_pipeline(cfg)
    except HybridBoostError as exc:
        print(f"analyze: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"analyze: error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(manifest['files'])} artifacts to {cfg.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
