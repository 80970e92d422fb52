"""Command-line surface.

Subcommands: run, verify-identities, mms, sweep-beta, stability, report.
Exit status: 0 when every verdict passes, 1 when any fails (the failing
checks are named), 2 for usage or configuration errors.
"""

import argparse
import glob
import os
import sys

from prandtl.config import ConfigError, dump_default, load_config, load_default
from prandtl.storage import read_verdicts


def _load(args):
    if args.config is None:
        return load_default()
    return load_config(args.config)


def _finish(checks: dict) -> int:
    failed = [name for name, c in checks.items() if not c["passed"]]
    for name, c in sorted(checks.items()):
        mark = "PASS" if c["passed"] else "FAIL"
        print(f"[{mark}] {name}")
    if failed:
        print(f"failed checks: {', '.join(sorted(failed))}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="prandtl",
        description="Boundary-layer solver and verification harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="solve one configuration and judge it")
    p_run.add_argument("--config", help="config file (defaults to the built-in)")
    p_run.add_argument("--out", default="out/run", help="artifact directory")
    p_run.add_argument("--save-snapshots", action="store_true")

    p_ids = sub.add_parser("verify-identities",
                           help="refinement study of the transform identities")
    p_ids.add_argument("--refinements", type=int, default=3)
    p_ids.add_argument("--out", default="out/identities")

    p_mms = sub.add_parser("mms", help="manufactured-solution order studies")
    p_mms.add_argument("--refinements", type=int, default=3)
    p_mms.add_argument("--out", default="out/mms")

    p_sweep = sub.add_parser("sweep-beta", help="wall-parameter sweep")
    p_sweep.add_argument("--config")
    p_sweep.add_argument("--out", default="out/sweep")

    p_stab = sub.add_parser("stability", help="two-solution stability runs")
    p_stab.add_argument("--config")
    p_stab.add_argument("--out", default="out/stability")

    p_rep = sub.add_parser("report", help="re-render verdicts from a directory")
    p_rep.add_argument("--dir", required=True)

    p_cfg = sub.add_parser("write-config", help="write the default config file")
    p_cfg.add_argument("--out", default="default.cfg")

    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return 2 if err.code not in (0, None) else 0

    try:
        if args.command == "run":
            from prandtl.runner import execute_run

            cfg = _load(args)
            return _finish(execute_run(cfg, args.out, args.save_snapshots))
        if args.command == "verify-identities":
            from prandtl.runner import execute_identities

            return _finish(execute_identities(args.out, args.refinements))
        if args.command == "mms":
            from prandtl.runner import execute_mms

            return _finish(execute_mms(args.out, args.refinements))
        if args.command == "sweep-beta":
            from prandtl.runner import execute_sweep

            return _finish(execute_sweep(_load(args), args.out))
        if args.command == "stability":
            from prandtl.runner import execute_stability

            return _finish(execute_stability(_load(args), args.out))
        if args.command == "write-config":
            dump_default(args.out)
            print(f"wrote {args.out}")
            return 0
        if args.command == "report":
            paths = sorted(glob.glob(os.path.join(args.dir, "**", "verdicts.json"),
                                     recursive=True))
            if not paths:
                print(f"no verdicts.json under {args.dir}", file=sys.stderr)
                return 2
            combined = {}
            for path in paths:
                doc = read_verdicts(path)
                rel = os.path.relpath(path, args.dir)
                print(f"== {rel} (config {doc['config_hash']}) ==")
                for name, c in sorted(doc["checks"].items()):
                    combined[f"{rel}:{name}"] = c
            return _finish(combined)
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
