"""Coherence measures against their D_inc lower bounds on equal-weight random mixtures.

Writes one CSV row per trial plus a per-NMPS summary.

    python3 scripts/run_table1.py --trials 100 --out table1.csv
"""
import argparse
import json
import sys

from witness_bounds.cli import TABLE1_HEADER, Table1Config, table1_rows, table1_summary


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--nmps", type=int, nargs="+", default=[2, 5, 10, 20, 100])
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--out", default="table1.csv")
    args = ap.parse_args()

    cfg = Table1Config(nmps=tuple(args.nmps), trials=args.trials, seed=args.seed)
    rows, violations = table1_rows(cfg)
    with open(args.out, "w") as fh:
        fh.write(",".join(TABLE1_HEADER) + "\n")
        for r in rows:
            fh.write(",".join(repr(x) if isinstance(x, float) else str(x) for x in r) + "\n")
    summary = table1_summary(rows, cfg.nmps)
    summary["violations"] = violations
    print(json.dumps(summary, indent=2))
    sys.exit(1 if violations else 0)


if __name__ == "__main__":
    main()
