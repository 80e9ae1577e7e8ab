"""Regenerate the convergence tables for the manufactured examples.

Usage:
    python scripts/reproduce_tables.py [--out-dir tables] [--quick]

Each table is written as markdown and CSV.  ``--quick`` stops every ladder
at Ns=40, which finishes in well under a minute.
"""

from __future__ import annotations

import argparse
import logging
from pathlib import Path

from dgife import RunConfig, emit_table, run_convergence

LADDERS = {
    "ex1_nipg": dict(example="1", epsilon=1, sigma=1.0, ns=[10, 20, 40, 80, 160]),
    "ex1_sipg": dict(example="1", epsilon=-1, sigma=100.0, ns=[10, 20, 40, 80, 160]),
    "ex2_nipg": dict(example="2", epsilon=1, sigma=1.0, ns=[10, 20, 40, 80, 160]),
    "ex3a_nipg": dict(example="3a", epsilon=1, sigma=1.0, ns=[10, 20, 40, 80, 160]),
    "ex3b_nipg": dict(example="3b", epsilon=1, sigma=1.0, ns=[40, 80, 160, 320]),
}


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", type=Path, default=Path("tables"))
    parser.add_argument("--quick", action="store_true")
    parser.add_argument("--only", nargs="*", choices=sorted(LADDERS))
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args.out_dir.mkdir(parents=True, exist_ok=True)

    for name, params in LADDERS.items():
        if args.only and name not in args.only:
            continue
        ns = [n for n in params["ns"] if n <= 40] if args.quick else params["ns"]
        if len(ns) < 2:
            ns = params["ns"][:2]
        reports = []
        for theta in (1.0, 0.5):
            cfg = RunConfig(**{**params, "ns": ns}, theta=theta)
            result = run_convergence(cfg)
            for n, msg in result.failures.items():
                logging.error("%s theta=%g Ns=%d failed: %s", name, theta, n, msg)
            reports += result.reports
        md = emit_table(reports, args.out_dir / f"{name}.md", "markdown")
        emit_table(reports, args.out_dir / f"{name}.csv", "csv")
        print(f"## {name}\n\n{md}")


if __name__ == "__main__":
    main()
