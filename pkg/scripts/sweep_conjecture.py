#!/usr/bin/env python3
"""Sweep the exceptional set of P_{5,(1,2,4,5)} up to a bound."""

import argparse
import json
import sys
import time
from pathlib import Path

from pent63.config import get_settings
from pent63.errors import Pent63Error
from pent63.pentcore import RepresentabilityTable, build_table, export_bits, export_json

COEFFS = (1, 2, 4, 5)
EXPECTED = [13]


def run_sweep(limit: int, threads: int) -> tuple[list[int], RepresentabilityTable]:
    """Sieve (1,2,4,5) up to limit and return its exceptional set."""
    print(f"Sieving {COEFFS} up to {limit} with {threads} thread(s)...")
    start = time.perf_counter()
    table = build_table(COEFFS, limit, threads=threads)
    found = table.exceptional()
    print(f"Done in {time.perf_counter() - start:.1f}s")
    return found, table


def main() -> None:
    settings = get_settings()
    parser = argparse.ArgumentParser(description="Exceptional set of (1,2,4,5) up to a bound")
    parser.add_argument(
        "--limit",
        "-l",
        type=int,
        default=settings.conjecture_limit,
        help=f"Sweep bound (default: {settings.conjecture_limit})",
    )
    parser.add_argument(
        "--threads", "-t", type=int, default=settings.threads, help="Worker threads"
    )
    parser.add_argument("--dump", type=Path, help="Write the raw bit vector to this file")
    parser.add_argument("--json", type=Path, help="Write {coeffs, limit, exceptional_list} here")
    args = parser.parse_args()

    try:
        found, table = run_sweep(args.limit, args.threads)
    except Pent63Error as e:
        print(f"Error: {e}")
        sys.exit(e.exit_code)

    if args.dump:
        args.dump.write_bytes(export_bits(table))
        print(f"Bit dump written to {args.dump}")
    if args.json:
        args.json.write_text(json.dumps(export_json(table)), encoding="utf-8")
        print(f"JSON written to {args.json}")

    print(f"E(P_5,{COEFFS}) up to {args.limit}: {found}")
    expected = [n for n in EXPECTED if n <= args.limit]
    if found != expected:
        print(f"Sweep failed: expected {expected}")
        sys.exit(1)
    print("Sweep passed")


if __name__ == "__main__":
    main()
