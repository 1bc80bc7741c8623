"""Command line front end: table reproduction, certificates, good sets and witnesses."""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from .cache import DiskCache
from .config import RunConfig, get_settings, parse_limit_overrides, parse_tuple_label
from .errors import (
    CertificateNotFound,
    ConfigurationError,
    ContractViolation,
    Pent63Error,
    ResourceError,
)
from .escalate import (
    CRITICAL_SET,
    CertifiedOracle,
    build_tree,
    compare_table3,
    critical_set,
    level_counts,
    tree_rows,
    tree_to_json,
    universality_check_63,
)
from .genusdata import DatasetValidator, load, load_dataset
from .goodsets import Certifier, GoodSetComputer, sample_targets
from .models import format_tuple
from .pentcore import evaluate, exceptional_set, representation
from .reports import (
    TABLE3_COLUMNS,
    TABLE12_COLUMNS,
    TREE_COLUMNS,
    ReportWriter,
    certificate_summary,
    format_set,
    goodset_summary,
    table3_row,
    table12_row,
)

logger = logging.getLogger(__name__)

OPEN_TUPLE = (1, 2, 4, 5)
OPEN_EXCEPTIONS = [13]


def build_config(args: argparse.Namespace) -> RunConfig:
    settings = get_settings()
    overrides = dict(settings.limit_override_map)
    if args.limit:
        overrides.update(parse_limit_overrides(";".join(args.limit)))
    try:
        return RunConfig.from_settings(
            settings,
            threads=args.threads,
            cache_dir=args.cache_dir,
            dataset_path=args.dataset,
            limit_overrides=overrides,
            output_format=args.format,
            seed=args.seed,
        )
    except ValidationError as e:
        raise ConfigurationError(f"Invalid run configuration: {e}") from e


def _computer(config: RunConfig) -> GoodSetComputer:
    return GoodSetComputer(cache=DiskCache(config.cache_dir), show_progress=True)


def cmd_table12(args: argparse.Namespace, config: RunConfig) -> int:
    dataset = load_dataset(config.dataset_path)
    overrides = {}
    for coeffs in config.limit_overrides:
        cert = dataset.get(coeffs)
        limit, _ = config.effective_limit(coeffs, cert.sieve_limit)
        overrides[coeffs] = limit
    validator = DatasetValidator(
        dataset=dataset,
        threads=config.threads,
        limit_overrides=overrides,
        check_genus=not args.skip_genus,
        cache=DiskCache(config.cache_dir),
    )
    report = validator.validate_all()
    rows = [
        table12_row(cert, check)
        for cert, check in zip(dataset.certificates, report.rows, strict=True)
    ]
    ReportWriter(config.output_format).rows(rows, TABLE12_COLUMNS)
    for check in report.rows:
        if not check.passed:
            logger.error(f"{check.label}: {'; '.join(check.failures)}")
    return 0 if report.passed else 1


def _tree(config: RunConfig, max_depth: int = 6):
    oracle = CertifiedOracle(dataset=load_dataset(config.dataset_path), threads=config.threads)
    return build_tree(oracle, max_depth=max_depth, show_progress=True)


def cmd_table3(args: argparse.Namespace, config: RunConfig) -> int:
    tree = _tree(config)
    comparison = compare_table3(tree)
    ReportWriter(config.output_format).rows([table3_row(r) for r in comparison], TABLE3_COLUMNS)
    for k, level in sorted(level_counts(tree).items()):
        logger.info(f"k={k}: {level.candidates} candidates, {level.universal} universal")
    return 0 if all(r.passed for r in comparison) else 1


def cmd_verify63(args: argparse.Namespace, config: RunConfig) -> int:
    writer = ReportWriter(config.output_format)
    if args.tuple:
        coeffs = parse_tuple_label(args.tuple)
        universal = universality_check_63(coeffs)
        writer.document({"tuple": format_tuple(coeffs), "universal": universal})
        return 0 if universal else 1
    found = critical_set(_tree(config))
    passed = tuple(found) == CRITICAL_SET
    writer.document(
        {
            "critical_set": format_set(found),
            "size": len(found),
            "max": max(found),
            "status": "PASS" if passed else "FAIL",
        }
    )
    return 0 if passed else 1


def cmd_certify(args: argparse.Namespace, config: RunConfig) -> int:
    cert = load(parse_tuple_label(args.tuple), config.dataset_path)
    certifier = Certifier(_computer(config))
    report = certifier.verify(cert)
    summary = certificate_summary(report)
    if args.samples:
        rng = np.random.default_rng(config.seed)
        witnesses = []
        for n in sample_targets(cert, args.samples, rng):
            x = certifier.represent(cert, n)
            witnesses.append({"N": n, "x": list(x)})
        summary["witnesses"] = witnesses
    ReportWriter(config.output_format).document(summary, ("tuple", "status"))
    return 0 if report.status == "PASS" else 1


def cmd_goodset(args: argparse.Namespace, config: RunConfig) -> int:
    coeffs = parse_tuple_label(args.tuple)
    computer = _computer(config)
    genus, skip, complete = None, None, True
    if not args.diagonal_only:
        try:
            cert = load(coeffs, config.dataset_path)
        except CertificateNotFound:
            logger.warning(f"No genus data for {format_tuple(coeffs)}; using the diagonal class")
        else:
            members, complete = computer.genus(cert)
            genus = [
                replace(m, modulus=m.modulus if m.modulus and args.s % m.modulus == 0 else None)
                for m in members
            ]
            branch = next((b for b in cert.effective_branches() if b.s == args.s), None)
            skip = branch.skip_divisible_by if branch else None
    report = computer.compute(
        coeffs, args.s, genus, skip_divisible_by=skip, genus_complete=complete
    )
    ReportWriter(config.output_format).document(goodset_summary(report), ("tuple", "modulus"))
    return 0


def cmd_witness(args: argparse.Namespace, config: RunConfig) -> int:
    coeffs = parse_tuple_label(args.tuple)
    n = args.n
    if n < 0:
        raise ContractViolation(f"N must be non-negative, got {n}")
    x, method = None, "search"
    try:
        cert = load(coeffs, config.dataset_path)
        branch = cert.branch_for(n)
        if branch is not None and n % branch.half not in branch.excluded_residues:
            x = Certifier(_computer(config)).represent(cert, n)
            method = "certificate"
    except CertificateNotFound:
        pass
    if x is None:
        x = representation(coeffs, n)
    if x is None:
        ReportWriter(config.output_format).document(
            {"tuple": format_tuple(coeffs), "N": n, "represented": False}
        )
        return 1
    value = evaluate(coeffs, x)
    ReportWriter(config.output_format).document(
        {
            "tuple": format_tuple(coeffs),
            "N": n,
            "x": list(x),
            "value": value,
            "method": method,
            "represented": value == n,
        },
        ("tuple", "N", "value", "method"),
    )
    return 0 if value == n else 1


def cmd_sweep(args: argparse.Namespace, config: RunConfig) -> int:
    limit = args.max or get_settings().conjecture_limit
    found = exceptional_set(OPEN_TUPLE, limit, threads=config.threads)
    passed = found == OPEN_EXCEPTIONS
    ReportWriter(config.output_format).document(
        {
            "tuple": format_tuple(OPEN_TUPLE),
            "limit": limit,
            "E_set": format_set(found),
            "status": "PASS" if passed else "FAIL",
        }
    )
    return 0 if passed else 1


def cmd_tree(args: argparse.Namespace, config: RunConfig) -> int:
    tree = _tree(config, args.max_depth)
    writer = ReportWriter(config.output_format)
    if config.output_format == "json":
        writer.document(tree_to_json(tree))
    else:
        writer.rows(list(tree_rows(tree)), TREE_COLUMNS)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pent63", description="Universal sums of pentagonal numbers"
    )
    parser.add_argument("--threads", type=int, help="Worker threads (default: all cores)")
    parser.add_argument("--cache-dir", type=Path, help="Directory for cached results")
    parser.add_argument(
        "--limit",
        action="append",
        metavar="TUPLE=N",
        help="Lower the sieve limit of one tuple, e.g. 1,1,2,5=1000 (repeatable)",
    )
    parser.add_argument("--format", choices=["text", "json", "csv"], help="Output format")
    parser.add_argument("--seed", type=int, help="Seed for sampled checks")
    parser.add_argument("--dataset", type=Path, help="Alternate certificate dataset file")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("table12", help="Recompute the E-sets of every certificate")
    p.add_argument("--skip-genus", action="store_true", help="Skip genus and orbit checks")
    p.set_defaults(handler=cmd_table12)

    p = sub.add_parser("table3", help="Derive the proper universal sums")
    p.set_defaults(handler=cmd_table3)

    p = sub.add_parser("verify63", help="Derive the critical set or test one tuple")
    p.add_argument("--tuple", help="Check this tuple against the critical set")
    p.set_defaults(handler=cmd_verify63)

    p = sub.add_parser("certify", help="Verify the certificate of a quaternary tuple")
    p.add_argument("tuple")
    p.add_argument("--samples", type=int, default=0, help="Sampled witnesses to construct")
    p.set_defaults(handler=cmd_certify)

    p = sub.add_parser("goodset", help="Compute the good set S_s")
    p.add_argument("tuple")
    p.add_argument("s", type=int)
    p.add_argument("--diagonal-only", action="store_true", help="Ignore other genus classes")
    p.set_defaults(handler=cmd_goodset)

    p = sub.add_parser("witness", help="Represent N by the sum")
    p.add_argument("tuple")
    p.add_argument("n", type=int, metavar="N")
    p.set_defaults(handler=cmd_witness)

    p = sub.add_parser("sweep", help="Exceptional set of (1,2,4,5) up to a bound")
    p.add_argument("--max", type=int, help="Sweep bound (default: PENT63_CONJECTURE_LIMIT)")
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("tree", help="Export the escalation tree")
    p.add_argument("--max-depth", type=int, default=6)
    p.set_defaults(handler=cmd_tree)
    return parser


def main(argv: list[str] | None = None) -> None:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )
    try:
        config = build_config(args)
        code = args.handler(args, config)
    except Pent63Error as e:
        logger.error(f"{type(e).__name__}: {e}")
        code = e.exit_code
    except MemoryError as e:
        logger.error(f"{ResourceError.__name__}: {e}")
        code = ResourceError.exit_code
    sys.exit(code)


if __name__ == "__main__":
    main()
