"""Command line: ``orbitsum run|verify|list|suite``.

Exit codes: 0 pass, 1 expectation mismatch, 2 configuration error,
3 runtime or numeric error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .errors import ConfigError, OrbitsumError
from .harness import atomic_write, emit_trace, registry, resolve, run_problem

EXIT_OK, EXIT_MISMATCH, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

log = logging.getLogger("orbitsum")


def _print_report(report, verbose=True):
    cert = report.certificate
    status = {None: "", True: "PASS", False: "FAIL"}[report.passed]
    print(f"{report.config.name:<28} {cert.verdict:<13} steps={report.trace.n_steps:<6} "
          f"displacement={cert.total_displacement:.12g} {status}".rstrip())
    if verbose:
        print(f"  evidence: {cert.evidence}")
        if report.caristi is not None:
            print(f"  caristi: holds={report.caristi.holds} min_slack={report.caristi.min_slack:.6g} "
                  f"bound={report.caristi.telescoped_bound:.6g}")
        for c in report.checks:
            print(f"  [{'ok' if c.passed else 'MISMATCH'}] {c.name}: {c.detail}")


def _write_outputs(report, out: Path, fmt: str):
    out.mkdir(parents=True, exist_ok=True)
    name = report.config.name
    emit_trace(report.trace, out / f"{name}.trace.{fmt}", fmt)
    atomic_write(out / f"{name}.report.json", json.dumps(report.as_dict(), indent=1, default=str) + "\n")
    if report.caristi is not None:
        atomic_write(out / f"{name}.caristi.txt", report.caristi.to_text())


def cmd_run(args) -> int:
    report = run_problem(resolve(args.config))
    _print_report(report)
    if args.out:
        _write_outputs(report, Path(args.out), args.format)
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = resolve(args.config)
    if cfg.expected is None:
        raise ConfigError("config has no 'expected' block to verify against", field="expected")
    report = run_problem(cfg)
    _print_report(report)
    if args.out:
        _write_outputs(report, Path(args.out), args.format)
    return EXIT_OK if report.passed else EXIT_MISMATCH


def cmd_list(args) -> int:
    for cfg in registry():
        print(f"{cfg.name:<28} {cfg.raw.get('description', '')}")
    return EXIT_OK


def cmd_suite(args) -> int:
    if args.batch:
        lines = Path(args.batch).read_text().splitlines()
        base = Path(args.batch).parent
        configs = [resolve(str(base / ln.strip()) if not Path(ln.strip()).is_absolute() else ln.strip())
                   for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]
    else:
        configs = registry()
    with ThreadPoolExecutor(max_workers=args.jobs) as pool:
        reports = list(pool.map(run_problem, configs))
    failed = 0
    for report in reports:
        _print_report(report, verbose=args.verbose or report.passed is False)
        if args.out:
            _write_outputs(report, Path(args.out), args.format)
        failed += report.passed is False
    print(f"{len(reports) - failed}/{len(reports)} problems passed")
    return EXIT_MISMATCH if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orbitsum", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def outputs(p):
        p.add_argument("--out", help="directory for trace and report files")
        p.add_argument("--format", choices=("csv", "json"), default="csv", help="trace format")

    p = sub.add_parser("run", help="run one problem (path, inline JSON, or registry name)")
    p.add_argument("config")
    outputs(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="run and compare against the config's expected block")
    p.add_argument("config")
    outputs(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("list", help="list built-in problems")
    p.set_defaults(func=cmd_list)

    p = sub.add_parser("suite", help="verify every registry problem (or a batch file of paths)")
    p.add_argument("--batch", help="file listing one config path per line")
    p.add_argument("--jobs", type=int, default=4)
    p.add_argument("-v", "--verbose", action="store_true")
    outputs(p)
    p.set_defaults(func=cmd_suite)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OrbitsumError, ArithmeticError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
