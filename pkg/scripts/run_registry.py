"""Run every built-in problem and write traces, reports and Caristi reports to an output directory."""

from __future__ import annotations

import argparse
import json
from dataclasses import dataclass
from pathlib import Path

from orbitsum.harness import atomic_write, emit_trace, registry, run_problem


@dataclass
class Config:
    out: Path = Path("runs/registry")
    fmt: str = "csv"


def main(cfg: Config) -> int:
    cfg.out.mkdir(parents=True, exist_ok=True)
    rows, failed = [], 0
    for problem in registry():
        report = run_problem(problem)
        emit_trace(report.trace, cfg.out / f"{problem.name}.trace.{cfg.fmt}", cfg.fmt)
        atomic_write(cfg.out / f"{problem.name}.report.json",
                     json.dumps(report.as_dict(), indent=1, default=str) + "\n")
        if report.caristi is not None:
            atomic_write(cfg.out / f"{problem.name}.caristi.txt", report.caristi.to_text())
        failed += report.passed is False
        ratio = "-" if report.ratio is None else f"{report.ratio:.6f}"
        rows.append((problem.name, report.certificate.verdict, report.trace.n_steps,
                     f"{report.certificate.total_displacement:.12g}", ratio,
                     {None: "-", True: "pass", False: "FAIL"}[report.passed]))
    widths = [max(len(str(r[i])) for r in rows) for i in range(len(rows[0]))]
    for r in rows:
        print("  ".join(str(v).ljust(w) for v, w in zip(r, widths)))
    print(f"wrote {len(rows)} problems to {cfg.out}")
    return 1 if failed else 0


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Config.out)
    ap.add_argument("--format", dest="fmt", choices=("csv", "json"), default=Config.fmt)
    raise SystemExit(main(Config(**vars(ap.parse_args()))))
