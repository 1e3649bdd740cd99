"""Alternating projections between two lines through the origin: per-cycle ratio versus cos^2(angle)."""

from __future__ import annotations

import argparse
import math
from dataclasses import dataclass, field

from orbitsum.algorithms import alternating_projections_run
from orbitsum.convex import AffineSubspace
from orbitsum.orbit import RunOptions


@dataclass
class Config:
    angles_deg: list = field(default_factory=lambda: [10, 20, 30, 45, 60, 75, 89])
    x0: tuple = (1.0, 0.3)
    max_iters: int = 100_000


def main(cfg: Config) -> None:
    print(f"{'angle':>6} {'verdict':<13} {'steps':>7} {'cycle ratio':>12} {'cos^2':>10} {'rel err':>9}")
    for deg in cfg.angles_deg:
        theta = math.radians(deg)
        res = alternating_projections_run(AffineSubspace.line(0.0), AffineSubspace.line(theta), cfg.x0,
                                          RunOptions(max_iters=cfg.max_iters))
        predicted = math.cos(theta) ** 2
        r = res.cycle_ratio
        rel = "" if r is None else f"{abs(r - predicted) / predicted:.2e}"
        shown = "-" if r is None else f"{r:.6f}"
        print(f"{deg:>6} {res.certificate.verdict:<13} {res.trace.n_steps:>7} {shown:>12} {predicted:>10.6f} {rel:>9}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--angles", type=float, nargs="+", dest="angles_deg")
    ap.add_argument("--max-iters", type=int, default=Config.max_iters)
    args = ap.parse_args()
    cfg = Config(max_iters=args.max_iters)
    if args.angles_deg:
        cfg.angles_deg = args.angles_deg
    main(cfg)
