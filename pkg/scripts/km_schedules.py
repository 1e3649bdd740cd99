"""KM relaxation on a planar rotation: measured gap ratio against |(1 - a) + a e^{i theta}| per alpha.

Also runs the harmonic schedule a/(n+1). Its gaps decay only polynomially, so
the run reaches max_iters before the residual tolerance and stays INCONCLUSIVE.
"""

from __future__ import annotations

import argparse
import cmath
from dataclasses import dataclass, field

from orbitsum.algorithms import RelaxationSchedule, km_run
from orbitsum.maps import rotation
from orbitsum.orbit import RunOptions


@dataclass
class Config:
    theta: float = cmath.pi / 2
    alphas: list = field(default_factory=lambda: [0.1, 0.25, 0.5, 0.75, 0.9])
    x0: tuple = (1.0, 0.0)
    max_iters: int = 20_000


def main(cfg: Config) -> None:
    T = rotation(cfg.theta)
    opts = RunOptions(max_iters=cfg.max_iters)
    print(f"{'schedule':<16} {'verdict':<13} {'steps':>6} {'km_functional':>16} {'ratio':>10} {'predicted':>10}")
    for a in cfg.alphas:
        res = km_run(T, cfg.x0, RelaxationSchedule("constant", a), opts=opts)
        predicted = abs((1 - a) + a * cmath.exp(1j * cfg.theta))
        ratio = res.certificate.ratio_estimate
        print(f"{'constant ' + str(a):<16} {res.certificate.verdict:<13} {res.trace.n_steps:>6} "
              f"{res.km_functional:>16.12f} {ratio if ratio is None else f'{ratio:.6f}':>10} {predicted:>10.6f}")
    res = km_run(T, cfg.x0, RelaxationSchedule("harmonic", 0.9), opts=opts)
    print(f"{'harmonic 0.9':<16} {res.certificate.verdict:<13} {res.trace.n_steps:>6} "
          f"{res.km_functional:>16.12f} {'':>10} {'':>10}")
    print(f"  evidence: {res.certificate.evidence}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--theta", type=float, default=Config.theta)
    ap.add_argument("--alphas", type=float, nargs="+")
    ap.add_argument("--max-iters", type=int, default=Config.max_iters)
    args = ap.parse_args()
    cfg = Config(theta=args.theta, max_iters=args.max_iters)
    if args.alphas:
        cfg.alphas = args.alphas
    main(cfg)
