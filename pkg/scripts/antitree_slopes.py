"""Log-log volume slope of the antitree (gamma, K) around the root, against 2(gamma+1)/(2-gamma)."""
from __future__ import annotations

from dataclasses import dataclass, field

from _config import parse

from hklab import geometry as geo
from hklab import metric as mt
from hklab import zoo


@dataclass
class SlopeConfig:
    gamma: float = 1.0
    depths: list = field(default_factory=lambda: [10, 20, 40, 80])
    decades: float = 1.0


def main(cfg: SlopeConfig) -> int:
    d = zoo.antitree_dimension(cfg.gamma)
    print(f"target dimension {d:g}")
    print(f"{'K':>6s} {'vertices':>9s} {'r_lo':>8s} {'r_hi':>8s} {'slope':>8s} {'rel err':>8s}")
    for K in cfg.depths:
        g = zoo.antitree(cfg.gamma, int(K))
        rho = mt.default_intrinsic_metric(g).rho
        s, lo, hi = geo.volume_slope(g, rho, g.idx("0:0"), cfg.decades)
        print(f"{int(K):6d} {g.n:9d} {lo:8.3f} {hi:8.3f} {s:8.3f} {abs(s - d) / d:8.1%}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main(parse(SlopeConfig, __doc__)))
