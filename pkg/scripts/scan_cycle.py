"""Certify a normalized cycle and scan the assembled Gaussian bound over a time grid."""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass

from _config import parse

from hklab.cli import main as cli


@dataclass
class CycleScan:
    n: int = 300
    r: float = 42.0
    R: float = 150.0
    sample: int = 4
    times: str = "logspace:14112:1411200:20"
    variant: str = "normalized"
    seed: int = 0
    jobs: int = os.cpu_count() or 1
    out: str = "runs/scan-cycle"


def scenario(cfg: CycleScan) -> dict:
    return {
        "name": f"normalized-cycle-{cfg.n}",
        "graph": {"generator": {"family": "cycle", "size": {"n": cfg.n}, "measure": "normalizing"}},
        "params": {"n": 3, "d": 1, "p": "inf"},
        "certify": {"r": cfg.r, "R": cfg.R, "sample": cfg.sample, "budget": 0},
        "suite": ["final_theorem"],
        "grids": {"times": cfg.times, "pairs": "all"},
        "variant": cfg.variant,
        "seed": cfg.seed,
    }


def main(cfg: CycleScan) -> int:
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(scenario(cfg), fh)
    return cli(["scan", "--scenario", fh.name, "--out", cfg.out, "--jobs", str(cfg.jobs)])


if __name__ == "__main__":
    raise SystemExit(main(parse(CycleScan, __doc__)))
