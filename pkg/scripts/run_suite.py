"""Run the random-instance verification suite and write checks.csv / summary.json."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from _config import parse

from hklab.lab import RUNNERS, default_jobs, run_jobs
from hklab.report import summarize, write_checks


@dataclass
class SuiteConfig:
    statements: list = field(default_factory=lambda: list(RUNNERS))
    seed: int = 0
    jobs: int = os.cpu_count() or 1
    out: str = "runs/suite"


def main(cfg: SuiteConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    reports = run_jobs(default_jobs(cfg.statements, cfg.seed), cfg.jobs)
    write_checks(out / "checks.csv", reports)
    summ = summarize(reports)
    (out / "summary.json").write_text(json.dumps(summ, indent=1, default=str))
    print(f"{summ['total']} checks: {summ['counts']} -> {out}")
    return 0 if summ["all_passed"] else 1


if __name__ == "__main__":
    raise SystemExit(main(parse(SuiteConfig, __doc__)))
