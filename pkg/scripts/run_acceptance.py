"""Run the acceptance suite and print the per-criterion PASS/FAIL lines."""
from __future__ import annotations

import subprocess
import sys
from dataclasses import dataclass
from pathlib import Path

from _config import parse

ROOT = Path(__file__).resolve().parents[1]


@dataclass
class AcceptanceConfig:
    fast: bool = False  # skip the end-to-end criteria 10 and 13


def main(cfg: AcceptanceConfig) -> int:
    cmd = [sys.executable, "-m", "pytest", "-q", "-s", str(ROOT / "tests" / "test_acceptance.py"), "-k", "test_c"]
    if cfg.fast:
        cmd += ["-m", "not slow"]
    proc = subprocess.run(cmd, capture_output=True, text=True, cwd=ROOT)
    lines = sorted(ln.strip() for ln in proc.stdout.splitlines() if ln.strip().startswith("CRITERION"))
    print("\n".join(lines))
    print(proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr)
    return proc.returncode


if __name__ == "__main__":
    raise SystemExit(main(parse(AcceptanceConfig, __doc__)))
