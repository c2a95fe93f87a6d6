"""Scenario files: JSON configuration for certify/verify/scan runs.

Schema (all keys except ``graph`` optional)::

    {
      "name": str,
      "graph": {"file": path} | {"generator": GeneratorSpec},
      "metric": {"kind": "default"} | {"file": csv of (u, v, rho)},
      "params": {"n": float > 2, "d": float > 0, "p": float > 1 or "inf",
                 "centers": {vertex id: {"n": .., "d": .., "p": ..}}},
      "certify": {"r": float, "R": float, "centers": [ids] | null, "sample": int | null,
                  "budget": int, "targets": {"C_S": float, "C_D": float}},
      "suite": [statement ids],
      "grids": {"times": "logspace:a:b:n" | [floats], "pairs": "all" | [[id, id], ...],
                "radii": [floats] | null},
      "variant": "main" | "normalized" | "positive_measure" | "degenerating",
      "C_cap": float | null,
      "log_shift": float,
      "out": dir,
      "seed": int
    }

Relative paths resolve against the scenario file's directory.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import geometry as geo
from . import metric as mt
from . import zoo
from .graph import load_graph
from .lab.suite import RUNNERS
from .semigroup import parse_times

SCENARIO_STATEMENTS = ("final_theorem",)
VARIANTS = ("main", "normalized", "positive_measure", "degenerating")


class ConfigError(ValueError):
    """Invalid scenario; ``field`` names the offending key."""

    def __init__(self, field: str, msg: str):
        super().__init__(f"{field}: {msg}")
        self.field = field


def _params(block: dict, where: str) -> geo.Params:
    try:
        n, d = float(block["n"]), float(block["d"])
        p = geo.parse_p(block.get("p", "inf"))
    except KeyError as exc:
        raise ConfigError(f"{where}.{exc.args[0]}", "missing") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(where, str(exc)) from None
    if not n > 2:
        raise ConfigError(f"{where}.n", f"need n > 2, got {n}")
    if not d > 0:
        raise ConfigError(f"{where}.d", f"need d > 0, got {d}")
    if not p > 1:
        raise ConfigError(f"{where}.p", f"need p in (1, inf], got {p}")
    return geo.Params(n, d, p)


@dataclass
class CertifySpec:
    r: float
    R: float
    centers: list | None = None
    sample: int | None = None
    budget: int = 1
    targets: dict = field(default_factory=dict)


@dataclass
class Scenario:
    graph: dict
    params: geo.Params
    certify: CertifySpec
    center_params: dict = field(default_factory=dict)
    metric: dict = field(default_factory=lambda: {"kind": "default"})
    suite: list = field(default_factory=lambda: ["final_theorem"])
    times: np.ndarray | None = None
    pairs: object = "all"
    radii: list | None = None
    variant: str = "main"
    C_cap: float | None = None
    log_shift: float = 0.0
    out: str | None = None
    seed: int = 0
    name: str = "scenario"
    base: Path = field(default_factory=Path.cwd)

    # --- construction -----------------------------------------------------

    @classmethod
    def from_dict(cls, raw: dict, base: Path | str = ".") -> "Scenario":
        base = Path(base)
        if not isinstance(raw, dict):
            raise ConfigError("<root>", "scenario must be a JSON object")
        if "graph" not in raw:
            raise ConfigError("graph", "missing")
        graph = raw["graph"]
        if not isinstance(graph, dict) or len(set(graph) & {"file", "generator"}) != 1:
            raise ConfigError("graph", "give exactly one of 'file' or 'generator'")
        if "file" in graph and not (base / graph["file"]).exists():
            raise ConfigError("graph.file", f"{graph['file']} does not exist")
        metric = raw.get("metric", {"kind": "default"})
        if "file" in metric and not (base / metric["file"]).exists():
            raise ConfigError("metric.file", f"{metric['file']} does not exist")
        if "file" not in metric and metric.get("kind", "default") != "default":
            raise ConfigError("metric.kind", f"unknown metric kind {metric.get('kind')!r}")
        pblock = raw.get("params", {"n": 3, "d": 1, "p": "inf"})
        params = _params(pblock, "params")
        cparams = {str(k): _params(v, f"params.centers.{k}") for k, v in pblock.get("centers", {}).items()}
        cb = raw.get("certify", {})
        try:
            cert = CertifySpec(float(cb.get("r", 1.0)), float(cb.get("R", 2.0)), cb.get("centers"),
                               cb.get("sample"), int(cb.get("budget", 1)), dict(cb.get("targets", {})))
        except (TypeError, ValueError) as exc:
            raise ConfigError("certify", str(exc)) from None
        if not (cert.r > 0 and cert.R >= 2 * cert.r):
            raise ConfigError("certify.R", f"need R >= 2r > 0, got r={cert.r}, R={cert.R}")
        if cert.sample is not None and int(cert.sample) < 1:
            raise ConfigError("certify.sample", "must be a positive count")
        suite = raw.get("suite", ["final_theorem"])
        if isinstance(suite, str):
            suite = [s for s in suite.split(",") if s]
        for s in suite:
            if s not in RUNNERS and s not in SCENARIO_STATEMENTS:
                raise ConfigError("suite", f"unknown statement id {s!r}")
        grids = raw.get("grids", {})
        times = grids.get("times")
        if times is not None:
            times = _parse_times(times, "grids.times")
        pairs = grids.get("pairs", "all")
        if pairs != "all" and (not isinstance(pairs, list) or not all(len(p) == 2 for p in pairs)):
            raise ConfigError("grids.pairs", "must be 'all' or a list of [id, id]")
        if isinstance(pairs, list) and not pairs:
            raise ConfigError("grids.pairs", "empty pair grid")
        radii = grids.get("radii")
        if radii is not None and not radii:
            raise ConfigError("grids.radii", "empty radius grid")
        variant = raw.get("variant", "main")
        if variant not in VARIANTS:
            raise ConfigError("variant", f"unknown variant {variant!r}")
        seed = raw.get("seed", 0)
        if not isinstance(seed, int) or seed < 0:
            raise ConfigError("seed", "must be a nonnegative integer")
        return cls(graph, params, cert, cparams, metric, list(suite), times, pairs, radii, variant,
                   raw.get("C_cap"), float(raw.get("log_shift", 0.0)), raw.get("out"), seed,
                   raw.get("name", "scenario"), base)

    @classmethod
    def load(cls, path: str | Path) -> "Scenario":
        path = Path(path)
        if not path.exists():
            raise ConfigError("scenario", f"{path} does not exist")
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError("scenario", f"invalid JSON: {exc}") from None
        return cls.from_dict(raw, path.parent)

    def with_times(self, spec: str | None) -> "Scenario":
        if spec is not None:
            self.times = _parse_times(spec, "--times")
        return self

    def with_suite(self, spec: str | None) -> "Scenario":
        if spec is not None:
            ids = [s for s in spec.split(",") if s]
            for s in ids:
                if s not in RUNNERS and s not in SCENARIO_STATEMENTS:
                    raise ConfigError("--suite", f"unknown statement id {s!r}")
            if not ids:
                raise ConfigError("--suite", "empty suite")
            self.suite = ids
        return self

    # --- materialization ----------------------------------------------------

    def build_graph(self):
        if "file" in self.graph:
            return load_graph(self.base / self.graph["file"])
        try:
            return zoo.generate(dict(self.graph["generator"]))
        except (TypeError, KeyError, ValueError) as exc:
            raise ConfigError("graph.generator", str(exc)) from None

    def build_metric(self, g) -> mt.IntrinsicMetric:
        if "file" in self.metric:
            return mt.load_metric_csv(g, self.base / self.metric["file"])
        return mt.default_intrinsic_metric(g)

    def params_for(self, g, x: int) -> geo.Params:
        return self.center_params.get(g.ids[x], self.params)

    def center_indices(self, g) -> list[int]:
        c = self.certify
        if c.centers is not None:
            try:
                return sorted(g.idx(str(v)) for v in c.centers)
            except (KeyError, ValueError) as exc:
                raise ConfigError("certify.centers", str(exc)) from None
        if c.sample is not None:
            k = min(int(c.sample), g.n)
            rng = np.random.default_rng(self.seed)
            return sorted(int(i) for i in rng.choice(g.n, size=k, replace=False))
        return list(range(g.n))

    def pair_indices(self, g, centers: list[int]) -> list[tuple[int, int]]:
        if self.pairs == "all":
            return [(x, y) for i, x in enumerate(centers) for y in centers[i:]]
        try:
            out = [(g.idx(str(a)), g.idx(str(b))) for a, b in self.pairs]
        except (KeyError, ValueError) as exc:
            raise ConfigError("grids.pairs", str(exc)) from None
        missing = {v for p in out for v in p} - set(centers)
        if missing:
            raise ConfigError("grids.pairs", f"vertices {sorted(g.ids[i] for i in missing)} are not certified centers")
        return out

    def require_times(self) -> np.ndarray:
        if self.times is None or len(self.times) == 0:
            raise ConfigError("grids.times", "empty time grid")
        return self.times


def _parse_times(spec, field_name: str) -> np.ndarray:
    try:
        if isinstance(spec, str):
            arr = parse_times(spec)
        else:
            arr = np.asarray([float(t) for t in spec])
    except (TypeError, ValueError) as exc:
        raise ConfigError(field_name, str(exc)) from None
    if arr.size == 0:
        raise ConfigError(field_name, "empty time grid")
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
        raise ConfigError(field_name, "times must be finite and positive")
    return arr


def dump_params(p: geo.Params) -> dict:
    return {"n": p.n, "d": p.d, "p": "inf" if p.p == math.inf else p.p}
