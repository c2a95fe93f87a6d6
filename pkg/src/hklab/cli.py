"""Command-line front end: ``hklab {generate,inspect,certify,verify,scan,report}``.

Exit codes: 0 when every selected check passes, 1 when some check fails,
2 for an invalid configuration (the failing field is named), 3 when a
conditional statement lacks a certified hypothesis.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import bounds as bd
from . import geometry as geo
from . import semigroup as sg
from . import zoo
from .graph import save_graph, load_graph, validate
from .lab import davies as dv
from .lab.suite import RUNNERS, Job, run_jobs
from .report import CHECK_COLUMNS, CheckReport, read_csv, summarize, write_csv
from .scenario import ConfigError, Scenario, dump_params
from .svg import margin_plot

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_UNCERTIFIED = 0, 1, 2, 3


# --- output helpers ----------------------------------------------------------

def _out_dir(args, scenario: Scenario | None = None) -> Path:
    if args.out:
        d = Path(args.out)
    else:
        base = Path(scenario.out) if scenario is not None and scenario.out else Path("runs")
        stamp = time.strftime("%Y%m%d-%H%M%S")
        d = base / f"{args.command}-{stamp}"
        k = 1
        while d.exists():
            k += 1
            d = base / f"{args.command}-{stamp}-{k}"
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_rows(path_stem: Path, rows: list[dict], columns: list[str], fmt: str) -> Path:
    if fmt == "json":
        path = path_stem.with_suffix(".json")
        body = [{c: r[c] for c in columns} for r in rows]
        path.write_text(json.dumps({"version": __version__, "rows": body}, indent=1, sort_keys=True,
                                   default=_json_default, allow_nan=True) + "\n")
    else:
        path = path_stem.with_suffix(".csv")
        write_csv(path, rows, columns)
    return path


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True, default=_json_default) + "\n")


def _scenario(args) -> Scenario:
    if not args.scenario:
        raise ConfigError("--scenario", "required")
    sc = Scenario.load(args.scenario)
    if getattr(args, "seed", None) is not None:
        sc.seed = args.seed
    sc.with_times(getattr(args, "times", None))
    sc.with_suite(getattr(args, "suite", None))
    return sc


# --- certification -----------------------------------------------------------

def _certify_one(task):
    g, rho, x, spec, params, seed = task
    return geo.sv_check(g, rho, x, spec.r, spec.R, params.n, params.d, spec.targets, spec.budget, seed)


def certify_centers(sc: Scenario, g, rho, centers, jobs: int) -> dict:
    tasks = [(g, rho, x, sc.certify, sc.params_for(g, x), sc.seed) for x in centers]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            ests = list(pool.map(_certify_one, tasks))
    else:
        ests = [_certify_one(t) for t in tasks]
    return dict(zip(centers, ests))


def _sv_record(g, sv, params) -> dict:
    rec = sv.to_json(g)
    rec["params"] = dump_params(params)
    rec["certified"] = bool(sv.converged and sv.passed)
    return rec


def _write_certs(out: Path, g, sc: Scenario, svs: dict) -> list[dict]:
    rows = []
    for x, sv in svs.items():
        rec = _sv_record(g, sv, sc.params_for(g, x))
        _dump_json(out / f"sv_{g.ids[x]}.json", rec)
        rows.append({"center": g.ids[x], "R1": sv.R1, "R2": sv.R2, "C_D": sv.C_D, "C_S": sv.C_S,
                     "converged": sv.converged, "passed": sv.passed, "certified": rec["certified"]})
    return rows


CERT_COLUMNS = ["center", "R1", "R2", "C_D", "C_S", "converged", "passed", "certified"]


def _load_certs(d: Path, g, sc: Scenario, centers) -> dict:
    certs = {}
    for x in centers:
        path = d / f"sv_{g.ids[x]}.json"
        if not path.exists():
            raise ConfigError("--certs", f"missing certificate {path.name}")
        rec = json.loads(path.read_text())
        params = sc.params_for(g, x)
        ok = bool(rec["certified"]) and abs(rec["R1"] - sc.certify.r) < 1e-12 and abs(rec["R2"] - sc.certify.R) < 1e-12
        certs[x] = dv.CenterCertificate(x, params, rec["R1"], rec["R2"], rec["C_D"], rec["C_S"], ok)
    return certs


def _certificates(args, sc, g, rho, out: Path) -> dict:
    centers = sc.center_indices(g)
    if getattr(args, "certs", None):
        return _load_certs(Path(args.certs), g, sc, centers)
    svs = certify_centers(sc, g, rho, centers, args.jobs)
    rows = _write_certs(out, g, sc, svs)
    write_csv(out / "certify.csv", rows, CERT_COLUMNS)
    return {x: dv.CenterCertificate.from_sv(sv, sc.params_for(g, x)) for x, sv in svs.items()}


# --- commands ----------------------------------------------------------------

def cmd_generate(args) -> int:
    if args.scenario:
        sc = Scenario.load(args.scenario)
        g = sc.build_graph()
    else:
        if not args.family:
            raise ConfigError("--family", "required without --scenario")
        size = {}
        for kv in args.size or []:
            k, _, v = kv.partition("=")
            if not v:
                raise ConfigError("--size", f"expected key=value, got {kv!r}")
            size[k] = v
        try:
            g = zoo.generate(zoo.GeneratorSpec(args.family, size, args.measure, args.truncation,
                                               args.seed or 0))
        except (KeyError, ValueError) as exc:
            raise ConfigError("generator", str(exc)) from None
    out = _out_dir(args)
    save_graph(g, out / "graph.json")
    print(f"wrote {out / 'graph.json'} ({g.n} vertices)")
    return EXIT_OK


def cmd_inspect(args) -> int:
    if args.graph:
        g = load_graph(args.graph)
        sc = None
    else:
        sc = _scenario(args)
        g = sc.build_graph()
    from .metric import default_intrinsic_metric
    met = default_intrinsic_metric(g) if sc is None else sc.build_metric(g)
    out = _out_dir(args, sc)
    viol = [str(v) for v in validate(g)]
    hs = sg.build(g)
    info = {"vertices": g.n, "edges": int(g.b.nnz // 2), "dirichlet": sorted(g.ids[i] for i in g.dirichlet),
            "violations": viol, "S": met.S, "intrinsic": bool(met.slack.min() >= -1e-12),
            "diameter": met.diameter(), "Lambda": hs.Lambda}
    params = geo.Params(3.0, 1.0, math.inf) if sc is None else sc.params
    centers = [0] if sc is None else sc.center_indices(g)
    for x in centers:
        prof = geo.profile(g, met.rho, x, params, met.S)
        _write_rows(out / f"profile_{g.ids[x]}", list(prof.rows()), prof.COLUMNS, args.format)
    if args.times or (sc is not None and sc.times is not None):
        times = sg.parse_times(args.times) if args.times else sc.times
        rows = [dict(zip(("t", "x", "y", "p"), r)) for r in sg.kernel_rows(hs, times)]
        _write_rows(out / "kernel", rows, ["t", "x", "y", "p"], args.format)
    _dump_json(out / "inspect.json", info)
    print(json.dumps(info, indent=1, sort_keys=True, default=_json_default))
    return EXIT_FAIL if viol else EXIT_OK


def cmd_certify(args) -> int:
    sc = _scenario(args)
    g = sc.build_graph()
    rho = sc.build_metric(g).rho
    out = _out_dir(args, sc)
    svs = certify_centers(sc, g, rho, sc.center_indices(g), args.jobs)
    rows = _write_certs(out, g, sc, svs)
    _write_rows(out / "certify", rows, CERT_COLUMNS, args.format)
    bad = [r["center"] for r in rows if not r["certified"]]
    print(f"certified {len(rows) - len(bad)}/{len(rows)} centers into {out}")
    if bad:
        print(f"uncertified: SV hypothesis at centers {bad}", file=sys.stderr)
        return EXIT_UNCERTIFIED
    return EXIT_OK


def _final_theorem(sc, g, hs, rho, S, certs, times) -> tuple[list[CheckReport], list[dict]]:
    pairs = sc.pair_indices(g, sorted(certs))
    reports = dv.check_final_theorem(hs, rho, S, certs, pairs, times, sc.variant, sc.log_shift)
    return reports, _bound_rows(sc, g, hs, rho, S, certs, pairs, times)


def _bound_rows(sc, g, hs, rho, S, certs, pairs, times) -> list[dict]:
    rows = []
    for x, y in pairs:
        ci, cj = certs[x], certs[y]
        for t in times:
            inp = bd.BoundInputs(x, y, float(rho[x, y]), float(t), S, ci.params, cj.params, ci.r, ci.R, cj.r,
                                 cj.R, hs.Lambda, ci.C_D, cj.C_D, ci.C_S, cj.C_S, ci.certified, cj.certified)
            try:
                rep = bd.verify_bound(hs, rho, [inp], sc.variant, sc.C_cap, sc.log_shift)[0]
            except bd.HypothesisError as exc:
                rows.append({c: math.nan for c in bd.BOUND_COLUMNS} | {
                    "x": g.ids[x], "y": g.ids[y], "t": float(t), "pass": False, "status": "uncertified"})
                continue
            rows.append(rep.row())
    return rows


def _exit_for(reports, label: str) -> int:
    unc = sorted({r.statement for r in reports if r.status == "uncertified"})
    failed = [r for r in reports if not r.ok and r.status != "uncertified"]
    if failed:
        print(f"{label}: {len(failed)} checks failed", file=sys.stderr)
        return EXIT_FAIL
    if unc:
        print(f"{label}: uncertified hypotheses for {', '.join(unc)}", file=sys.stderr)
        return EXIT_UNCERTIFIED
    return EXIT_OK


def cmd_verify(args) -> int:
    sc = _scenario(args)
    out = _out_dir(args, sc)
    reports: list[CheckReport] = []
    registry = [s for s in sc.suite if s in RUNNERS]
    if registry:
        count = args.instances
        jobs = [Job(s, sc.seed + i) for s in registry for i in range(count)]
        reports += run_jobs(jobs, args.jobs)
    if "final_theorem" in sc.suite:
        g = sc.build_graph()
        met = sc.build_metric(g)
        times = sc.require_times()
        certs = _certificates(args, sc, g, met.rho, out)
        hs = sg.build(g)
        fr, rows = _final_theorem(sc, g, hs, met.rho, met.S, certs, times)
        reports += fr
        _write_rows(out / "bounds", rows, bd.BOUND_COLUMNS, args.format)
    _write_rows(out / "checks", [r.row() for r in reports], CHECK_COLUMNS, args.format)
    summ = summarize(reports)
    summ["vacuous_pass"] = summ["counts"].get("vacuous-pass", 0)
    _dump_json(out / "summary.json", summ)
    print(f"{summ['total']} checks: {summ['counts']} -> {out}")
    return _exit_for(reports, "verify")


def cmd_scan(args) -> int:
    sc = _scenario(args)
    times = sc.require_times()
    g = sc.build_graph()
    met = sc.build_metric(g)
    out = _out_dir(args, sc)
    certs = _certificates(args, sc, g, met.rho, out)
    hs = sg.build(g)
    pairs = sc.pair_indices(g, sorted(certs))
    rows = _bound_rows(sc, g, hs, met.rho, met.S, certs, pairs, times)
    _write_rows(out / "bounds", rows, bd.BOUND_COLUMNS, args.format)
    series: dict = {}
    for r in rows:
        series.setdefault(f"{r['x']}-{r['y']}", []).append((r["t"], r["log_margin"]))
    (out / "margins.svg").write_text(margin_plot(series, f"{sc.name}: log-margin vs t ({sc.variant})"))
    statuses = [r["status"] for r in rows]
    summ = {"total": len(rows), "counts": {s: statuses.count(s) for s in sorted(set(statuses))},
            "min_log_margin": min((r["log_margin"] for r in rows if math.isfinite(r["log_margin"])), default=None)}
    _dump_json(out / "summary.json", summ)
    print(f"{len(rows)} bound evaluations: {summ['counts']} -> {out}")
    if "fail" in statuses:
        return EXIT_FAIL
    return EXIT_UNCERTIFIED if "uncertified" in statuses else EXIT_OK


def _read_rows(path: Path) -> list[dict]:
    if path.suffix == ".json":
        return json.loads(path.read_text())["rows"]
    return read_csv(path)


def cmd_report(args) -> int:
    d = Path(args.dir)
    if not d.is_dir():
        raise ConfigError("dir", f"{d} is not a directory")
    tally: dict = {}
    failures = []
    found = False
    for name in ("checks", "bounds"):
        for suffix in (".csv", ".json"):
            path = d / f"{name}{suffix}"
            if not path.exists():
                continue
            found = True
            for r in _read_rows(path):
                stmt = r.get("statement") or "bound"
                st = r["status"]
                tally.setdefault(stmt, {}).setdefault(st, 0)
                tally[stmt][st] += 1
                if st not in ("pass", "vacuous-pass"):
                    failures.append({"file": path.name, "statement": stmt, "status": st,
                                     "margin": r.get("margin", r.get("log_margin")),
                                     "where": r.get("instance") or f"{r.get('x')},{r.get('y')},t={r.get('t')}"})
    if not found:
        raise ConfigError("dir", f"no checks/bounds files in {d}")
    width = max(len(s) for s in tally)
    kinds = ["pass", "vacuous-pass", "fail", "uncertified", "skipped", "error"]
    print(f"{'statement':{width}s} " + " ".join(f"{k:>12s}" for k in kinds))
    for s in sorted(tally):
        print(f"{s:{width}s} " + " ".join(f"{tally[s].get(k, 0):12d}" for k in kinds))
    for f in failures[:50]:
        print(f"  {f['status']:12s} {f['statement']} margin={f['margin']} {f['where']}")
    out = _out_dir(args)
    _dump_json(out / "report.json", {"tally": tally, "failures": failures})
    if any(f["status"] != "uncertified" for f in failures):
        return EXIT_FAIL
    return EXIT_UNCERTIFIED if failures else EXIT_OK


# --- argument parsing ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hklab", description="Heat-kernel lab for weighted graph Laplacians.")
    p.add_argument("--version", action="version", version=f"hklab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario=True):
        if scenario:
            sp.add_argument("--scenario", help="scenario JSON file")
        sp.add_argument("--out", help="output directory (default: fresh timestamped directory)")
        sp.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes")
        sp.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")

    g = sub.add_parser("generate", help="write a zoo graph")
    common(g)
    g.add_argument("--family", choices=("path", "cycle", "lattice_box", "complete", "antitree", "random_weighted"))
    g.add_argument("--size", nargs="*", help="size parameters as key=value (n=300, gamma=1 K=40, ...)")
    g.add_argument("--measure", default="counting", choices=("counting", "normalizing"))
    g.add_argument("--truncation", action="store_true")

    i = sub.add_parser("inspect", help="validation, metric summary, profiles and optional kernel dump")
    common(i)
    i.add_argument("--graph", help="graph JSON file (instead of a scenario)")
    i.add_argument("--times", help='comma list or "logspace:a:b:n"')

    c = sub.add_parser("certify", help="certify SV constants at the scenario's centers")
    common(c)

    v = sub.add_parser("verify", help="run the selected checks")
    common(v)
    v.add_argument("--times")
    v.add_argument("--suite", help="comma-separated statement ids")
    v.add_argument("--certs", help="directory with certify outputs")
    v.add_argument("--instances", type=int, default=10, help="seeds per random-instance statement")

    s = sub.add_parser("scan", help="evaluate the assembled bound on the pair/time grid")
    common(s)
    s.add_argument("--times")
    s.add_argument("--certs")

    r = sub.add_parser("report", help="summarize an output directory")
    r.add_argument("dir")
    r.add_argument("--out", help="where to write report.json (default: fresh timestamped directory)")
    return p


COMMANDS = {"generate": cmd_generate, "inspect": cmd_inspect, "certify": cmd_certify,
            "verify": cmd_verify, "scan": cmd_scan, "report": cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
