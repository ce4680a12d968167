"""Command-line front end for parameter sweeps.

``permadyn <command> [--config cfg.json] [--out file.csv|file.json] [--threads K] [--resume DIR]``

Commands: ``lmg-theory``, ``lmg-finite``, ``ground``, ``floquet``,
``oracle-check``. Every JSON key has a matching flag; flags override the
file. Exit codes: 0 success, 1 some row failed, 2 bad configuration.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, PermadynError

log = logging.getLogger("permadyn")

COMMANDS = ("lmg-theory", "lmg-finite", "ground", "floquet", "oracle-check")
MODEL_KEYS = ("coupling", "field", "collective_rate", "local_rate")
DEFAULTS = {
    "coupling": 3.0,
    "field": 0.0,
    "collective_rate": 2.0,
    "local_rate": 1.0,
    "sweep": None,
    "N": None,
    "initial": [0.3, 0.0, 0.8],
    "solver": {},
    "threshold": 1e-8,
    "out": None,
    "format": None,
    "threads": None,
    "resume": None,
}
SOLVER_KEYS = ("tol", "maxiter", "matrix_free", "method", "rtol", "atol", "tol_unit")
# keys that do not change results and stay out of the config hash
RUNTIME_KEYS = ("out", "format", "threads", "resume")


# --------------------------------------------------------------------------
# configuration


def _float(v, name):
    try:
        x = float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number, got {v!r}") from None
    if not math.isfinite(x):
        raise ConfigError(f"{name} must be finite")
    return x


def resolve_config(command: str, file_cfg: dict, overrides: dict) -> dict:
    """Merge defaults, file and flag values; validate; return a plain dict."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    cfg = json.loads(json.dumps(DEFAULTS))
    if command == "ground":
        cfg["coupling"] = -1.0
    if command == "oracle-check":
        cfg["field"] = 0.5
    unknown = set(file_cfg) - set(DEFAULTS) - {"command"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if file_cfg.get("command", command) != command:
        raise ConfigError(f"config is for {file_cfg['command']!r}, not {command!r}")
    for src in (file_cfg, overrides):
        for k, v in src.items():
            if k == "command" or v is None:
                continue
            if k in ("sweep", "solver") and isinstance(v, dict):
                cfg[k] = dict(cfg[k] or {}, **v)
            else:
                cfg[k] = v
    for k in MODEL_KEYS:
        cfg[k] = _float(cfg[k], k)
    if not cfg["local_rate"] > 0:
        raise ConfigError("local_rate must be positive")
    if cfg["collective_rate"] < 0:
        raise ConfigError("collective_rate must be non-negative")

    sw = cfg["sweep"]
    if sw is not None:
        if not isinstance(sw, dict):
            raise ConfigError("sweep must be an object")
        extra = set(sw) - {"param", "min", "max", "points"}
        if extra:
            raise ConfigError(f"unknown sweep keys: {sorted(extra)}")
        if sw.get("param") not in MODEL_KEYS:
            raise ConfigError(f"sweep param must be one of {MODEL_KEYS}")
        lo, hi = _float(sw.get("min"), "sweep.min"), _float(sw.get("max"), "sweep.max")
        pts = sw.get("points", 1)
        if not isinstance(pts, int) or isinstance(pts, bool) or pts < 1:
            raise ConfigError("sweep.points must be an integer >= 1")
        cfg["sweep"] = {"param": sw["param"], "min": lo, "max": hi, "points": pts}

    Ns = cfg["N"]
    if Ns is None:
        Ns = {"lmg-finite": [20], "ground": [20], "oracle-check": [2, 3, 4]}.get(command)
    if Ns is not None:
        if isinstance(Ns, (int, str)):
            Ns = [Ns]
        try:
            Ns = [int(str(n)) for n in Ns]
        except ValueError:
            raise ConfigError("N must be a list of positive integers") from None
        if any(n < 1 for n in Ns):
            raise ConfigError("N values must be positive integers")
        if command == "ground" and any(n % 2 for n in Ns):
            raise ConfigError("ground requires even N")
        if command == "oracle-check" and any(n > 4 for n in Ns):
            raise ConfigError("oracle-check supports N <= 4")
    cfg["N"] = Ns

    init = cfg["initial"]
    if not isinstance(init, (list, tuple)) or len(init) != 3:
        raise ConfigError("initial must be a 3-vector")
    cfg["initial"] = [_float(x, "initial") for x in init]
    if float(np.linalg.norm(cfg["initial"])) > 1.0:
        raise ConfigError("initial point lies outside the Bloch ball")

    solver = cfg["solver"] or {}
    extra = set(solver) - set(SOLVER_KEYS)
    if extra:
        raise ConfigError(f"unknown solver keys: {sorted(extra)}")
    if solver.get("method", "auto") not in ("auto", "cg", "diagonal"):
        raise ConfigError("solver.method must be auto, cg or diagonal")
    cfg["solver"] = solver
    cfg["threshold"] = _float(cfg["threshold"], "threshold")
    fmt = cfg["format"]
    if fmt is None and cfg["out"]:
        fmt = "json" if str(cfg["out"]).endswith(".json") else "csv"
    cfg["format"] = fmt or "csv"
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError("format must be csv or json")
    if cfg["threads"] is not None:
        if not isinstance(cfg["threads"], int) or cfg["threads"] < 1:
            raise ConfigError("threads must be a positive integer")
    cfg["command"] = command
    return cfg


def config_hash(cfg: dict) -> str:
    keep = {k: v for k, v in cfg.items() if k not in RUNTIME_KEYS}
    return hashlib.sha256(json.dumps(keep, sort_keys=True).encode()).hexdigest()[:16]


def sweep_points(cfg: dict):
    """Model parameter dicts, one per sweep value, in order."""
    base = {k: cfg[k] for k in MODEL_KEYS}
    sw = cfg["sweep"]
    if sw is None:
        return [base]
    return [dict(base, **{sw["param"]: float(v)})
            for v in np.linspace(sw["min"], sw["max"], sw["points"])]


def build_jobs(cfg: dict):
    points = sweep_points(cfg)
    if cfg["N"] is None:
        return [dict(pt) for pt in points]
    return [dict(pt, N=n) for n in cfg["N"] for pt in points]


# --------------------------------------------------------------------------
# row runners (top level so worker processes can import them)


def _params(job):
    from .lmg import LMGParams
    return LMGParams(job["coupling"], job["field"], job["collective_rate"], job["local_rate"])


def _settings(solver):
    from .meanfield import MeanFieldSettings
    kw = {k: solver[k] for k in ("rtol", "atol") if k in solver}
    return MeanFieldSettings(**kw)


def row_lmg_theory(job, cfg):
    from .lmg import analytic_mutual_info, drift_system
    from .meanfield import mean_field_analysis
    p = _params(job)
    row = {"Gamma_over_gamma": p.collective_rate / p.local_rate}
    res = mean_field_analysis(drift_system(p), cfg["initial"], _settings(cfg["solver"]))
    m = res.averages.mean_bloch
    row.update(
        mutual_info=res.mutual_info,
        mutual_info_analytic=analytic_mutual_info(p) if p.field == 0.0 else None,
        entropy_of_mean=res.averages.entropy_of_mean,
        mean_entropy=res.averages.mean_entropy,
        m_x=float(m[0]), m_y=float(m[1]), m_z=float(m[2]),
        m_xy=float(math.hypot(m[0], m[1])),
        attractor=res.report.label,
        period=res.report.period if res.report.label == "limit_cycle" else None,
    )
    return row


def _checkpoint_path(resume, job):
    key = json.dumps({k: job[k] for k in sorted(job)}, sort_keys=True)
    return Path(resume) / f"state-{hashlib.sha256(key.encode()).hexdigest()[:16]}.ckpt"


def row_lmg_finite(job, cfg):
    from . import dicke
    from .checkpoint import load_state, save_state
    p = _params(job)
    N = job["N"]
    s = cfg["solver"]
    method = s.get("method", "auto")
    if method == "auto":
        method = "diagonal" if p.field == 0.0 else "cg"
    x0 = None
    ck = _checkpoint_path(cfg["resume"], job) if cfg["resume"] and method == "cg" else None
    if ck is not None and ck.exists():
        prev, prev_p = load_state(ck)
        if prev.N == N and prev_p == p:
            x0 = prev.to_vector()
    state = dicke.solve(p, N, method=method, tol=s.get("tol", 1e-9), maxiter=s.get("maxiter"),
                        matrix_free=s.get("matrix_free"), x0=x0)
    if ck is not None:
        ck.parent.mkdir(parents=True, exist_ok=True)
        save_state(ck, state, p)
    r = dicke.analyze_state(state, p)
    return {
        "Gamma_over_gamma": p.collective_rate / p.local_rate,
        "mutual_info": r.mutual_info,
        "total_entropy_per_unit": r.total_entropy_per_unit,
        "local_entropy": r.local_entropy,
        "m_x": float(r.magnetization[0]), "m_y": float(r.magnetization[1]),
        "m_z": float(r.magnetization[2]), "m_xy": r.m_xy,
        "method": r.method, "iterations": r.iterations, "residual": r.residual,
    }


def row_ground(job, cfg):
    from .ground_state import ground_state_mutual_info
    r = ground_state_mutual_info(job["coupling"], job["field"], job["N"])
    return {
        "h_over_J": job["field"] / abs(job["coupling"]),
        "mutual_info": r.mutual_info_per_unit,
        "energy": r.energy,
        "m_x": float(r.magnetization[0]), "m_z": float(r.magnetization[2]),
    }


def row_floquet(job, cfg):
    from .floquet import floquet_analysis
    from .lmg import drift_system
    from .meanfield import find_attractor
    p = _params(job)
    sys_ = drift_system(p)
    rep = find_attractor(sys_, cfg["initial"], _settings(cfg["solver"]))
    kw = {k: cfg["solver"][k] for k in ("rtol", "atol", "tol_unit") if k in cfg["solver"]}
    fr = floquet_analysis(sys_, rep, **kw)
    row = {
        "Gamma_over_gamma": p.collective_rate / p.local_rate,
        "period": fr.period,
        "unit_multiplier_error": fr.unit_multiplier_error,
        "is_hyperbolic": fr.is_hyperbolic,
        "is_attractive": fr.is_attractive,
        "det_identity_error": fr.det_identity_error,
    }
    for k, mu in enumerate(fr.multipliers):
        row[f"mu{k}_re"] = float(mu.real)
        row[f"mu{k}_im"] = float(mu.imag)
        row[f"mu{k}_abs"] = float(abs(mu))
    return row


def row_oracle_check(job, cfg):
    from . import dicke, oracle
    p = _params(job)
    N = job["N"]
    full = oracle.brute_force_steady_state(p, N)
    st = dicke.solve(p, N, method="cg", tol=cfg["solver"].get("tol", 1e-9))
    r = dicke.analyze_state(st, p)
    dev = float(np.max(np.abs(oracle.dicke_to_full(st) - full.rho)))
    d_mi = abs(r.mutual_info - oracle.brute_force_mutual_info(full))
    d_s = abs(dicke.total_entropy(st) - oracle.brute_force_entropy(full))
    row = {"max_state_deviation": dev, "d_mutual_info": d_mi, "d_total_entropy": d_s,
           "diagonal_deviation": None}
    worst = max(dev, d_mi, d_s)
    if p.field == 0.0:
        diag = dicke.steady_state_diagonal(p, N)
        dd = max(float(np.max(np.abs(diag.populations(j2) - st.populations(j2)))) for j2 in diag.blocks)
        row["diagonal_deviation"] = dd
        worst = max(worst, dd)
    row["passed"] = bool(worst < cfg["threshold"])
    return row


RUNNERS = {
    "lmg-theory": row_lmg_theory,
    "lmg-finite": row_lmg_finite,
    "ground": row_ground,
    "floquet": row_floquet,
    "oracle-check": row_oracle_check,
}


def run_job(args):
    """Evaluate one row; errors become an ``error`` column instead of propagating."""
    job, cfg = args
    row = dict(job)
    try:
        row.update(RUNNERS[cfg["command"]](job, cfg))
        row["error"] = ""
        if row.get("passed") is False:
            row["error"] = "threshold exceeded"
    except (PermadynError, ArithmeticError, ValueError, MemoryError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def run(cfg: dict):
    jobs = build_jobs(cfg)
    threads = cfg["threads"] or os.cpu_count() or 1
    tasks = [(job, cfg) for job in jobs]
    if threads == 1 or len(jobs) == 1:
        return [run_job(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
        # map preserves input order regardless of completion order
        return list(pool.map(run_job, tasks))


# --------------------------------------------------------------------------
# output


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v) + 0.0)  # no negative zero
    return str(v)


def format_rows(rows, cfg, fmt: str) -> str:
    meta = {"tool": "permadyn", "version": __version__, "command": cfg["command"],
            "config_hash": config_hash(cfg)}
    if fmt == "json":
        clean = [{k: (float(v) if isinstance(v, np.floating) else v) for k, v in r.items()}
                 for r in rows]
        return json.dumps({"meta": meta, "rows": clean}, indent=2, sort_keys=False) + "\n"
    columns = []
    for r in rows:
        for k in r:
            if k not in columns:
                columns.append(k)
    columns = [c for c in columns if c != "error"] + ["error"]
    buf = io.StringIO()
    for k, v in meta.items():
        buf.write(f"# {k}: {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="permadyn", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"permadyn {__version__}")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON config file")
    ap.add_argument("--out", help="output path (.csv or .json); stdout if omitted")
    ap.add_argument("--format", choices=("csv", "json"))
    ap.add_argument("--threads", type=int, help="worker processes (default: all cores)")
    ap.add_argument("--resume", help="checkpoint directory for CG warm starts")
    ap.add_argument("--coupling", type=float)
    ap.add_argument("--field", type=float)
    ap.add_argument("--collective-rate", dest="collective_rate", type=float)
    ap.add_argument("--local-rate", dest="local_rate", type=float)
    ap.add_argument("--sweep-param", choices=MODEL_KEYS)
    ap.add_argument("--sweep-min", type=float)
    ap.add_argument("--sweep-max", type=float)
    ap.add_argument("--sweep-points", type=int)
    ap.add_argument("--N", dest="N", help="comma-separated sizes, e.g. 20,40")
    ap.add_argument("--initial", help="comma-separated starting Bloch vector")
    ap.add_argument("--threshold", type=float)
    ap.add_argument("--tol", type=float)
    ap.add_argument("--maxiter", type=int)
    ap.add_argument("--method", choices=("auto", "cg", "diagonal"))
    ap.add_argument("--matrix-free", dest="matrix_free", action="store_true", default=None)
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _overrides(ns) -> dict:
    o = {k: getattr(ns, k) for k in MODEL_KEYS + ("out", "format", "threads", "resume", "threshold")}
    sweep = {k: getattr(ns, f"sweep_{k}") for k in ("param", "min", "max", "points")}
    sweep = {k: v for k, v in sweep.items() if v is not None}
    if sweep:
        o["sweep"] = sweep
    if ns.N is not None:
        o["N"] = [s for s in ns.N.split(",") if s.strip()]
    if ns.initial is not None:
        o["initial"] = [s for s in ns.initial.split(",")]
    solver = {k: getattr(ns, k) for k in ("tol", "maxiter", "method", "matrix_free")}
    solver = {k: v for k, v in solver.items() if v is not None}
    if solver:
        o["solver"] = solver
    return o


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        file_cfg = {}
        if ns.config:
            try:
                file_cfg = json.loads(Path(ns.config).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
            if not isinstance(file_cfg, dict):
                raise ConfigError("config must be a JSON object")
        cfg = resolve_config(ns.command, file_cfg, _overrides(ns))
    except ConfigError as exc:
        print(f"permadyn: config error: {exc}", file=sys.stderr)
        return 2
    rows = run(cfg)
    text = format_rows(rows, cfg, cfg["format"])
    if cfg["out"]:
        Path(cfg["out"]).write_text(text)
    else:
        sys.stdout.write(text)
    failed = [r for r in rows if r["error"]]
    for r in failed:
        log.error("row failed: %s", r["error"])
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
