"""Command-line front end: single checks, CSV-driven sweeps and extremal searches.

Exit codes: 0 when every verdict is PASS, 2 when any is FAIL, 3 when the
worst verdict is INCONCLUSIVE, 1 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .atoms import (
    Atom,
    AtomFamily,
    AtomicSum,
    AtomSpec,
    build_atom,
    build_step_atom,
    dilate_atom,
    square_wave_atom,
    validate_atom,
)
from .errors import HardyAtomsError
from .extremal import SearchConfig, extremize, tightness_sweep
from .funcrep import Interval
from .norms import WeightSpec, auxiliary_inequality_check
from .verify import (
    FAIL,
    INCONCLUSIVE,
    PASS,
    c2_pow,
    check_classical,
    check_log2,
    check_prop1,
    check_prop4,
    check_thm1,
    check_thm2,
    check_thm3,
    check_thm4,
)

COMMANDS = (
    "atom", "validate", "prop1", "prop4", "thm1", "thm2", "thm3", "thm4",
    "classical", "log2", "aux", "sweep", "extremize",
)
SKIP = "SKIP"

DEFAULTS = {
    "p": 0.5,
    "q": 2.0,
    "s": 0,
    "x0": 1.0,
    "x1": 2.0,
    "weight": None,
    "degree": None,
    "seed": 0,
    "rel_tol": 1e-10,
    "tol": 1e-9,
    "allow_zero_left": False,
    "thm2_literal": False,
    "constant_variant": "printed",
    "shape": "poly",
    "steps": 4,
    "n_atoms": 3,
    "A": "148.4131591025766,22026.465794806718,3269017.3724721107,485165195.4097903",
    "direction": "hardy",
    "input": None,
    "grid": None,
    "command": "prop1",
    "objective": "prop1",
    "restarts": 4,
    "max_iters": 200,
    "r_min": 1e-8,
    "output": None,
    "format": "json",
    "jobs": None,
}
BOOL_KEYS = {"allow_zero_left", "thm2_literal"}
INT_KEYS = {"s", "degree", "seed", "steps", "n_atoms", "restarts", "max_iters", "jobs"}
FLOAT_KEYS = {"p", "x0", "x1", "rel_tol", "tol", "r_min"}
SORT_KEYS = ("p", "q", "s", "x0", "x1", "seed")
CSV_COLUMNS = (
    "p", "q", "s", "x0", "x1", "seed", "check_id", "lhs", "bound", "ratio",
    "strict", "quad_error", "verdict", "note",
)


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- configuration


def parse_q(v) -> float:
    if isinstance(v, str) and v.strip().lower() in ("inf", "infinity", "oo"):
        return math.inf
    try:
        return float(v)
    except (TypeError, ValueError):
        raise UsageError(f"q must be a number in [1, inf] or 'inf', got {v!r}") from None


def _coerce(key: str, v):
    if v is None:
        return None
    try:
        if key == "q":
            return parse_q(v)
        if key in BOOL_KEYS:
            if isinstance(v, str):
                return v.strip().lower() in ("1", "true", "yes")
            return bool(v)
        if key in INT_KEYS:
            return int(v)
        if key in FLOAT_KEYS:
            return float(v)
    except (TypeError, ValueError):
        raise UsageError(f"parameter {key!r} has invalid value {v!r}") from None
    return v


def resolve_config(command: str, flags: dict, config_file: str | None) -> dict:
    """Defaults, then the JSON config file, then explicit flags."""
    cfg = dict(DEFAULTS)
    if config_file:
        try:
            data = json.loads(Path(config_file).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file {config_file}: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        data = {k.replace("-", "_"): v for k, v in data.items()}
        unknown = sorted(set(data) - set(DEFAULTS) - {"command_name"})
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}; allowed: {', '.join(sorted(DEFAULTS))}")
        cfg.update({k: _coerce(k, v) for k, v in data.items() if k in DEFAULTS})
    cfg.update({k: _coerce(k, v) for k, v in flags.items() if v is not None})
    cfg["command_name"] = command
    return cfg


def _weight(cfg: dict, default: WeightSpec) -> WeightSpec:
    w = cfg["weight"]
    if w is None:
        return default
    if w == "unit":
        return WeightSpec()
    if w == "power":
        return WeightSpec.power(cfg["p"])
    if isinstance(w, str) and w.startswith("power:"):
        return WeightSpec.power(float(w.split(":", 1)[1]))
    raise UsageError(f"weight must be 'unit', 'power' (x**p) or 'power:<alpha>', got {w!r}")


def _spec(cfg: dict, weight: WeightSpec, *, s=None, log_moment=False) -> AtomSpec:
    p, q = cfg["p"], cfg["q"]
    if not 0 < p <= 1:
        raise UsageError(f"--p must lie in (0, 1], got {p}")
    if not (q == math.inf or q >= 1):
        raise UsageError(f"--q must lie in [1, inf], got {q}")
    if not p < q:
        raise UsageError(f"atoms need p < q, got p={p}, q={q}")
    x0, x1 = cfg["x0"], cfg["x1"]
    if not 0 <= x0 < x1:
        raise UsageError(f"need 0 <= x0 < x1, got x0={x0}, x1={x1}")
    if x0 == 0 and not cfg["allow_zero_left"]:
        raise UsageError("x0 = 0 needs --allow-zero-left")
    return AtomSpec(
        p, q, cfg["s"] if s is None else s, Interval(x0, x1), weight, log_moment, cfg["allow_zero_left"]
    )


def _make_atom(cfg: dict, spec: AtomSpec, seed: int | None = None) -> Atom:
    seed = cfg["seed"] if seed is None else seed
    shape = cfg["shape"]
    if shape == "squarewave":
        return square_wave_atom(spec)
    if shape == "steps":
        return build_step_atom(spec, cfg["steps"], seed)
    if shape != "poly":
        raise UsageError(f"--shape must be poly, steps or squarewave, got {shape!r}")
    degree = cfg["degree"] if cfg["degree"] is not None else spec.n_constraints + 1
    return build_atom(spec, degree, seed)


def _make_sum(cfg: dict, spec: AtomSpec) -> AtomicSum:
    rng = np.random.default_rng(cfg["seed"])
    lams = rng.standard_normal(cfg["n_atoms"])
    entries = []
    for k, lam in enumerate(lams):
        a = _make_atom(cfg, spec, cfg["seed"] + k)
        if k and spec.weight.kind == "unit":
            a = dilate_atom(a, 2.0**-k)
        entries.append((float(lam), a))
    return AtomicSum(tuple(entries), spec.p)


# ---------------------------------------------------------------- commands


def _report_row(cfg: dict, d: dict) -> dict:
    row = {k: cfg.get(k) for k in SORT_KEYS}
    row.update(d)
    return row


def _validation_dict(check_id: str, rep) -> dict:
    d = rep.to_dict()
    d["check_id"] = check_id
    return d


def run_command(cfg: dict) -> list[dict]:
    """Execute one command and return its report dicts (each has ``verdict``)."""
    cmd = cfg["command_name"]
    if cmd == "atom":
        a = _make_atom(cfg, _spec(cfg, _weight(cfg, WeightSpec())))
        rep = validate_atom(a.fn, a.spec, cfg["tol"])
        return [{"check_id": "atom", "verdict": rep.verdict, "atom": a.to_dict(), "validation": rep.to_dict()}]
    if cmd == "validate":
        if cfg["input"]:
            try:
                data = json.loads(Path(cfg["input"]).read_text())
                # accept a bare atom or a report file written by the atom command
                if "reports" in data:
                    data = data["reports"][0]["atom"]
                a = Atom.from_dict(data)
            except (OSError, KeyError, IndexError, TypeError, json.JSONDecodeError) as exc:
                raise UsageError(f"cannot read atom from {cfg['input']}: {exc}") from None
        else:
            a = _make_atom(cfg, _spec(cfg, _weight(cfg, WeightSpec())))
        return [_validation_dict("validate", validate_atom(a.fn, a.spec, cfg["tol"]))]
    if cmd == "prop1":
        return [check_prop1(_make_atom(cfg, _spec(cfg, WeightSpec())), cfg["rel_tol"]).to_dict()]
    if cmd == "prop4":
        _prop4_domain(cfg)
        a = _make_atom(cfg, _spec(cfg, WeightSpec.power(cfg["p"])))
        return [check_prop4(a, cfg["rel_tol"], cfg["constant_variant"]).to_dict()]
    if cmd == "thm1":
        return [check_thm1(_make_sum(cfg, _spec(cfg, WeightSpec(), s=0)), cfg["rel_tol"]).to_dict()]
    if cmd == "thm2":
        _prop4_domain(cfg)
        s = _make_sum(cfg, _spec(cfg, WeightSpec.power(cfg["p"]), s=0))
        out = [check_thm2(s, cfg["rel_tol"], False, cfg["constant_variant"]).to_dict()]
        if cfg["thm2_literal"]:
            out.append(check_thm2(s, cfg["rel_tol"], True, cfg["constant_variant"]).to_dict())
        return out
    if cmd == "thm3":
        if not cfg["q"] > 1:
            raise UsageError("thm3 requires 1 < q <= inf")
        a = _make_atom(cfg, _spec(cfg, WeightSpec(), log_moment=True))
        return [_validation_dict("thm3", check_thm3(a, cfg["tol"]))]
    if cmd == "thm4":
        if cfg["s"] < 1:
            raise UsageError("thm4 requires s >= 1")
        if cfg["q"] == 1 and cfg["p"] == 1:
            raise UsageError("thm4 with q = 1 requires p < 1")
        a = _make_atom(cfg, _spec(cfg, WeightSpec.power(cfg["p"])))
        return [_validation_dict("thm4", check_thm4(a, cfg["tol"]))]
    if cmd == "classical":
        p = cfg["p"]
        if not p > 0 or p == 1:
            raise UsageError(f"classical requires p > 0 and p != 1, got {p}")
        grid = [float(v) for v in str(cfg["A"]).split(",")]
        if any(not A > 1 for A in grid):
            raise UsageError("classical requires every A > 1")
        return [check_classical(p, A, cfg["direction"], cfg["rel_tol"]).to_dict() for A in grid]
    if cmd == "log2":
        spec = _spec({**cfg, "p": 1.0, "q": math.inf}, WeightSpec(), s=0)
        return [check_log2(_make_atom(cfg, spec)).to_dict()]
    if cmd == "aux":
        x0, x1, p = cfg["x0"], cfg["x1"], cfg["p"]
        if not (0 < x0 < x1 and p > 0):
            raise UsageError("aux requires 0 < x0 < x1 and p > 0")
        r = auxiliary_inequality_check(x0, x1, p)
        return [
            {
                "check_id": f"aux[x0={x0!r},x1={x1!r},p={p!r}]",
                "lhs10": r.lhs10, "rhs10": r.rhs10, "lhs11": _json_float(r.lhs11), "rhs11": _json_float(r.rhs11),
                "margin": r.margin, "verdict": PASS if r.passed else FAIL,
            }
        ]
    if cmd == "extremize":
        return _run_extremize(cfg)
    raise UsageError(f"unknown command {cmd!r}")


def _json_float(v: float):
    return None if math.isnan(v) else v


def _prop4_domain(cfg: dict):
    try:
        c2_pow(cfg["p"], cfg["q"])
    except HardyAtomsError as exc:
        raise UsageError(str(exc)) from None


def _search_config(cfg: dict) -> SearchConfig:
    obj = cfg["objective"]
    p, q = (1.0, math.inf) if obj == "log2" else (cfg["p"], cfg["q"])
    weight = WeightSpec.power(p) if obj == "prop4" else WeightSpec()
    family = AtomFamily("poly", cfg["degree"]) if cfg["shape"] == "poly" and cfg["degree"] else AtomFamily("steps", cfg["steps"])
    spec = AtomSpec(p, q, cfg["s"], Interval(0.5, 1.0), weight)
    return SearchConfig(
        spec, family, cfg["restarts"], cfg["max_iters"], cfg["seed"], obj, cfg["r_min"],
        rel_tol=cfg["rel_tol"], constant_variant=cfg["constant_variant"],
    )


def _run_extremize(cfg: dict) -> list[dict]:
    if cfg["grid"]:
        pts = [(float(r["p"]), parse_q(r["q"])) for r in _read_grid(cfg["grid"])]
        template = _search_config({**cfg, "p": 1.0, "q": math.inf})
        res = tightness_sweep(pts, template, _jobs(cfg))
        cfg["_sweep_csv"] = res.to_csv()
        cfg["_plot"] = res.plot_data()
        rows = [
            {**row, "check_id": f"extremize[{cfg['objective']},p={row['p']!r},q={row['q']!r}]",
             "verdict": FAIL if row["violations"] else PASS}
            for row in res.rows
        ]
        rows += [{**sk, "check_id": "extremize[skipped]", "verdict": SKIP} for sk in res.skipped]
        return rows
    sc = _search_config(cfg)
    res = extremize(sc, _jobs(cfg))
    cfg["_plot"] = "# iter best_value\n" + "".join(f"{i} {v!r}\n" for i, v in res.trajectory)
    return [
        {
            "check_id": f"extremize[{sc.objective},p={sc.spec.p!r},q={sc.spec.q!r}]",
            "best_value": res.best_value,
            "bound": res.bound,
            "tightness": res.tightness,
            "r": res.r,
            "evaluations": res.evaluations,
            "violations": res.violations,
            "inconclusive": res.inconclusive,
            "best_atom": res.best_atom.to_dict(),
            "verdict": FAIL if res.violations else PASS,
        }
    ]


# ---------------------------------------------------------------- sweeps


def _read_grid(path: str) -> list[dict]:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise UsageError(f"cannot read grid file {path}: {exc}") from None
    if not rows:
        raise UsageError(f"grid file {path} has no data rows")
    bad = sorted(set(rows[0]) - set(DEFAULTS))
    if bad:
        raise UsageError(f"grid file has unknown columns: {', '.join(bad)}")
    return rows


def _sweep_row(args: tuple[dict, dict]) -> list[dict]:
    base, row = args
    cfg = dict(base)
    cfg.update({k: _coerce(k, v) for k, v in row.items() if v not in (None, "")})
    cfg["command_name"] = base["command"]
    try:
        reports = run_command(cfg)
    except (UsageError, HardyAtomsError) as exc:
        return [_report_row(cfg, {"check_id": cfg["command_name"], "verdict": SKIP, "note": str(exc)})]
    return [_report_row(cfg, r) for r in reports]


def _jobs(cfg: dict) -> int:
    return cfg["jobs"] if cfg["jobs"] else (os.cpu_count() or 1)


def run_sweep(cfg: dict) -> list[dict]:
    if not cfg["grid"]:
        raise UsageError("sweep requires --grid <csv file>")
    if cfg["command"] not in COMMANDS or cfg["command"] in ("sweep", "extremize", "atom"):
        raise UsageError(f"sweep --command must be a check command, got {cfg['command']!r}")
    rows = _read_grid(cfg["grid"])
    tasks = [(cfg, r) for r in rows]
    jobs = _jobs(cfg)
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_sweep_row, tasks))
    else:
        results = [_sweep_row(t) for t in tasks]
    flat = [r for rs in results for r in rs]
    return sorted(flat, key=_sort_key)


def _sort_key(r: dict):
    return tuple(math.inf if r.get(k) is None else float(r[k]) for k in SORT_KEYS) + (r.get("check_id", ""),)


def sweep_csv(reports: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in reports:
        w.writerow({k: _csv_value(r.get(k, "")) for k in CSV_COLUMNS})
    return buf.getvalue()


def _csv_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "inf" if v == math.inf else repr(v)
    return str(v)


# ---------------------------------------------------------------- output


def exit_code(verdicts) -> int:
    vs = [v for v in verdicts if v != SKIP]
    if FAIL in vs:
        return 2
    if INCONCLUSIVE in vs:
        return 3
    return 0


def _public_config(cfg: dict) -> dict:
    return {k: ("inf" if v == math.inf else v) for k, v in sorted(cfg.items()) if not k.startswith("_")}


def _summary_line(r: dict) -> str:
    parts = [r.get("verdict", "?"), r.get("check_id", "")]
    if "lhs" in r and "bound" in r:
        parts.append(f"lhs={r['lhs']:.10g} bound={r['bound']:.10g}")
    elif "tightness" in r:
        parts.append(f"tightness={r['tightness']:.6g} evaluations={r.get('evaluations', 0)}")
    elif "note" in r:
        parts.append(str(r["note"]))
    return " ".join(str(p) for p in parts)


def _write_outputs(cfg: dict, reports: list[dict]):
    out = cfg["output"]
    if not out:
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    if cfg["format"] == "csv":
        text = cfg.get("_sweep_csv") or sweep_csv([_report_row(cfg, r) if "p" not in r else r for r in reports])
    else:
        doc = {"version": __version__, "config": _public_config(cfg), "reports": reports}
        text = json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n"
    path.write_text(text)
    plot = cfg.get("_plot") or _plot_data(reports)
    if plot:
        path.with_suffix(".dat").write_text(plot)


def _plot_data(reports: list[dict]) -> str | None:
    rows = [r for r in reports if isinstance(r.get("metadata"), dict) and "A" in r["metadata"]]
    if not rows:
        return None
    return "# A quotient\n" + "".join(f"{r['metadata']['A']!r} {r['lhs']!r}\n" for r in rows)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, float) and math.isinf(o):
        return "inf"
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hardyatoms", description="Verify Hardy-operator bounds on atoms.")
    sub = ap.add_subparsers(dest="cmd", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON file of parameters; flags override it")
        sp.add_argument("--p", type=float)
        sp.add_argument("--q", type=str, help="number or 'inf'")
        sp.add_argument("--s", type=int)
        sp.add_argument("--x0", type=float)
        sp.add_argument("--x1", type=float)
        sp.add_argument("--weight", help="unit, power (x**p) or power:<alpha>")
        sp.add_argument("--degree", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--rel-tol", dest="rel_tol", type=float)
        sp.add_argument("--tol", type=float)
        sp.add_argument("--allow-zero-left", dest="allow_zero_left", action="store_true", default=None)
        sp.add_argument("--thm2-literal", dest="thm2_literal", action="store_true", default=None)
        sp.add_argument("--constant-variant", dest="constant_variant", choices=("printed", "derived"))
        sp.add_argument("--shape", choices=("poly", "steps", "squarewave"))
        sp.add_argument("--steps", type=int)
        sp.add_argument("--n-atoms", dest="n_atoms", type=int)
        sp.add_argument("--A", dest="A", help="comma-separated family parameters for classical")
        sp.add_argument("--direction", choices=("hardy", "dual"))
        sp.add_argument("--input", help="atom JSON file for validate")
        sp.add_argument("--grid", help="CSV grid file with a header row")
        sp.add_argument("--command", help="check to run per grid row (sweep)")
        sp.add_argument("--objective", choices=("prop1", "prop4", "log2"))
        sp.add_argument("--restarts", type=int)
        sp.add_argument("--max-iters", dest="max_iters", type=int)
        sp.add_argument("--r-min", dest="r_min", type=float)
        sp.add_argument("--output")
        sp.add_argument("--format", choices=("json", "csv"))
        sp.add_argument("--jobs", type=int)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    flags = {k: v for k, v in vars(ns).items() if k not in ("cmd", "config")}
    try:
        cfg = resolve_config(ns.cmd, flags, ns.config)
        reports = run_sweep(cfg) if ns.cmd == "sweep" else run_command(cfg)
        _write_outputs(cfg, reports)
    except (UsageError, HardyAtomsError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    for r in reports:
        print(_summary_line(r))
    verdicts = [r["verdict"] for r in reports]
    if ns.cmd == "sweep":
        counts = {v: verdicts.count(v) for v in (PASS, FAIL, INCONCLUSIVE, SKIP)}
        print(" ".join(f"{k}={v}" for k, v in counts.items()))
    return exit_code(verdicts)


if __name__ == "__main__":
    sys.exit(main())
