"""Command-line front end: ``hillnls {list,run,report,sweep}``.

Exit codes: 0 success (for ``run``, all expectations met), 1 expectations
failed, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import copy
import csv
import datetime as _dt
import hashlib
import itertools
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .classical import IntegrationError, estimate_delta0, export_solution_csv, solve_fundamental
from .diagnostics import (
    FitError,
    accumulate_phase,
    build_series,
    cauchy_rates,
    decay_fit,
    estimate_delta1,
    fit_loglog,
    write_series_csv,
)
from .grid import AliasingError, load_field_csv, relative_difference, resample, save_field_csv
from .nls import evolve
from .scenarios import ConfigError, apply_override, build, get_scenario, list_scenarios, merge, DEFAULTS

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK, EXIT_EXPECT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class NumericalFailure(RuntimeError):
    pass


def out_root(arg: str | None) -> Path:
    return Path(arg or os.environ.get("HILLNLS_OUT") or "runs")


def resolve(scenario: str | None, config_path: str | None, sets: list[str]) -> tuple[dict, Path | None]:
    """Resolved configuration from a preset or a TOML file plus overrides."""
    if (scenario is None) == (config_path is None):
        raise ConfigError("give exactly one of a scenario name or --config")
    base_dir = None
    if scenario is not None:
        cfg = get_scenario(scenario).config()
    else:
        path = Path(config_path)
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from None
        cfg = merge(DEFAULTS, raw)
        base_dir = path.parent
    for item in sets:
        cfg = apply_override(cfg, item)
    build(cfg, base_dir)
    return cfg, base_dir


def _hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:10]


def _sans_dt(cfg: dict) -> str:
    c = copy.deepcopy(cfg)
    c["time"].pop("dt")
    c.pop("expected")
    return _hash(c)


def _fmt_t(t: float) -> str:
    return f"{t:.10g}"


def _envelope(series, sol, n):
    _, _, z2, _ = sol(series.times)
    env = (1 + np.abs(z2)) ** (n / 2) * series.norms["linf"]
    last = series.times >= series.times[-1] / 10
    slope = float(np.polyfit(np.log(series.times[last]), np.log(env[last]), 1)[0]) if last.sum() >= 2 else math.nan
    return env, float(env.max() / env[0]), slope


def _check(name, value, ok, target):
    return {"name": name, "value": value, "target": target, "pass": bool(ok)}


def evaluate(cfg: dict, base_dir: Path | None = None) -> dict:
    """Solve, evolve and diagnose; returns the in-memory results.

    Raises
    ------
    NumericalFailure
        If the evolution stops early or the classical solve fails.
    ConfigError
        If a tabulated ``sigma`` ends before ``t_end``.
    """
    evo, dspec = build(cfg, base_dir)
    try:
        sol = solve_fundamental(evo.model, max(evo.t_end, 1.0), tol=float(cfg["time"]["tol"]))
    except IntegrationError as exc:
        raise NumericalFailure(str(exc)) from None
    if sol.t_max < evo.t_end:
        raise ConfigError(f"sigma is only known up to t={sol.t_max}, before t_end={evo.t_end}")
    traj = evolve(evo, sol)
    result = {"config": cfg, "evolution": evo, "diagnostics": dspec, "solution": sol, "trajectory": traj}
    if not traj.completed:
        raise NumericalFailure(f"evolution stopped at t={traj.failed_at}: {traj.message}", result)
    series = build_series(traj.times, traj.fields, sol, evo.grid, r0=dspec.r0, gamma=dspec.gamma,
                          alpha_holder=dspec.alpha_holder)
    accumulate_phase(series, sol, evo.nonlinearity)
    result["series"] = series
    return result


def summarize(result: dict) -> dict:
    """Fitted exponents, Cauchy rates and expectation checks."""
    cfg, sol, series = result["config"], result["solution"], result["series"]
    evo, dspec, traj = result["evolution"], result["diagnostics"], result["trajectory"]
    d = cfg["diagnostics"]
    exp = cfg["expected"]
    n = evo.grid.n
    s: dict = {"t_end": evo.t_end, "dt": evo.dt, "method": evo.method, "samples": int(series.times.size)}
    mass = np.array(traj.mass)
    s["mass_drift"] = float(np.max(np.abs(mass - mass[0])) / mass[0]) if mass[0] > 0 else 0.0
    pe = series.norms["pseudo_energy"]
    s["pseudo_energy_drift"] = float(np.max(np.abs(pe - pe[0])) / pe[0]) if pe[0] > 0 else 0.0
    t_lo, t_hi = max(d["decay_lo"], series.times[0]), min(d["decay_hi"], series.times[-1])
    try:
        s["delta0"] = estimate_delta0(sol, t_lo, t_hi)
    except (ValueError, FloatingPointError):
        s["delta0"] = None
    s["delta1"] = estimate_delta1(sol, n, evo.nonlinearity.rho_S, t_lo, t_hi)
    try:
        df = decay_fit(series, sol, (d["decay_lo"], d["decay_hi"]))
        s["decay"] = {"slope_vs_t": df.slope_vs_t, "residual_vs_t": df.residual_vs_t,
                      "slope_vs_zeta2": df.slope_vs_zeta2, "residual_vs_zeta2": df.residual_vs_zeta2}
    except FitError as exc:
        s["decay"] = {"error": str(exc)}
    env, ratio, slope = _envelope(series, sol, n)
    s["envelope"] = {"max_over_initial": ratio, "last_decade_slope": slope}
    cauchy = {}
    for kind in ("l2", "linf"):
        try:
            c = cauchy_rates(series, kind, dspec.window)
            cauchy[kind] = c
            s[f"cauchy_{kind}"] = {"slope": c.slope, "slope_uncorrected": c.slope_uncorrected,
                                   "residual": c.residual, "converged": c.converged}
        except FitError as exc:
            s[f"cauchy_{kind}"] = {"error": str(exc)}
    result["cauchy"] = cauchy
    ratio_split = series.norms["remainder_bound"] / series.norms["main_term"]
    sel = (series.times >= dspec.window[0]) & (series.times <= dspec.window[1]) & np.isfinite(ratio_split)
    if sel.sum() >= 4 and s["delta0"] is not None:
        rate, _, _ = fit_loglog(series.times[sel], ratio_split[sel])
        s["split_rate"] = {"fitted": rate, "predicted": -s["delta0"] * dspec.alpha_holder}
    checks = []
    if "decay_slope" in exp:
        key = "slope_vs_zeta2" if exp.get("decay_against", "t") == "zeta2" else "slope_vs_t"
        val = s["decay"].get(key, math.nan)
        tol = exp.get("decay_tol", 0.05)
        checks.append(_check(f"decay {key}", val, abs(val - exp["decay_slope"]) <= tol * abs(exp["decay_slope"]),
                             f"{exp['decay_slope']:.4f} +- {100 * tol:.0f}%"))
    if "envelope_factor" in exp:
        checks.append(_check("envelope max/initial", ratio, ratio <= exp["envelope_factor"],
                             f"<= {exp['envelope_factor']}"))
    if "envelope_slope_lo" in exp or "envelope_slope_hi" in exp:
        lo, hi = exp.get("envelope_slope_lo", -math.inf), exp.get("envelope_slope_hi", math.inf)
        checks.append(_check("envelope last-decade slope", slope, lo <= slope <= hi, f"[{lo}, {hi}]"))
    c = cauchy.get("linf")
    if "cauchy_slope_max" in exp:
        val = c.slope if c is not None else math.nan
        checks.append(_check("cauchy linf slope", val, val <= exp["cauchy_slope_max"],
                             f"<= {exp['cauchy_slope_max']}"))
    if "cauchy_gap" in exp:
        gap = c.slope_uncorrected - c.slope if c is not None else math.nan
        checks.append(_check("cauchy uncorrected - corrected", gap, gap >= exp["cauchy_gap"],
                             f">= {exp['cauchy_gap']}"))
    if "split_rate_tol" in exp:
        sr = s.get("split_rate")
        rel = abs(sr["fitted"] / sr["predicted"] - 1) if sr else math.nan
        checks.append(_check("split rate relative error", rel, rel <= exp["split_rate_tol"],
                             f"<= {exp['split_rate_tol']}"))
    if "pe_drift_max" in exp:
        checks.append(_check("pseudo-energy drift", s["pseudo_energy_drift"],
                             s["pseudo_energy_drift"] <= exp["pe_drift_max"], f"<= {exp['pe_drift_max']}"))
    s["expectations"] = checks
    s["pass"] = all(ch["pass"] for ch in checks)
    return s


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(type(o))


def _clean(obj):
    """Replace non-finite floats with None for strict JSON."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_clean(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _write_json(path: Path, obj):
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True, default=_json_default) + "\n")


def persist(result: dict, summary: dict, root: Path, strict_fp: bool) -> Path:
    """Write ``runs/<id>/`` and return its path."""
    cfg = result["config"]
    run_id = _dt.datetime.now().strftime("%Y%m%dT%H%M%S%f") + "-" + _hash([cfg, strict_fp])
    rd = root / run_id
    (rd / "fields").mkdir(parents=True)
    _write_json(rd / "config.json", cfg)
    export_solution_csv(result["solution"], rd / "classical.csv")
    traj = result["trajectory"]
    for t, f in zip(traj.times, traj.fields):
        save_field_csv(f, rd / "fields" / f"t={_fmt_t(t)}.csv")
    series = result.get("series")
    if series is not None:
        cz = result.get("cauchy", {})
        write_series_csv(series, rd / "series.csv", cz.get("l2"), cz.get("linf"))
        (rd / "profiles").mkdir()
        (rd / "phase").mkdir()
        for t, v, p in zip(series.times, series.v_hat, series.accumulated_phase):
            save_field_csv(v, rd / "profiles" / f"{_fmt_t(t)}.csv")
            np.savetxt(rd / "phase" / f"{_fmt_t(t)}.csv", p.reshape(-1), fmt="%.17g")
    summary = dict(summary)
    summary.update({"run_id": run_id, "strict_fp": strict_fp, "config_hash": _hash(cfg),
                    "config_sans_dt": _sans_dt(cfg)})
    _self_convergence(result, summary, root, rd)
    _write_json(rd / "summary.json", summary)
    return rd


def _self_convergence(result, summary, root: Path, rd: Path):
    """Compare the final snapshot with a stored run at twice (or half) the step."""
    traj = result["trajectory"]
    if not traj.fields:
        return
    dt = result["evolution"].dt
    for other in sorted(root.glob("*/summary.json")):
        if other.parent == rd:
            continue
        try:
            o = json.loads(other.read_text())
        except (OSError, ValueError):
            continue
        if o.get("config_sans_dt") != summary["config_sans_dt"] or not o.get("dt"):
            continue
        ratio = o["dt"] / dt
        if not (abs(ratio - 2) < 1e-9 or abs(ratio - 0.5) < 1e-9):
            continue
        last = sorted(other.parent.glob("fields/t=*.csv"), key=lambda p: float(p.stem[2:]))
        if not last:
            continue
        g = result["evolution"].grid
        try:
            a = resample(traj.fields[-1], g)
            b = resample(load_field_csv(last[-1]), g)
        except AliasingError:
            continue
        summary["self_convergence"] = {"reference_run": o["run_id"], "reference_dt": o["dt"],
                                       "relative_difference": relative_difference(a, b)}
        return


def run_once(cfg: dict, base_dir: Path | None, root: Path, strict_fp: bool = False) -> tuple[int, Path | None, dict]:
    """Evaluate, persist and return ``(exit code, run dir, summary)``."""
    old = np.seterr(over="raise", invalid="raise") if strict_fp else None
    try:
        try:
            result = evaluate(cfg, base_dir)
        except (NumericalFailure, FloatingPointError) as exc:
            partial = exc.args[1] if len(exc.args) > 1 else None
            summary = {"error": str(exc.args[0]), "pass": False}
            rd = persist(partial, summary, root, strict_fp) if partial else None
            return EXIT_NUMERIC, rd, summary
        summary = summarize(result)
        rd = persist(result, summary, root, strict_fp)
        return (EXIT_OK if summary["pass"] else EXIT_EXPECT), rd, summary
    finally:
        if old is not None:
            np.seterr(**old)


# ----------------------------------------------------------------------------- report / SVG

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]


def svg_loglog(curves: list[tuple[str, np.ndarray, np.ndarray]], title: str, xlabel: str, ylabel: str,
               note: str = "", logy: bool = True, width: int = 640, height: int = 420) -> str:
    """A self-contained SVG line plot; ``curves`` are ``(label, x, y)``."""
    pts = [(lab, np.asarray(x, float), np.asarray(y, float)) for lab, x, y in curves]
    pts = [(lab, x[(x > 0) & np.isfinite(y) & ((y > 0) if logy else True)],
            y[(x > 0) & np.isfinite(y) & ((y > 0) if logy else True)]) for lab, x, y in pts]
    pts = [p for p in pts if p[1].size]
    ml, mr, mt, mb = 70, 20, 40, 50
    head = f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">'
    body = [head, f'<rect width="{width}" height="{height}" fill="white"/>',
            f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>']
    if not pts:
        body.append(f'<text x="{width / 2}" y="{height / 2}" text-anchor="middle">no data</text></svg>')
        return "\n".join(body)
    fy = np.log10 if logy else (lambda v: v)
    X = np.concatenate([np.log10(x) for _, x, _ in pts])
    Y = np.concatenate([fy(y) for _, _, y in pts])
    x0, x1 = X.min(), X.max() if X.max() > X.min() else X.min() + 1
    y0, y1 = Y.min(), Y.max() if Y.max() > Y.min() else Y.min() + 1
    pw, ph = width - ml - mr, height - mt - mb

    def px(v):
        return ml + (v - x0) / (x1 - x0) * pw

    def py(v):
        return mt + ph - (v - y0) / (y1 - y0) * ph

    body.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for k in range(5):
        xv, yv = x0 + k * (x1 - x0) / 4, y0 + k * (y1 - y0) / 4
        body.append(f'<text x="{px(xv):.1f}" y="{mt + ph + 16}" text-anchor="middle">{10 ** xv:.3g}</text>')
        lab = f"{10 ** yv:.3g}" if logy else f"{yv:.3g}"
        body.append(f'<text x="{ml - 6}" y="{py(yv) + 4:.1f}" text-anchor="end">{lab}</text>')
    body.append(f'<text x="{ml + pw / 2}" y="{height - 10}" text-anchor="middle">{xlabel}</text>')
    body.append(f'<text x="15" y="{mt + ph / 2}" transform="rotate(-90 15 {mt + ph / 2})" text-anchor="middle">{ylabel}</text>')
    for i, (lab, x, y) in enumerate(pts):
        col = _COLORS[i % len(_COLORS)]
        path = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(np.log10(x), fy(y)))
        body.append(f'<polyline fill="none" stroke="{col}" stroke-width="1.5" points="{path}"/>')
        body.append(f'<text x="{ml + 10}" y="{mt + 16 + 16 * i}" fill="{col}">{lab}</text>')
    if note:
        body.append(f'<text x="{ml + pw - 6}" y="{mt + 16}" text-anchor="end">{note}</text>')
    body.append("</svg>")
    return "\n".join(body)


def read_series(path: Path) -> dict[str, np.ndarray]:
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    out = {}
    for k in rows[0]:
        out[k] = np.array([float(r[k]) if r[k] != "" else math.nan for r in rows])
    return out


def _find_run(root: Path, run_id: str) -> Path:
    rd = root / run_id
    if not (rd / "summary.json").exists():
        matches = [p for p in root.glob(f"{run_id}*") if (p / "summary.json").exists()]
        if len(matches) != 1:
            raise ConfigError(f"no unique run {run_id!r} under {root}")
        rd = matches[0]
    return rd


def report(root: Path, ids: list[str], plots: bool = True) -> str:
    """Text report for one run, or an overlay comparison of two."""
    dirs = [_find_run(root, i) for i in ids]
    lines = []
    data = []
    for rd in dirs:
        s = json.loads((rd / "summary.json").read_text())
        ser = read_series(rd / "series.csv") if (rd / "series.csv").exists() else None
        data.append((rd, s, ser))
        lines.append(f"run {rd.name}  method={s.get('method')} dt={s.get('dt')} t_end={s.get('t_end')}")
        if "error" in s:
            lines.append(f"  error: {s['error']}")
        dec = s.get("decay", {})
        if "slope_vs_t" in dec:
            lines.append(f"  decay slope vs t {dec['slope_vs_t']:.4f}, vs 1+|zeta2| {dec['slope_vs_zeta2']:.4f}")
        for kind in ("l2", "linf"):
            c = s.get(f"cauchy_{kind}", {})
            if c.get("slope") is not None:
                lines.append(f"  cauchy {kind}: corrected {c['slope']:.4f}, uncorrected {c['slope_uncorrected']:.4f}")
            elif c.get("converged"):
                lines.append(f"  cauchy {kind}: converged (differences at roundoff)")
        if "pseudo_energy_drift" in s:
            lines.append(f"  pseudo-energy drift {s['pseudo_energy_drift']:.3e}, mass drift {s['mass_drift']:.3e}")
        if "self_convergence" in s:
            sc = s["self_convergence"]
            lines.append(f"  vs dt={sc['reference_dt']}: relative difference {sc['relative_difference']:.3e}")
        for ch in s.get("expectations", []):
            lines.append(f"  [{'pass' if ch['pass'] else 'FAIL'}] {ch['name']}: {ch['value']} (target {ch['target']})")
    if plots and all(ser is not None for _, _, ser in data):
        target = dirs[0] if len(dirs) == 1 else root / ("compare-" + "-".join(d.name[-10:] for d in dirs))
        target.mkdir(exist_ok=True)
        tag = (lambda rd: "") if len(dirs) == 1 else (lambda rd: f" {rd.name[-10:]}")
        note = ""
        if len(dirs) == 2:
            a, b = data[0][2], data[1][2]
            if a["t"].size == b["t"].size:
                diff = np.max(np.abs(a["linf"] - b["linf"]) / np.maximum(np.abs(b["linf"]), 1e-300))
                note = f"max rel. Linf difference {diff:.2e}"
                lines.append(f"comparison: {note}")
        (target / "decay.svg").write_text(svg_loglog(
            [("||u||_inf" + tag(rd), ser["t"], ser["linf"]) for rd, _, ser in data],
            "Linf decay", "t", "||u(t)||_inf", note))
        cc = []
        for rd, _, ser in data:
            cc.append(("corrected" + tag(rd), ser["t"], ser["cauchy_linf"]))
            prof = sorted((rd / "profiles").glob("*.csv"), key=lambda p: float(p.stem))
            unc = _uncorrected(prof)
            if unc is not None:
                cc.append(("uncorrected" + tag(rd), ser["t"][:-1], unc))
        (target / "cauchy.svg").write_text(svg_loglog(cc, "Cauchy differences", "t",
                                                      "||w(t) - w(t_last)||_inf", note))
        (target / "pseudo_energy.svg").write_text(svg_loglog(
            [("pseudo-energy" + tag(rd), ser["t"], ser["pseudo_energy"] / ser["pseudo_energy"][0])
             for rd, _, ser in data], "Pseudo-energy norm (relative)", "t", "ratio", note, logy=False))
        lines.append(f"plots written to {target}")
    return "\n".join(lines)


def _uncorrected(profile_paths):
    if len(profile_paths) < 2:
        return None
    last = load_field_csv(profile_paths[-1]).samples
    return np.array([np.max(np.abs(load_field_csv(p).samples - last)) for p in profile_paths[:-1]])


# ----------------------------------------------------------------------------- sweep

def _sweep_worker(args):
    cfg, base_dir, root, strict_fp = args
    code, rd, summary = run_once(cfg, base_dir, Path(root), strict_fp)
    return code, str(rd) if rd else None, summary


def sweep_configs(cfg: dict, grid_sets: list[str]) -> list[tuple[list[str], dict]]:
    """Cartesian product of ``key=v1,v2,...`` overrides."""
    axes = []
    for item in grid_sets:
        if "=" not in item:
            raise ConfigError(f"sweep override {item!r} is not key=values")
        k, vals = item.split("=", 1)
        axes.append([f"{k}={v}" for v in vals.split(",")])
    out = []
    for combo in itertools.product(*axes) if axes else [()]:
        c = cfg
        for item in combo:
            c = apply_override(c, item)
        out.append((list(combo), c))
    return out


# ----------------------------------------------------------------------------- entry point

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hillnls", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="verb", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output root (default $HILLNLS_OUT or ./runs)")
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="stdout format")
    sub.add_parser("list", parents=[common], help="list preset scenarios")
    for verb in ("run", "sweep"):
        q = sub.add_parser(verb, parents=[common], help=f"{verb} a scenario or a config file")
        q.add_argument("scenario", nargs="?", help="preset name (see list)")
        q.add_argument("--config", help="TOML configuration file")
        q.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override section.key (repeatable)" + ("; comma lists span the sweep" if verb == "sweep" else ""))
        q.add_argument("--strict-fp", action="store_true", help="raise on floating-point overflow or invalid results")
        if verb == "sweep":
            q.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    r = sub.add_parser("report", parents=[common], help="report one run or compare two")
    r.add_argument("ids", nargs="+", help="run id(s) or unique prefixes")
    r.add_argument("--no-plots", action="store_true")
    return p


def _emit(rows: list[dict], fmt: str):
    if fmt == "json":
        print(json.dumps(_clean(rows), indent=2, default=_json_default))
    else:
        if not rows:
            return
        w = csv.DictWriter(sys.stdout, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    root = out_root(args.out)
    try:
        if args.verb == "list":
            _emit([{"name": n, "description": d} for n, d in list_scenarios()], args.format)
            return EXIT_OK
        if args.verb == "report":
            print(report(root, args.ids, plots=not args.no_plots))
            return EXIT_OK
        if args.verb == "run":
            cfg, base = resolve(args.scenario, args.config, args.set)
            root.mkdir(parents=True, exist_ok=True)
            code, rd, summary = run_once(cfg, base, root, args.strict_fp)
            row = {"run": rd.name if rd else "", "exit": code, "pass": summary.get("pass"),
                   "error": summary.get("error", "")}
            if args.format == "json":
                print(json.dumps(_clean({**row, "summary": summary}), indent=2, default=_json_default))
            else:
                _emit([row], "csv")
            return code
        if args.verb == "sweep":
            plain = [s for s in args.set if "," not in s]
            multi = [s for s in args.set if "," in s]
            cfg, base = resolve(args.scenario, args.config, plain)
            jobs = sweep_configs(cfg, multi)
            root.mkdir(parents=True, exist_ok=True)
            work = [(c, base, str(root), args.strict_fp) for _, c in jobs]
            with concurrent.futures.ProcessPoolExecutor(max_workers=max(1, args.jobs)) as ex:
                results = list(ex.map(_sweep_worker, work))
            rows = [{"overrides": " ".join(o), "run": Path(rd).name if rd else "", "exit": code,
                     "pass": s.get("pass")} for (o, _), (code, rd, s) in zip(jobs, results)]
            _emit(rows, args.format)
            return max(code for code, _, _ in results)
    except ConfigError as exc:
        print(f"hillnls: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
